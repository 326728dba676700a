#pragma once

#include <optional>
#include <string>
#include <vector>

#include "swigcheck/graph.hpp"

namespace swigcheck {

/// Direction of the edge between a path node and its successor.
enum class EdgeDir { Forward, Backward };  // Forward: node -> next, Backward: node <- next

struct PathStep {
  NodeId node;
  std::optional<EdgeDir> to_next;  // empty on the last node

  bool operator==(const PathStep&) const = default;
};

/// Status of one interior node of a path given a conditioning set.
struct InteriorNode {
  NodeId node;
  bool collider = false;
  bool open = false;
  std::string reason;

  bool operator==(const InteriorNode&) const = default;
};

struct PathCertificate {
  std::vector<PathStep> steps;
  bool open = false;
  std::vector<InteriorNode> interior;

  std::vector<NodeId> nodes() const {
    std::vector<NodeId> out;
    for (const auto& s : steps) out.push_back(s.node);
    return out;
  }

  /// Renders e.g. "X←C→D".
  std::string to_string() const {
    std::string out;
    for (const auto& s : steps) {
      out += s.node;
      if (s.to_next) out += *s.to_next == EdgeDir::Forward ? "→" : "←";
    }
    return out;
  }

  bool operator==(const PathCertificate&) const = default;
};

struct DSeparation {
  bool separated = false;
  std::optional<PathCertificate> certificate;  // an open path when not separated
};

namespace detail {

inline NodeMask bit(std::size_t i) { return NodeMask{1} << i; }

inline void check_query(const Dag& g, const NodeSet& a, const NodeSet& b, const NodeSet& z) {
  for (const auto* s : {&a, &b, &z})
    for (const auto& n : *s) g.index_of(n);
  auto overlap = [](const NodeSet& p, const NodeSet& q) -> const NodeId* {
    for (const auto& n : p)
      if (q.count(n)) return &n;
    return nullptr;
  };
  if (const auto* n = overlap(a, b); n) throw OverlappingSets("node " + *n + " appears in both A and B");
  if (const auto* n = overlap(a, z); n) throw OverlappingSets("node " + *n + " appears in both A and Z");
  if (const auto* n = overlap(b, z); n) throw OverlappingSets("node " + *n + " appears in both B and Z");
}

/// Ancestral moralization test on node masks. True iff `a` and `b` are
/// d-separated given `z`.
inline bool d_separated_mask(const Dag& g, NodeMask a, NodeMask b, NodeMask z) {
  if (!a || !b) return true;
  const NodeMask seed = a | b | z;
  const NodeMask relevant = seed | ancestor_mask(g, seed);
  const auto n = g.size();
  std::vector<NodeMask> adj(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    if (!(relevant & bit(v))) continue;
    const auto& ps = g.parent_indices(v);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      adj[v] |= bit(ps[i]);
      adj[ps[i]] |= bit(v);
      for (std::size_t j = i + 1; j < ps.size(); ++j) {
        adj[ps[i]] |= bit(ps[j]);
        adj[ps[j]] |= bit(ps[i]);
      }
    }
  }
  NodeMask seen = a;
  NodeMask frontier = a;
  while (frontier) {
    NodeMask next = 0;
    for (std::size_t v = 0; v < n; ++v)
      if (frontier & bit(v)) next |= adj[v];
    next &= relevant & ~z & ~seen;
    if (next & b) return false;
    seen |= next;
    frontier = next;
  }
  return true;
}

/// Whether interior node `v` (between `prev` and `next`) lets the path
/// through given `z`.
inline InteriorNode classify(const Dag& g, std::size_t prev, std::size_t v, std::size_t next, NodeMask z) {
  const auto& name = g.nodes()[v].name;
  bool collider = g.has_edge(g.nodes()[prev].name, name) && g.has_edge(g.nodes()[next].name, name);
  InteriorNode out{name, collider, false, {}};
  if (collider) {
    if (z & bit(v)) {
      out.open = true;
      out.reason = "collider in the conditioning set";
    } else if (NodeMask hit = descendant_mask(g, bit(v)) & z) {
      out.open = true;
      out.reason = "collider with conditioned descendant " + *g.set_of(hit).begin();
    } else {
      out.reason = "unconditioned collider blocks";
    }
  } else if (z & bit(v)) {
    out.reason = "conditioned non-collider blocks";
  } else {
    out.open = true;
    out.reason = "unconditioned non-collider";
  }
  return out;
}

inline PathCertificate annotate(const Dag& g, const std::vector<std::size_t>& path, NodeMask z) {
  PathCertificate cert;
  cert.open = true;
  for (std::size_t i = 0; i < path.size(); ++i) {
    PathStep step{g.nodes()[path[i]].name, std::nullopt};
    if (i + 1 < path.size())
      step.to_next = g.has_edge(step.node, g.nodes()[path[i + 1]].name) ? EdgeDir::Forward
                                                                        : EdgeDir::Backward;
    cert.steps.push_back(std::move(step));
  }
  for (std::size_t i = 1; i + 1 < path.size(); ++i) {
    auto note = classify(g, path[i - 1], path[i], path[i + 1], z);
    cert.open = cert.open && note.open;
    cert.interior.push_back(std::move(note));
  }
  return cert;
}

/// Neighbours of v (parents and children) in lexicographic order.
inline std::vector<std::size_t> neighbours(const Dag& g, std::size_t v) {
  std::vector<std::size_t> out(g.parent_indices(v));
  out.insert(out.end(), g.child_indices(v).begin(), g.child_indices(v).end());
  std::sort(out.begin(), out.end(),
            [&g](std::size_t p, std::size_t q) { return g.nodes()[p].name < g.nodes()[q].name; });
  return out;
}

}  // namespace detail

/// Evaluates an explicit path (consecutive nodes must be adjacent) against
/// the blocking rules.
inline PathCertificate evaluate_path(const Dag& g, const std::vector<NodeId>& path, const NodeSet& z) {
  std::vector<std::size_t> idx;
  for (const auto& n : path) idx.push_back(g.index_of(n));
  for (std::size_t i = 0; i + 1 < path.size(); ++i)
    if (!g.has_edge(path[i], path[i + 1]) && !g.has_edge(path[i + 1], path[i]))
      throw GraphError(path[i] + " and " + path[i + 1] + " are not adjacent");
  return detail::annotate(g, idx, g.mask_of(z));
}

/// First open path from A to B given Z in shortlex order: fewest edges, then
/// lexicographic by node names. Found by depth-limited search over simple
/// paths; only ancestors of A, B and Z can lie on an open path.
inline std::optional<PathCertificate> first_open_path(const Dag& g, const NodeSet& a, const NodeSet& b,
                                                      const NodeSet& z) {
  detail::check_query(g, a, b, z);
  const NodeMask am = g.mask_of(a), bm = g.mask_of(b), zm = g.mask_of(z);
  const NodeMask seed = am | bm | zm;
  const NodeMask relevant = seed | ancestor_mask(g, seed);
  std::vector<std::vector<std::size_t>> nbrs(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) nbrs[v] = detail::neighbours(g, v);

  std::vector<std::size_t> path;
  NodeMask on_path = 0;
  std::optional<PathCertificate> found;

  std::size_t limit = 0;  // number of edges on the paths being searched
  auto dfs = [&](auto&& self, std::size_t v) -> bool {
    for (auto w : nbrs[v]) {
      if (!(relevant & detail::bit(w)) || (on_path & detail::bit(w)) || (am & detail::bit(w))) continue;
      if (path.size() >= 2 && !detail::classify(g, path[path.size() - 2], v, w, zm).open) continue;
      const bool last = path.size() == limit;
      if (last != static_cast<bool>(bm & detail::bit(w))) continue;  // B only as the endpoint
      path.push_back(w);
      on_path |= detail::bit(w);
      if (last) {
        found = detail::annotate(g, path, zm);
        return true;
      }
      if (self(self, w)) return true;
      path.pop_back();
      on_path &= ~detail::bit(w);
    }
    return false;
  };

  for (limit = 1; limit < g.size(); ++limit) {
    for (auto start : g.lexicographic_order()) {
      if (!(am & detail::bit(start))) continue;
      path = {start};
      on_path = detail::bit(start);
      if (dfs(dfs, start)) return found;
    }
  }
  return std::nullopt;
}

/// d-separation of A and B given Z. The verdict comes from the ancestral
/// moralization test; when the sets are connected the certificate is the
/// lexicographically first open path.
inline DSeparation d_separated(const Dag& g, const NodeSet& a, const NodeSet& b, const NodeSet& z) {
  detail::check_query(g, a, b, z);
  DSeparation out;
  out.separated = detail::d_separated_mask(g, g.mask_of(a), g.mask_of(b), g.mask_of(z));
  if (!out.separated) out.certificate = first_open_path(g, a, b, z);
  return out;
}

/// Every simple path between two nodes, in lexicographic order.
inline std::vector<std::vector<NodeId>> all_paths(const Dag& g, const NodeId& from, const NodeId& to) {
  const auto s = g.index_of(from), t = g.index_of(to);
  std::vector<std::vector<NodeId>> out;
  std::vector<std::size_t> path{s};
  NodeMask on_path = detail::bit(s);
  auto dfs = [&](auto&& self, std::size_t v) -> void {
    for (auto w : detail::neighbours(g, v)) {
      if (on_path & detail::bit(w)) continue;
      path.push_back(w);
      if (w == t) {
        std::vector<NodeId> names;
        for (auto i : path) names.push_back(g.nodes()[i].name);
        out.push_back(std::move(names));
      } else {
        on_path |= detail::bit(w);
        self(self, w);
        on_path &= ~detail::bit(w);
      }
      path.pop_back();
    }
  };
  if (s != t) dfs(dfs, s);
  return out;
}

/// Paths from x to d whose first edge points into x, each annotated
/// open/blocked given z.
inline std::vector<PathCertificate> backdoor_paths(const Dag& g, const NodeId& x, const NodeId& d,
                                                   const NodeSet& z = {}) {
  if (x == d) throw OverlappingSets("treatment and outcome must differ");
  g.index_of(x);
  g.index_of(d);
  std::vector<PathCertificate> out;
  for (const auto& p : all_paths(g, x, d))
    if (g.has_edge(p[1], p[0])) out.push_back(evaluate_path(g, p, z));
  return out;
}

}  // namespace swigcheck
