#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "swigcheck/error.hpp"

namespace swigcheck {

using NodeId = std::string;
using NodeSet = std::set<NodeId>;

/// Graphs are capped so node sets fit in a 64-bit mask and adjustment-set
/// enumeration stays tractable.
inline constexpr std::size_t kMaxNodes = 24;

inline bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto alpha = [](char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; };
  auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (!alpha(s.front())) return false;
  return std::all_of(s.begin() + 1, s.end(), [&](char c) { return alpha(c) || digit(c); });
}

enum class RoleKind { Treatment, Outcome, Selection, Covariate };

struct Role {
  RoleKind kind = RoleKind::Covariate;
  int stage = 0;  // selection stage, 1-based; 0 for other roles

  static Role treatment() { return {RoleKind::Treatment, 0}; }
  static Role outcome() { return {RoleKind::Outcome, 0}; }
  static Role selection(int stage = 1) { return {RoleKind::Selection, stage}; }
  static Role covariate() { return {RoleKind::Covariate, 0}; }

  bool operator==(const Role&) const = default;
};

inline std::string_view to_string(RoleKind kind) {
  switch (kind) {
    case RoleKind::Treatment: return "treatment";
    case RoleKind::Outcome: return "outcome";
    case RoleKind::Selection: return "selection";
    case RoleKind::Covariate: return "covariate";
  }
  return "covariate";
}

inline std::optional<RoleKind> role_kind_from_string(std::string_view s) {
  if (s == "treatment") return RoleKind::Treatment;
  if (s == "outcome") return RoleKind::Outcome;
  if (s == "selection") return RoleKind::Selection;
  if (s == "covariate") return RoleKind::Covariate;
  return std::nullopt;
}

/// A variable of the causal diagram. Selection nodes produced by matching
/// name the matched covariate and the grouping variable it is balanced across.
struct Node {
  NodeId name;
  Role role;
  bool observed = true;
  std::optional<NodeId> match;
  std::optional<NodeId> balance;

  bool operator==(const Node&) const = default;
};

struct Edge {
  NodeId from;
  NodeId to;
  bool dashed = false;

  bool operator==(const Edge&) const = default;
};

struct EdgeOrder {
  bool operator()(const Edge& a, const Edge& b) const {
    return std::tie(a.from, a.to) < std::tie(b.from, b.to);
  }
};

using EdgeSet = std::set<Edge, EdgeOrder>;
using NodeMask = std::uint64_t;

/// Directed graph over named nodes. Nodes keep declaration order; edges are a
/// sorted set, so every iteration order is deterministic. The container
/// admits invalid states (cycles, dangling edges) so that `validate` can
/// report them.
class Dag {
 public:
  Dag() = default;
  explicit Dag(std::string name) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

  void add_node(Node node) {
    if (!is_identifier(node.name)) throw GraphError("invalid node name '" + node.name + "'");
    if (index_.count(node.name)) throw GraphError("duplicate node '" + node.name + "'");
    index_.emplace(node.name, nodes_.size());
    nodes_.push_back(std::move(node));
    rebuild();
  }

  void add_node(const NodeId& name, Role role = Role::covariate(), bool observed = true) {
    add_node(Node{name, role, observed, std::nullopt, std::nullopt});
  }

  void add_edge(const NodeId& from, const NodeId& to, bool dashed = false) {
    if (!edges_.insert(Edge{from, to, dashed}).second)
      throw GraphError("duplicate edge " + from + " -> " + to);
    rebuild();
  }

  bool remove_edge(const NodeId& from, const NodeId& to) {
    bool erased = edges_.erase(Edge{from, to, false}) > 0;
    if (erased) rebuild();
    return erased;
  }

  bool has_edge(const NodeId& from, const NodeId& to) const {
    return edges_.count(Edge{from, to, false}) > 0;
  }

  bool has_node(const NodeId& name) const { return index_.count(name) > 0; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const EdgeSet& edges() const { return edges_; }

  std::size_t index_of(const NodeId& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw UnknownNode("unknown node '" + name + "'");
    return it->second;
  }

  const Node& node(const NodeId& name) const { return nodes_[index_of(name)]; }
  Node& node(const NodeId& name) { return nodes_[index_of(name)]; }

  /// Parents and children in lexicographic name order.
  std::vector<NodeId> parents(const NodeId& name) const { return names(parents_[index_of(name)]); }
  std::vector<NodeId> children(const NodeId& name) const { return names(children_[index_of(name)]); }

  // Index-level adjacency, sorted by node name.
  const std::vector<std::size_t>& parent_indices(std::size_t i) const { return parents_[i]; }
  const std::vector<std::size_t>& child_indices(std::size_t i) const { return children_[i]; }
  /// Node indices sorted by name.
  const std::vector<std::size_t>& lexicographic_order() const { return lex_order_; }

  std::optional<NodeId> treatment() const { return first_with(RoleKind::Treatment); }
  std::optional<NodeId> outcome() const { return first_with(RoleKind::Outcome); }

  /// Selection nodes ordered by stage.
  std::vector<NodeId> selection() const {
    std::vector<const Node*> sel;
    for (const auto& n : nodes_)
      if (n.role.kind == RoleKind::Selection) sel.push_back(&n);
    std::stable_sort(sel.begin(), sel.end(),
                     [](const Node* a, const Node* b) { return a->role.stage < b->role.stage; });
    std::vector<NodeId> out;
    for (const auto* n : sel) out.push_back(n->name);
    return out;
  }

  NodeSet node_set() const {
    NodeSet out;
    for (const auto& n : nodes_) out.insert(n.name);
    return out;
  }

  NodeMask mask_of(const NodeSet& set) const {
    NodeMask m = 0;
    for (const auto& n : set) m |= NodeMask{1} << index_of(n);
    return m;
  }

  NodeSet set_of(NodeMask mask) const {
    NodeSet out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (mask >> i & 1U) out.insert(nodes_[i].name);
    return out;
  }

  bool operator==(const Dag& other) const {
    if (name_ != other.name_ || nodes_ != other.nodes_ || edges_.size() != other.edges_.size())
      return false;
    return std::equal(edges_.begin(), edges_.end(), other.edges_.begin());
  }

 private:
  std::optional<NodeId> first_with(RoleKind kind) const {
    for (const auto& n : nodes_)
      if (n.role.kind == kind) return n.name;
    return std::nullopt;
  }

  std::vector<NodeId> names(const std::vector<std::size_t>& idx) const {
    std::vector<NodeId> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(nodes_[i].name);
    return out;
  }

  void rebuild() {
    parents_.assign(nodes_.size(), {});
    children_.assign(nodes_.size(), {});
    for (const auto& e : edges_) {
      auto f = index_.find(e.from);
      auto t = index_.find(e.to);
      if (f == index_.end() || t == index_.end()) continue;
      parents_[t->second].push_back(f->second);
      children_[f->second].push_back(t->second);
    }
    lex_order_.resize(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) lex_order_[i] = i;
    auto by_name = [this](std::size_t a, std::size_t b) { return nodes_[a].name < nodes_[b].name; };
    std::sort(lex_order_.begin(), lex_order_.end(), by_name);
    for (auto& v : parents_) std::sort(v.begin(), v.end(), by_name);
    for (auto& v : children_) std::sort(v.begin(), v.end(), by_name);
  }

  std::string name_ = "G";
  std::vector<Node> nodes_;
  EdgeSet edges_;
  std::unordered_map<NodeId, std::size_t> index_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::size_t> lex_order_;
};

namespace detail {

inline NodeMask reach(const Dag& g, NodeMask start, bool forward) {
  NodeMask seen = 0;
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (start >> i & 1U) stack.push_back(i);
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    const auto& next = forward ? g.child_indices(v) : g.parent_indices(v);
    for (auto w : next) {
      if (seen >> w & 1U) continue;
      seen |= NodeMask{1} << w;
      stack.push_back(w);
    }
  }
  return seen;
}

}  // namespace detail

/// Proper descendants of every node in `mask` (a node is excluded unless it
/// is reachable from another member).
inline NodeMask descendant_mask(const Dag& g, NodeMask mask) { return detail::reach(g, mask, true); }
inline NodeMask ancestor_mask(const Dag& g, NodeMask mask) { return detail::reach(g, mask, false); }

inline NodeSet descendants(const Dag& g, const NodeId& node) {
  auto i = g.index_of(node);
  return g.set_of(descendant_mask(g, NodeMask{1} << i) & ~(NodeMask{1} << i));
}

inline NodeSet ancestors(const Dag& g, const NodeId& node) {
  auto i = g.index_of(node);
  return g.set_of(ancestor_mask(g, NodeMask{1} << i) & ~(NodeMask{1} << i));
}

inline bool is_descendant(const Dag& g, const NodeId& node, const NodeId& of) {
  return descendants(g, of).count(node) > 0;
}

namespace detail {

/// Returns one directed cycle (first node repeated at the end), or empty.
inline std::vector<NodeId> find_cycle(const Dag& g) {
  const auto n = g.size();
  std::vector<int> color(n, 0);  // 0 new, 1 on path, 2 done
  std::vector<std::size_t> path;
  for (std::size_t root = 0; root < n; ++root) {
    if (color[root]) continue;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
    color[root] = 1;
    path.push_back(root);
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      const auto& kids = g.child_indices(v);
      if (next == kids.size()) {
        color[v] = 2;
        path.pop_back();
        stack.pop_back();
        continue;
      }
      auto w = kids[next++];
      if (color[w] == 1) {
        std::vector<NodeId> cycle;
        for (auto it = std::find(path.begin(), path.end(), w); it != path.end(); ++it)
          cycle.push_back(g.nodes()[*it].name);
        cycle.push_back(g.nodes()[w].name);
        return cycle;
      }
      if (color[w] == 0) {
        color[w] = 1;
        path.push_back(w);
        stack.emplace_back(w, 0);
      }
    }
  }
  return {};
}

}  // namespace detail

/// Topological order with ties broken by declaration order. Throws
/// CycleError listing one cycle when the graph is cyclic.
inline std::vector<NodeId> topological_order(const Dag& g) {
  const auto n = g.size();
  std::vector<std::size_t> indeg(n);
  std::set<std::size_t> ready;
  for (std::size_t v = 0; v < n; ++v)
    if (!(indeg[v] = g.parent_indices(v).size())) ready.insert(v);
  std::vector<NodeId> out;
  while (!ready.empty()) {
    auto v = *ready.begin();
    ready.erase(ready.begin());
    out.push_back(g.nodes()[v].name);
    for (auto w : g.child_indices(v))
      if (--indeg[w] == 0) ready.insert(w);
  }
  if (out.size() != n) {
    std::string msg = "cycle:";
    auto cycle = detail::find_cycle(g);
    for (std::size_t k = 0; k < cycle.size(); ++k) msg += (k ? " -> " : " ") + cycle[k];
    throw CycleError(msg);
  }
  return out;
}

/// Checks every structural invariant and returns the graph unchanged.
inline Dag validate(const Dag& g) {
  if (g.size() > kMaxNodes)
    throw GraphError("graph has " + std::to_string(g.size()) + " nodes; the limit is " +
                     std::to_string(kMaxNodes));
  for (const auto& e : g.edges()) {
    if (!g.has_node(e.from) || !g.has_node(e.to))
      throw DanglingEdgeError("edge " + e.from + " -> " + e.to + " references an undeclared node");
    if (e.from == e.to) throw CycleError("self-loop: " + e.from + " -> " + e.to);
  }
  topological_order(g);

  int treatments = 0, outcomes = 0;
  std::vector<int> stages;
  for (const auto& n : g.nodes()) {
    switch (n.role.kind) {
      case RoleKind::Treatment: ++treatments; break;
      case RoleKind::Outcome: ++outcomes; break;
      case RoleKind::Selection:
        if (n.role.stage < 1) throw RoleError("selection node " + n.name + " has stage < 1");
        stages.push_back(n.role.stage);
        break;
      case RoleKind::Covariate: break;
    }
    if ((n.match || n.balance) && n.role.kind != RoleKind::Selection)
      throw RoleError("match/balance given on non-selection node " + n.name);
    if (n.match.has_value() != n.balance.has_value())
      throw RoleError("selection node " + n.name + " needs both match and balance");
    if (n.match) {
      for (const auto* ref : {&*n.match, &*n.balance}) {
        if (!g.has_node(*ref)) throw UnknownNode("unknown node '" + *ref + "' in matching of " + n.name);
        if (!g.has_edge(*ref, n.name))
          throw RoleError("matched selection node " + n.name + " must be a child of " + *ref);
      }
      if (*n.match == *n.balance) throw RoleError("selection node " + n.name + " matches a node on itself");
    }
  }
  if (treatments > 1) throw RoleError("more than one treatment node");
  if (outcomes > 1) throw RoleError("more than one outcome node");
  std::sort(stages.begin(), stages.end());
  for (std::size_t i = 0; i < stages.size(); ++i)
    if (stages[i] != static_cast<int>(i) + 1)
      throw RoleError("selection stages must be 1..k without gaps or repeats");

  auto x = g.treatment();
  auto d = g.outcome();
  if (x && d && is_descendant(g, *x, *d))
    throw RoleError("treatment " + *x + " is a descendant of outcome " + *d);
  return g;
}

}  // namespace swigcheck
