#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <vector>

#include "swigcheck/dseparation.hpp"
#include "swigcheck/graph.hpp"

namespace swigcheck {

/// Nodes set to fixed values, in declaration order. Each target carries the
/// lowercase symbol of the value it is set to (X = x).
struct Intervention {
  struct Target {
    NodeId node;
    std::string label;
    bool operator==(const Target&) const = default;
  };
  std::vector<Target> targets;

  static Intervention on(NodeId node, std::string label) { return Intervention{{{std::move(node), std::move(label)}}}; }
  Intervention then(NodeId node, std::string label) const {
    auto out = *this;
    out.targets.push_back({std::move(node), std::move(label)});
    return out;
  }

  bool operator==(const Intervention&) const = default;
};

/// Default value symbol for intervening on a node: its lowercased name.
inline std::string default_label(const NodeId& node) {
  std::string out = node;
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

enum class SwigNodeKind { Random, Fixed };

struct SwigNode {
  NodeId base;
  SwigNodeKind kind = SwigNodeKind::Random;
  std::vector<std::string> suffix;  // Random only: labels of interventions it descends from
  std::string label;                // Fixed only

  /// "D", "D^x", "S^{x,d}" for random halves; the value symbol for fixed halves.
  std::string display() const {
    if (kind == SwigNodeKind::Fixed) return label;
    if (suffix.empty()) return base;
    if (suffix.size() == 1) return base + "^" + suffix.front();
    std::string out = base + "^{";
    for (std::size_t i = 0; i < suffix.size(); ++i) out += (i ? "," : "") + suffix[i];
    return out + "}";
  }

  bool operator==(const SwigNode&) const = default;
};

struct SwigEdge {
  std::size_t from;
  std::size_t to;
  bool dashed = false;
  bool operator==(const SwigEdge&) const = default;
};

/// Single-world intervention graph. Fixed halves are kept for rendering;
/// conditional-independence queries run on `random_graph()`, which drops
/// them together with their outgoing edges.
class Swig {
 public:
  const Dag& source() const { return source_; }
  const Intervention& intervention() const { return intervention_; }
  const std::vector<SwigNode>& nodes() const { return nodes_; }
  const std::vector<SwigEdge>& edges() const { return edges_; }
  const Dag& random_graph() const { return random_; }

  std::size_t random_index(const NodeId& base) const {
    auto it = random_of_.find(base);
    if (it == random_of_.end()) throw UnknownNode("unknown node '" + base + "'");
    return it->second;
  }

  /// Maps a query name (base name or counterfactual display name) to the
  /// base name of a random node.
  NodeId resolve(const std::string& name) const {
    for (const auto& n : nodes_) {
      if (n.kind == SwigNodeKind::Fixed && n.label == name)
        throw FixedNodeInQuery("'" + name + "' is a fixed intervention node");
      if (n.kind == SwigNodeKind::Random && (n.base == name || n.display() == name)) return n.base;
    }
    throw UnknownNode("unknown node '" + name + "'");
  }

  std::string display(const NodeId& base) const { return nodes_[random_index(base)].display(); }

 private:
  friend Swig build_swig(const Dag& graph, const Intervention& intervention);

  Dag source_;
  Intervention intervention_;
  std::vector<SwigNode> nodes_;
  std::vector<SwigEdge> edges_;
  std::map<NodeId, std::size_t> random_of_;
  Dag random_;
};

/// Splits every target into a random half (incoming edges) and a fixed half
/// (outgoing edges); random nodes descending from a target in the source
/// graph gain its label.
inline Swig build_swig(const Dag& graph, const Intervention& intervention) {
  std::map<NodeId, std::size_t> target_pos;
  std::map<std::string, NodeId> labels;
  for (std::size_t i = 0; i < intervention.targets.size(); ++i) {
    const auto& t = intervention.targets[i];
    graph.index_of(t.node);
    if (!is_identifier(t.label)) throw DuplicateLabel("invalid intervention label '" + t.label + "'");
    if (!target_pos.emplace(t.node, i).second) throw DuplicateLabel("node " + t.node + " is intervened on twice");
    if (!labels.emplace(t.label, t.node).second) throw DuplicateLabel("label '" + t.label + "' is used twice");
    if (graph.has_node(t.label)) throw DuplicateLabel("label '" + t.label + "' collides with a node name");
  }

  std::vector<NodeSet> desc;
  for (const auto& t : intervention.targets) desc.push_back(descendants(graph, t.node));

  Swig s;
  s.source_ = graph;
  s.intervention_ = intervention;
  std::map<NodeId, std::size_t> fixed_of;
  for (const auto& n : graph.nodes()) {
    SwigNode r{n.name, SwigNodeKind::Random, {}, {}};
    for (std::size_t i = 0; i < intervention.targets.size(); ++i)
      if (desc[i].count(n.name)) r.suffix.push_back(intervention.targets[i].label);
    s.random_of_[n.name] = s.nodes_.size();
    s.nodes_.push_back(std::move(r));
    if (auto it = target_pos.find(n.name); it != target_pos.end()) {
      fixed_of[n.name] = s.nodes_.size();
      s.nodes_.push_back(SwigNode{n.name, SwigNodeKind::Fixed, {}, intervention.targets[it->second].label});
    }
  }

  s.random_ = Dag(graph.name());
  for (const auto& n : graph.nodes()) s.random_.add_node(n);
  for (const auto& e : graph.edges()) {
    auto f = fixed_of.find(e.from);
    bool from_fixed = f != fixed_of.end();
    s.edges_.push_back({from_fixed ? f->second : s.random_of_.at(e.from), s.random_of_.at(e.to), e.dashed});
    if (!from_fixed) s.random_.add_edge(e.from, e.to, e.dashed);
  }
  return s;
}

/// Counterfactual display name of a random node, e.g. "D^x".
inline std::string counterfactual_name(const Swig& swig, const NodeId& base) { return swig.display(base); }

/// d-separation among random nodes. Fixed nodes carry constants, so no
/// dependence flows through them. Certificates use counterfactual names.
inline DSeparation swig_d_separated(const Swig& swig, const NodeSet& a, const NodeSet& b, const NodeSet& z) {
  auto resolve_all = [&swig](const NodeSet& names) {
    NodeSet out;
    for (const auto& n : names) out.insert(swig.resolve(n));
    return out;
  };
  auto result = d_separated(swig.random_graph(), resolve_all(a), resolve_all(b), resolve_all(z));
  if (result.certificate) {
    for (auto& step : result.certificate->steps) step.node = swig.display(step.node);
    for (auto& note : result.certificate->interior) note.node = swig.display(note.node);
  }
  return result;
}

/// Merges each fixed half back into its random half, restoring the source
/// edges from the SWIG's own edge list.
inline Dag unsplit(const Swig& swig) {
  Dag out(swig.source().name());
  for (const auto& n : swig.nodes())
    if (n.kind == SwigNodeKind::Random) out.add_node(swig.source().node(n.base));
  for (const auto& e : swig.edges())
    out.add_edge(swig.nodes()[e.from].base, swig.nodes()[e.to].base, e.dashed);
  return out;
}

}  // namespace swigcheck
