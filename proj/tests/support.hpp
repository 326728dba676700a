// Test oracles written independently of the library algorithms.
#pragma once

#include <algorithm>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "swigcheck/inference.hpp"

namespace oracle {

using swigcheck::Dag;
using swigcheck::NodeId;
using swigcheck::NodeSet;

/// Adjacency as plain index lists, rebuilt from the edge set.
struct Adjacency {
  std::vector<std::string> names;
  std::vector<std::vector<bool>> arrow;  // arrow[i][j]: i -> j

  explicit Adjacency(const Dag& g) {
    for (const auto& n : g.nodes()) names.push_back(n.name);
    arrow.assign(names.size(), std::vector<bool>(names.size(), false));
    for (const auto& e : g.edges()) arrow[index(e.from)][index(e.to)] = true;
  }

  std::size_t index(const std::string& name) const {
    return static_cast<std::size_t>(std::find(names.begin(), names.end(), name) - names.begin());
  }

  bool adjacent(std::size_t i, std::size_t j) const { return arrow[i][j] || arrow[j][i]; }

  std::vector<bool> descendants_or_self(std::size_t v) const {
    std::vector<bool> seen(names.size(), false);
    std::vector<std::size_t> stack{v};
    seen[v] = true;
    while (!stack.empty()) {
      auto u = stack.back();
      stack.pop_back();
      for (std::size_t w = 0; w < names.size(); ++w)
        if (arrow[u][w] && !seen[w]) {
          seen[w] = true;
          stack.push_back(w);
        }
    }
    return seen;
  }
};

/// Textbook blocking rule applied to one simple path.
inline bool path_open(const Adjacency& adj, const std::vector<std::size_t>& path, const std::vector<bool>& in_z) {
  for (std::size_t i = 1; i + 1 < path.size(); ++i) {
    const auto prev = path[i - 1], v = path[i], next = path[i + 1];
    const bool collider = adj.arrow[prev][v] && adj.arrow[next][v];
    if (collider) {
      const auto desc = adj.descendants_or_self(v);
      bool activated = false;
      for (std::size_t w = 0; w < desc.size(); ++w) activated = activated || (desc[w] && in_z[w]);
      if (!activated) return false;
    } else if (in_z[v]) {
      return false;
    }
  }
  return true;
}

/// Enumerates every simple path between A and B and reports separation when
/// none is open.
inline bool d_separated(const Dag& g, const NodeSet& a, const NodeSet& b, const NodeSet& z) {
  Adjacency adj(g);
  std::vector<bool> in_z(adj.names.size(), false), in_b(adj.names.size(), false);
  for (const auto& n : z) in_z[adj.index(n)] = true;
  for (const auto& n : b) in_b[adj.index(n)] = true;
  std::vector<std::size_t> path;
  std::vector<bool> on_path(adj.names.size(), false);
  bool open = false;
  std::function<void(std::size_t)> walk = [&](std::size_t v) {
    if (open) return;
    if (in_b[v]) {
      open = path_open(adj, path, in_z);
      return;
    }
    for (std::size_t w = 0; w < adj.names.size(); ++w) {
      if (on_path[w] || !adj.adjacent(v, w)) continue;
      on_path[w] = true;
      path.push_back(w);
      walk(w);
      path.pop_back();
      on_path[w] = false;
    }
  };
  for (const auto& s : a) {
    const auto i = adj.index(s);
    path = {i};
    on_path.assign(adj.names.size(), false);
    on_path[i] = true;
    walk(i);
  }
  return !open;
}

/// Every labelled DAG on n nodes named A, B, C, ... : each pair is absent,
/// forward or backward; cyclic orientations are skipped.
inline void for_each_dag(std::size_t n, const std::function<void(const Dag&)>& visit) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  std::size_t total = 1;
  for (std::size_t k = 0; k < pairs.size(); ++k) total *= 3;
  std::vector<std::vector<bool>> arrow(n, std::vector<bool>(n));
  for (std::size_t code = 0; code < total; ++code) {
    for (auto& row : arrow) std::fill(row.begin(), row.end(), false);
    std::size_t c = code;
    for (const auto& [i, j] : pairs) {
      if (c % 3 == 1) arrow[i][j] = true;
      if (c % 3 == 2) arrow[j][i] = true;
      c /= 3;
    }
    // Kahn's algorithm on the local matrix.
    std::vector<int> indeg(n, 0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) indeg[j] += arrow[i][j];
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < n; ++i)
      if (!indeg[i]) ready.push_back(i);
    std::size_t seen = 0;
    while (!ready.empty()) {
      auto u = ready.back();
      ready.pop_back();
      ++seen;
      for (std::size_t j = 0; j < n; ++j)
        if (arrow[u][j] && --indeg[j] == 0) ready.push_back(j);
    }
    if (seen != n) continue;
    Dag g;
    for (std::size_t i = 0; i < n; ++i) g.add_node(std::string(1, static_cast<char>('A' + i)));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (arrow[i][j]) g.add_edge(std::string(1, static_cast<char>('A' + i)), std::string(1, static_cast<char>('A' + j)));
    visit(g);
  }
}

/// Random DAG on n nodes N0..N{n-1}; edges only go forward in a shuffled order.
inline Dag random_dag(std::size_t n, double density, std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::bernoulli_distribution coin(density);
  Dag g;
  for (std::size_t i = 0; i < n; ++i) g.add_node("N" + std::to_string(i));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (coin(rng)) g.add_edge("N" + std::to_string(order[i]), "N" + std::to_string(order[j]));
  return g;
}

/// Model on `g` with every CPT entry drawn from U(0.05, 0.95); matched
/// selection nodes are rematched at half their largest feasible rate.
inline swigcheck::DiscreteModel random_model(const Dag& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  swigcheck::DiscreteModel m(g);
  for (const auto& n : g.nodes()) {
    std::vector<double> rows(std::size_t{1} << g.parents(n.name).size());
    for (auto& r : rows) r = u(rng);
    m.set_table(n.name, rows);
  }
  for (const auto& n : g.nodes())
    if (n.match && n.balance) {
      const double rate = 0.5 * swigcheck::max_match_rate(m, n.name, *n.match, *n.balance);
      m = swigcheck::matched_selection_cpt(m, n.name, *n.match, *n.balance, rate);
    }
  return m;
}

/// P(target = 1 | given) straight from the joint table, by summation.
inline double conditional(const swigcheck::JointTable& t, const NodeId& target, swigcheck::Assignment given) {
  double den = 0, num = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    auto a = t.assignment(i);
    bool match = true;
    for (const auto& [k, v] : given) match = match && a.at(k) == v;
    if (!match) continue;
    den += t[i];
    if (a.at(target) == 1) num += t[i];
  }
  return num / den;
}

}  // namespace oracle
