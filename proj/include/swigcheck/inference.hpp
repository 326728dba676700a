#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "swigcheck/criteria.hpp"
#include "swigcheck/format.hpp"
#include "swigcheck/graph.hpp"
#include "swigcheck/swig.hpp"

namespace swigcheck {

inline constexpr std::size_t kMaxJointVariables = 20;

/// Partial assignment of binary values to variables.
using Assignment = std::map<NodeId, int>;

/// Binary structural model: for every node, P(node = 1) per configuration of
/// its parents. Parents are ordered lexicographically and configuration index
/// bit j holds the value of parent j.
class DiscreteModel {
 public:
  DiscreteModel() = default;
  explicit DiscreteModel(Dag graph) : graph_(std::move(graph)) {
    for (const auto& n : graph_.nodes()) cpt_[n.name].assign(std::size_t{1} << graph_.parents(n.name).size(), 0.5);
  }

  const Dag& graph() const { return graph_; }
  const std::vector<double>& cpt(const NodeId& node) const {
    auto it = cpt_.find(node);
    if (it == cpt_.end()) throw UnknownNode("unknown node '" + node + "'");
    return it->second;
  }

  std::size_t row_index(const NodeId& node, const Assignment& parents) const {
    const auto ps = graph_.parents(node);
    std::size_t idx = 0;
    for (std::size_t j = 0; j < ps.size(); ++j) {
      auto it = parents.find(ps[j]);
      if (it == parents.end()) throw InvalidCpt("row for " + node + " does not assign parent " + ps[j]);
      if (it->second) idx |= std::size_t{1} << j;
    }
    for (const auto& [name, value] : parents)
      if (std::find(ps.begin(), ps.end(), name) == ps.end())
        throw InvalidCpt(name + " is not a parent of " + node);
    return idx;
  }

  double p1(const NodeId& node, const Assignment& parents) const { return cpt(node)[row_index(node, parents)]; }

  /// Sets P(node = 1 | parents).
  void set(const NodeId& node, const Assignment& parents, double p) {
    auto idx = row_index(node, parents);
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidCpt("probability for " + node + " outside [0,1]");
    cpt_[node][idx] = p;
  }

  /// Replaces a whole table; `rows` is indexed as described above.
  void set_table(const NodeId& node, std::vector<double> rows) {
    graph_.index_of(node);
    if (rows.size() != std::size_t{1} << graph_.parents(node).size())
      throw InvalidCpt("table for " + node + " has the wrong number of rows");
    for (double p : rows)
      if (!(p >= 0.0 && p <= 1.0)) throw InvalidCpt("probability for " + node + " outside [0,1]");
    cpt_[node] = std::move(rows);
  }

  void validate() const {
    for (const auto& n : graph_.nodes()) {
      auto it = cpt_.find(n.name);
      if (it == cpt_.end()) throw InvalidCpt("no table for " + n.name);
      if (it->second.size() != std::size_t{1} << graph_.parents(n.name).size())
        throw InvalidCpt("table for " + n.name + " does not match its parents");
      for (double p : it->second)
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidCpt("probability for " + n.name + " outside [0,1]");
    }
  }

  bool operator==(const DiscreteModel&) const = default;

 private:
  Dag graph_;
  std::map<NodeId, std::vector<double>> cpt_;
};

/// Dense probability table over binary variables; bit i of a configuration
/// index is the value of variable i.
class JointTable {
 public:
  JointTable() = default;
  JointTable(std::vector<NodeId> vars, std::vector<double> probs) : vars_(std::move(vars)), probs_(std::move(probs)) {
    if (probs_.size() != std::size_t{1} << vars_.size()) throw InvalidValue("table size does not match variables");
  }

  const std::vector<NodeId>& variables() const { return vars_; }
  const std::vector<double>& probabilities() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t config) const { return probs_[config]; }

  bool has(const NodeId& var) const { return std::find(vars_.begin(), vars_.end(), var) != vars_.end(); }
  std::size_t index_of(const NodeId& var) const {
    auto it = std::find(vars_.begin(), vars_.end(), var);
    if (it == vars_.end()) throw UnknownNode("variable '" + var + "' is not in the table");
    return static_cast<std::size_t>(it - vars_.begin());
  }

  double total() const {
    double s = 0;
    for (double p : probs_) s += p;
    return s;
  }

  /// P(event); an empty event has probability equal to the total mass.
  double probability(const Assignment& event) const {
    auto [mask, value] = pattern(event);
    double s = 0;
    for (std::size_t i = 0; i < probs_.size(); ++i)
      if ((i & mask) == value) s += probs_[i];
    return s;
  }

  /// Sums out every variable not in `keep`; result follows the order of `keep`.
  JointTable marginal(const std::vector<NodeId>& keep) const {
    std::vector<std::size_t> pos;
    for (const auto& v : keep) pos.push_back(index_of(v));
    std::vector<double> out(std::size_t{1} << keep.size(), 0.0);
    for (std::size_t i = 0; i < probs_.size(); ++i) {
      std::size_t j = 0;
      for (std::size_t k = 0; k < pos.size(); ++k)
        if (i >> pos[k] & 1U) j |= std::size_t{1} << k;
      out[j] += probs_[i];
    }
    return JointTable(keep, std::move(out));
  }

  Assignment assignment(std::size_t config) const {
    Assignment a;
    for (std::size_t k = 0; k < vars_.size(); ++k) a[vars_[k]] = static_cast<int>(config >> k & 1U);
    return a;
  }

  std::pair<std::size_t, std::size_t> pattern(const Assignment& event) const {
    std::size_t mask = 0, value = 0;
    for (const auto& [var, v] : event) {
      if (v != 0 && v != 1) throw InvalidValue("value of " + var + " must be 0 or 1");
      auto k = index_of(var);
      mask |= std::size_t{1} << k;
      if (v) value |= std::size_t{1} << k;
    }
    return {mask, value};
  }

  bool operator==(const JointTable&) const = default;

 private:
  std::vector<NodeId> vars_;
  std::vector<double> probs_;
};

namespace detail {

inline void check_variable_count(std::size_t n) {
  if (n > kMaxJointVariables)
    throw TooManyVariables(std::to_string(n) + " variables exceed the limit of " + std::to_string(kMaxJointVariables));
}

/// Product of CPT entries over every configuration, with `clamp` fixing the
/// value seen by children of intervened nodes.
inline std::vector<double> factorize(const DiscreteModel& model, const std::map<std::size_t, int>& clamp) {
  const Dag& g = model.graph();
  const auto n = g.size();
  check_variable_count(n);
  model.validate();
  std::vector<std::vector<std::size_t>> parents(n);
  std::vector<const std::vector<double>*> tables(n);
  for (std::size_t v = 0; v < n; ++v) {
    for (const auto& p : g.parents(g.nodes()[v].name)) parents[v].push_back(g.index_of(p));
    tables[v] = &model.cpt(g.nodes()[v].name);
  }
  std::vector<double> probs(std::size_t{1} << n, 0.0);
  for (std::size_t config = 0; config < probs.size(); ++config) {
    double p = 1.0;
    for (std::size_t v = 0; v < n && p > 0.0; ++v) {
      const auto& lex = parents[v];
      std::size_t row = 0;
      for (std::size_t j = 0; j < lex.size(); ++j) {
        auto c = clamp.find(lex[j]);
        bool one = c != clamp.end() ? c->second != 0 : (config >> lex[j] & 1U) != 0;
        if (one) row |= std::size_t{1} << j;
      }
      double q = (*tables[v])[row];
      p *= (config >> v & 1U) ? q : 1.0 - q;
    }
    probs[config] = p;
  }
  return probs;
}

}  // namespace detail

/// Joint distribution of all model variables, in graph declaration order.
inline JointTable joint(const DiscreteModel& model) {
  std::vector<NodeId> vars;
  for (const auto& n : model.graph().nodes()) vars.push_back(n.name);
  return JointTable(std::move(vars), detail::factorize(model, {}));
}

/// Joint law of the random SWIG nodes when every target is set to the value
/// in `values` (keyed by target node). Variables carry counterfactual names,
/// e.g. (C, X, S^x, D^x).
inline JointTable swig_joint(const DiscreteModel& model, const Intervention& intervention,
                             const std::map<NodeId, int>& values) {
  detail::check_variable_count(model.graph().size());
  auto swig = build_swig(model.graph(), intervention);
  std::map<std::size_t, int> clamp;
  for (const auto& t : intervention.targets) {
    auto it = values.find(t.node);
    if (it == values.end()) throw InvalidValue("no value given for intervention on " + t.node);
    if (it->second != 0 && it->second != 1) throw InvalidValue("value of " + t.node + " must be 0 or 1");
    clamp[model.graph().index_of(t.node)] = it->second;
  }
  for (const auto& [node, v] : values)
    if (std::none_of(intervention.targets.begin(), intervention.targets.end(),
                     [&](const auto& t) { return t.node == node; }))
      throw UnknownNode(node + " is not an intervention target");
  std::vector<NodeId> vars;
  for (const auto& n : model.graph().nodes()) vars.push_back(swig.display(n.name));
  return JointTable(std::move(vars), detail::factorize(model, clamp));
}

/// Restriction of `table` to `event`, renormalized, over the variables not
/// fixed by the event.
inline JointTable condition(const JointTable& table, const Assignment& event) {
  const double pe = table.probability(event);
  if (!(pe > 0.0)) throw ZeroProbabilityEvent("conditioning event has probability zero");
  auto [mask, value] = table.pattern(event);
  std::vector<NodeId> rest;
  std::vector<std::size_t> pos;
  for (std::size_t k = 0; k < table.variables().size(); ++k)
    if (!(mask >> k & 1U)) {
      rest.push_back(table.variables()[k]);
      pos.push_back(k);
    }
  std::vector<double> out(std::size_t{1} << rest.size(), 0.0);
  for (std::size_t i = 0; i < table.size(); ++i) {
    if ((i & mask) != value) continue;
    std::size_t j = 0;
    for (std::size_t k = 0; k < pos.size(); ++k)
      if (i >> pos[k] & 1U) j |= std::size_t{1} << k;
    out[j] += table[i] / pe;
  }
  return JointTable(std::move(rest), std::move(out));
}

/// Study population: the joint restricted to every selection indicator = 1.
inline JointTable study_population(const JointTable& table, const std::vector<NodeId>& selection) {
  Assignment event;
  for (const auto& s : selection) event[s] = 1;
  return condition(table, event);
}

/// Value of a measure from the risks among treated (r1) and untreated (r0).
inline double measure_value(MeasureScale scale, double r1, double r0) {
  switch (scale) {
    case MeasureScale::RiskDifference:
      return r1 - r0;
    case MeasureScale::RiskRatio:
      if (!(r0 > 0.0)) throw UndefinedMeasure("risk ratio undefined: untreated risk is zero");
      return r1 / r0;
    case MeasureScale::OddsRatio:
      if (!(r0 > 0.0 && r0 < 1.0 && r1 > 0.0 && r1 < 1.0))
        throw UndefinedMeasure("odds ratio undefined: a risk is 0 or 1");
      return (r1 / (1.0 - r1)) / (r0 / (1.0 - r0));
  }
  return 0.0;
}

struct Risks {
  double treated = 0.0;    // P(d=1 | x=1, stratum)
  double untreated = 0.0;  // P(d=1 | x=0, stratum)
};

struct StratumMeasure {
  Assignment stratum;
  double weight = 0.0;  // standard distribution weight
  Risks risks;
  double value = 0.0;
};

struct MeasureReport {
  MeasureScale scale = MeasureScale::RiskDifference;
  std::string population = "eligible";
  double marginal = 0.0;
  Risks marginal_risks;
  std::vector<StratumMeasure> strata;  // empty without stratification
  std::optional<double> standardized;
  Risks standardized_risks;
};

namespace detail {

inline Risks risks_given(const JointTable& t, const NodeId& x, const NodeId& d, Assignment stratum) {
  Risks r;
  for (int xv : {1, 0}) {
    stratum[x] = xv;
    const double px = t.probability(stratum);
    if (!(px > 0.0)) {
      std::string where;
      for (const auto& [k, v] : stratum) where += (where.empty() ? "" : ", ") + k + "=" + std::to_string(v);
      throw UndefinedMeasure("risk undefined: P(" + where + ") is zero");
    }
    stratum[d] = 1;
    const double p = t.probability(stratum) / px;
    stratum.erase(d);
    (xv ? r.treated : r.untreated) = p;
  }
  return r;
}

}  // namespace detail

/// Risks of `d` by `x` and the chosen measure, marginally and within strata
/// of `stratify_by`. Standardization weights the stratum risks by `standard`
/// (one weight per stratum in configuration order) or by the table's own
/// distribution of the strata.
inline MeasureReport measure(const JointTable& table, const NodeId& x, const NodeId& d, MeasureScale scale,
                             const std::vector<NodeId>& stratify_by = {},
                             const std::optional<std::vector<double>>& standard = std::nullopt,
                             std::string population = "eligible") {
  table.index_of(x);
  table.index_of(d);
  for (const auto& c : stratify_by) {
    table.index_of(c);
    if (c == x || c == d) throw InvalidValue("cannot stratify by " + c);
  }
  MeasureReport rep;
  rep.scale = scale;
  rep.population = std::move(population);
  rep.marginal_risks = detail::risks_given(table, x, d, {});
  rep.marginal = measure_value(scale, rep.marginal_risks.treated, rep.marginal_risks.untreated);
  if (stratify_by.empty()) return rep;

  const std::size_t k = std::size_t{1} << stratify_by.size();
  if (standard && standard->size() != k) throw InvalidValue("standard distribution needs one weight per stratum");
  double total = 0.0;
  for (std::size_t s = 0; s < k; ++s) {
    StratumMeasure sm;
    for (std::size_t j = 0; j < stratify_by.size(); ++j) sm.stratum[stratify_by[j]] = static_cast<int>(s >> j & 1U);
    sm.weight = standard ? (*standard)[s] : table.probability(sm.stratum);
    sm.risks = detail::risks_given(table, x, d, sm.stratum);
    sm.value = measure_value(scale, sm.risks.treated, sm.risks.untreated);
    total += sm.weight;
    rep.strata.push_back(std::move(sm));
  }
  if (!(total > 0.0)) throw InvalidValue("standard distribution has no mass");
  Risks st;
  for (auto& sm : rep.strata) {
    sm.weight /= total;
    st.treated += sm.weight * sm.risks.treated;
    st.untreated += sm.weight * sm.risks.untreated;
  }
  rep.standardized_risks = st;
  rep.standardized = measure_value(scale, st.treated, st.untreated);
  return rep;
}

struct CiCheck {
  bool holds = false;
  double max_deviation = 0.0;
};

/// max |P(a,b|z) - P(a|z) P(b|z)| over all configurations with P(z) > 0.
inline CiCheck ci_holds_numeric(const JointTable& table, const NodeSet& a, const NodeSet& b, const NodeSet& z,
                                double tol) {
  std::vector<NodeId> vars(a.begin(), a.end());
  vars.insert(vars.end(), b.begin(), b.end());
  vars.insert(vars.end(), z.begin(), z.end());
  auto m = table.marginal(vars);
  const auto na = a.size(), nb = b.size(), nz = z.size();
  const std::size_t amask = (std::size_t{1} << na) - 1;
  const std::size_t bmask = ((std::size_t{1} << nb) - 1) << na;
  const std::size_t zshift = na + nb;

  CiCheck out;
  for (std::size_t zc = 0; zc < (std::size_t{1} << nz); ++zc) {
    std::vector<double> pa(std::size_t{1} << na, 0.0), pb(std::size_t{1} << nb, 0.0);
    double pz = 0.0;
    for (std::size_t ab = 0; ab < (std::size_t{1} << (na + nb)); ++ab) {
      const double p = m[ab | zc << zshift];
      pz += p;
      pa[ab & amask] += p;
      pb[(ab & bmask) >> na] += p;
    }
    if (!(pz > 0.0)) continue;
    for (std::size_t ab = 0; ab < (std::size_t{1} << (na + nb)); ++ab) {
      const double joint_ab = m[ab | zc << zshift] / pz;
      const double prod = (pa[ab & amask] / pz) * (pb[(ab & bmask) >> na] / pz);
      out.max_deviation = std::max(out.max_deviation, std::abs(joint_ab - prod));
    }
  }
  out.holds = out.max_deviation <= tol;
  return out;
}

struct EffectModification {
  bool modified = false;
  std::vector<StratumMeasure> strata;
};

/// Whether stratum-specific values of the measure differ by more than `tol`.
inline EffectModification effect_modification(const JointTable& table, const NodeId& x, const NodeId& d,
                                              const std::vector<NodeId>& c, MeasureScale scale, double tol = 1e-9) {
  auto rep = measure(table, x, d, scale, c);
  EffectModification em;
  em.strata = rep.strata;
  for (const auto& s : rep.strata)
    if (std::abs(s.value - rep.strata.front().value) > tol) em.modified = true;
  return em;
}

namespace detail {

/// P(c) / P(c | b) for every (c, b), from the joint of the model.
inline std::array<std::array<double, 2>, 2> match_ratios(const DiscreteModel& model, const NodeId& s,
                                                        const NodeId& match_on, const NodeId& balance_across) {
  const auto ps = model.graph().parents(s);
  for (const auto* p : {&match_on, &balance_across})
    if (std::find(ps.begin(), ps.end(), *p) == ps.end()) throw InvalidCpt(*p + " is not a parent of " + s);
  auto pj = joint(model).marginal({match_on, balance_across});
  std::array<std::array<double, 2>, 2> ratio{};
  for (int c = 0; c < 2; ++c)
    for (int b = 0; b < 2; ++b) {
      const double pc = pj.probability({{match_on, c}});
      const double pb = pj.probability({{balance_across, b}});
      const double pcb = pj.probability({{match_on, c}, {balance_across, b}});
      if (!(pb > 0.0) || !(pcb > 0.0))
        throw InfeasibleMatch("stratum " + match_on + "=" + std::to_string(c) + ", " + balance_across + "=" +
                              std::to_string(b) + " is empty; cannot match");
      ratio[c][b] = pc / (pcb / pb);
    }
  return ratio;
}

}  // namespace detail

/// Largest target rate `matched_selection_cpt` accepts: min P(c | b) / P(c).
inline double max_match_rate(const DiscreteModel& model, const NodeId& s, const NodeId& match_on,
                             const NodeId& balance_across) {
  double feasible = 1.0;
  for (const auto& row : detail::match_ratios(model, s, match_on, balance_across))
    for (double r : row) feasible = std::min(feasible, 1.0 / r);
  return feasible;
}

/// Replaces the CPT of selection node `s` so that, among the selected, the
/// distribution of `match_on` is the same in every level of `balance_across`:
/// P(S=1 | c, b) = rate * P(c) / P(c | b). Other parents of `s` no longer
/// affect selection.
inline DiscreteModel matched_selection_cpt(const DiscreteModel& model, const NodeId& s, const NodeId& match_on,
                                           const NodeId& balance_across, double target_rate) {
  if (!(target_rate > 0.0 && target_rate <= 1.0)) throw InvalidValue("target rate must lie in (0, 1]");
  const auto ratio = detail::match_ratios(model, s, match_on, balance_across);
  const double feasible = max_match_rate(model, s, match_on, balance_across);
  if (target_rate > feasible + 1e-15)
    throw InfeasibleMatch("target rate " + format_number(target_rate) + " needs a selection probability above 1; " +
                          "max feasible rate is " + format_number(feasible));

  const auto ps = model.graph().parents(s);
  DiscreteModel out = model;
  std::vector<double> rows(std::size_t{1} << ps.size());
  const auto ci = static_cast<std::size_t>(std::find(ps.begin(), ps.end(), match_on) - ps.begin());
  const auto bi = static_cast<std::size_t>(std::find(ps.begin(), ps.end(), balance_across) - ps.begin());
  for (std::size_t r = 0; r < rows.size(); ++r)
    rows[r] = std::min(1.0, target_rate * ratio[r >> ci & 1U][r >> bi & 1U]);
  out.set_table(s, std::move(rows));
  return out;
}

}  // namespace swigcheck
