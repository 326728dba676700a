#pragma once

#include <algorithm>
#include <array>
#include <iterator>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "swigcheck/dseparation.hpp"
#include "swigcheck/graph.hpp"
#include "swigcheck/swig.hpp"

namespace swigcheck {

enum class Condition { Exchangeability, Cohort, CaseControl };

inline std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::Exchangeability: return "exchangeability";
    case Condition::Cohort: return "cohort";
    case Condition::CaseControl: return "casecontrol";
  }
  return "exchangeability";
}

inline std::optional<Condition> condition_from_string(std::string_view s) {
  if (s == "exchangeability") return Condition::Exchangeability;
  if (s == "cohort") return Condition::Cohort;
  if (s == "casecontrol") return Condition::CaseControl;
  return std::nullopt;
}

enum class MeasureScale { RiskDifference, RiskRatio, OddsRatio };

inline std::string_view to_string(MeasureScale m) {
  switch (m) {
    case MeasureScale::RiskDifference: return "rd";
    case MeasureScale::RiskRatio: return "rr";
    case MeasureScale::OddsRatio: return "or";
  }
  return "rd";
}

inline std::optional<MeasureScale> measure_from_string(std::string_view s) {
  if (s == "rd") return MeasureScale::RiskDifference;
  if (s == "rr") return MeasureScale::RiskRatio;
  if (s == "or") return MeasureScale::OddsRatio;
  return std::nullopt;
}

/// Null: no effect of treatment on outcome. OffNull may declare the one scale
/// on which the covariate does not modify the effect; that assumption is an
/// input, not something the graph can decide.
struct Hypothesis {
  enum class Kind { Null, OffNull } kind = Kind::OffNull;
  std::optional<MeasureScale> no_effect_modification;

  static Hypothesis null() { return {Kind::Null, std::nullopt}; }
  static Hypothesis off_null(std::optional<MeasureScale> no_em = std::nullopt) { return {Kind::OffNull, no_em}; }
  bool is_null() const { return kind == Kind::Null; }
  bool operator==(const Hypothesis&) const = default;
};

struct StudyRoles {
  NodeId treatment;
  NodeId outcome;
  std::vector<NodeId> selection;  // ordered by stage
  NodeSet candidates;             // measured variables eligible for adjustment

  /// Reads roles declared in the graph; candidates are every eligible node.
  static StudyRoles from_graph(const Dag& g, bool null_hypothesis = false);
};

struct ConditionVerdict {
  Condition condition = Condition::Exchangeability;
  int stage = 0;  // selection stage for cohort/case-control, 0 for exchangeability
  bool holds = false;
  NodeSet adjust;           // the covariate set C
  NodeSet conditioning_set; // everything conditioned on in the SWIG query
  std::string statement;    // e.g. "S^x ⫫ D^x | X, C"
  std::optional<PathCertificate> certificate;
};

struct CriteriaOptions {
  bool null_hypothesis = false;  // delete the treatment -> outcome edge first
};

/// Copy of `g` without the treatment -> outcome edge.
inline Dag null_graph(const Dag& g, const StudyRoles& roles) {
  Dag out = g;
  out.remove_edge(roles.treatment, roles.outcome);
  return out;
}

namespace detail {

inline bool eligible_candidate(const Dag& g, const StudyRoles& roles, const NodeId& n, bool exclude_outcome_desc) {
  const auto& node = g.node(n);
  if (!node.observed || n == roles.treatment || n == roles.outcome) return false;
  if (node.role.kind == RoleKind::Selection) return false;
  if (std::find(roles.selection.begin(), roles.selection.end(), n) != roles.selection.end()) return false;
  if (is_descendant(g, n, roles.treatment)) return false;
  if (exclude_outcome_desc && is_descendant(g, n, roles.outcome)) return false;
  return true;
}

inline std::string fresh_label(const Dag& g, const NodeId& node) {
  auto label = default_label(node);
  while (g.has_node(label)) label += "_";
  return label;
}

inline std::string join(const NodeSet& set) {
  std::string out;
  for (const auto& n : set) out += (out.empty() ? "" : ", ") + n;
  return out;
}

}  // namespace detail

inline StudyRoles StudyRoles::from_graph(const Dag& g, bool null_hypothesis) {
  StudyRoles r;
  auto x = g.treatment();
  auto d = g.outcome();
  if (!x) throw RoleError("graph declares no treatment node");
  if (!d) throw RoleError("graph declares no outcome node");
  r.treatment = *x;
  r.outcome = *d;
  r.selection = g.selection();
  for (const auto& n : g.nodes())
    if (detail::eligible_candidate(g, r, n.name, !null_hypothesis)) r.candidates.insert(n.name);
  return r;
}

/// Rejects adjustment sets the condition cannot use: unmeasured nodes,
/// treatment/outcome/selection nodes, and descendants of treatment (or of the
/// outcome, except for the selection conditions under the null).
inline void check_adjust_set(const Dag& g, const StudyRoles& roles, const NodeSet& adjust, Condition condition,
                             bool null_hypothesis) {
  for (const auto& n : adjust) {
    if (!g.has_node(n)) throw InvalidAdjustSet("adjustment node " + n + " is not in the graph");
    const auto& node = g.node(n);
    if (!node.observed) throw InvalidAdjustSet("adjustment node " + n + " is unmeasured");
    if (n == roles.treatment || n == roles.outcome ||
        std::find(roles.selection.begin(), roles.selection.end(), n) != roles.selection.end())
      throw InvalidAdjustSet("adjustment node " + n + " is the treatment, outcome or a selection node");
    if (is_descendant(g, n, roles.treatment))
      throw InvalidAdjustSet("adjustment node " + n + " is a descendant of treatment " + roles.treatment);
    bool outcome_desc_allowed = null_hypothesis && condition != Condition::Exchangeability;
    if (!outcome_desc_allowed && is_descendant(g, n, roles.outcome))
      throw InvalidAdjustSet("adjustment node " + n + " is a descendant of outcome " + roles.outcome);
  }
}

/// D^x ⫫ X | C, decided on the SWIG intervening on treatment.
inline ConditionVerdict exchangeability(const Dag& graph, const StudyRoles& roles, const NodeSet& adjust,
                                        const CriteriaOptions& opts = {}) {
  const Dag g = opts.null_hypothesis ? null_graph(graph, roles) : graph;
  check_adjust_set(g, roles, adjust, Condition::Exchangeability, opts.null_hypothesis);
  auto swig = build_swig(g, Intervention::on(roles.treatment, detail::fresh_label(g, roles.treatment)));
  auto r = swig_d_separated(swig, {roles.treatment}, {roles.outcome}, adjust);
  ConditionVerdict v{Condition::Exchangeability, 0, r.separated, adjust, adjust, {}, r.certificate};
  v.statement = swig.display(roles.treatment) + " ⫫ " + swig.display(roles.outcome);
  if (!adjust.empty()) v.statement += " | " + detail::join(adjust);
  return v;
}

namespace detail {

inline const NodeId& stage_node(const StudyRoles& roles, int stage) {
  if (stage < 1 || stage > static_cast<int>(roles.selection.size()))
    throw RoleError("no selection node for stage " + std::to_string(stage));
  return roles.selection[static_cast<std::size_t>(stage - 1)];
}

inline std::string statement(const Swig& swig, const NodeId& a, const NodeId& b, const NodeSet& z) {
  std::string out = swig.display(a) + " ⫫ " + swig.display(b);
  std::string given;
  for (const auto& n : z) given += (given.empty() ? "" : ", ") + swig.display(n);
  return given.empty() ? out : out + " | " + given;
}

}  // namespace detail

/// S^x ⫫ D^x | X, C for the selection node of `stage`. `earlier` holds
/// selection nodes of previous stages to condition on as well.
inline ConditionVerdict cohort_condition(const Dag& graph, const StudyRoles& roles, const NodeSet& adjust, int stage = 1,
                                         const CriteriaOptions& opts = {}, const NodeSet& earlier = {}) {
  const Dag g = opts.null_hypothesis ? null_graph(graph, roles) : graph;
  check_adjust_set(g, roles, adjust, Condition::Cohort, opts.null_hypothesis);
  const auto& s = detail::stage_node(roles, stage);
  auto swig = build_swig(g, Intervention::on(roles.treatment, detail::fresh_label(g, roles.treatment)));
  NodeSet z = adjust;
  z.insert(roles.treatment);
  z.insert(earlier.begin(), earlier.end());
  auto r = swig_d_separated(swig, {s}, {roles.outcome}, z);
  ConditionVerdict v{Condition::Cohort, stage, r.separated, adjust, z, {}, r.certificate};
  v.statement = detail::statement(swig, s, roles.outcome, z);
  return v;
}

/// S^d ⫫ X | D, C on the SWIG intervening on the outcome (X^d = X because the
/// treatment is not a descendant of the outcome).
inline ConditionVerdict case_control_condition(const Dag& graph, const StudyRoles& roles, const NodeSet& adjust,
                                               int stage = 1, const CriteriaOptions& opts = {},
                                               const NodeSet& earlier = {}) {
  const Dag g = opts.null_hypothesis ? null_graph(graph, roles) : graph;
  check_adjust_set(g, roles, adjust, Condition::CaseControl, opts.null_hypothesis);
  const auto& s = detail::stage_node(roles, stage);
  auto swig = build_swig(g, Intervention::on(roles.outcome, detail::fresh_label(g, roles.outcome)));
  NodeSet z = adjust;
  z.insert(roles.outcome);
  z.insert(earlier.begin(), earlier.end());
  auto r = swig_d_separated(swig, {s}, {roles.treatment}, z);
  ConditionVerdict v{Condition::CaseControl, stage, r.separated, adjust, z, {}, r.certificate};
  v.statement = detail::statement(swig, s, roles.treatment, z);
  return v;
}

inline ConditionVerdict check_condition(const Dag& g, const StudyRoles& roles, Condition c, const NodeSet& adjust,
                                        int stage = 1, const CriteriaOptions& opts = {}, const NodeSet& earlier = {}) {
  switch (c) {
    case Condition::Exchangeability: return exchangeability(g, roles, adjust, opts);
    case Condition::Cohort: return cohort_condition(g, roles, adjust, stage, opts, earlier);
    case Condition::CaseControl: return case_control_condition(g, roles, adjust, stage, opts, earlier);
  }
  return exchangeability(g, roles, adjust, opts);
}

struct StageVerdicts {
  int stage = 1;
  ConditionVerdict cohort;
  ConditionVerdict case_control;
  bool ok() const { return cohort.holds || case_control.holds; }
};

struct MultiStageReport {
  std::vector<StageVerdicts> stages;
  bool ok = false;  // every stage passes at least one condition
};

/// Evaluates both selection conditions at every stage, conditioning stage k
/// on the selection nodes of stages 1..k-1 in addition to its own set.
inline MultiStageReport multi_stage_check(const Dag& g, const StudyRoles& roles, const std::vector<NodeSet>& adjust,
                                          const CriteriaOptions& opts = {}) {
  MultiStageReport report;
  report.ok = true;
  NodeSet earlier;
  for (int k = 1; k <= static_cast<int>(roles.selection.size()); ++k) {
    const auto idx = static_cast<std::size_t>(k - 1);
    const NodeSet c = idx < adjust.size() ? adjust[idx] : NodeSet{};
    StageVerdicts sv{k, cohort_condition(g, roles, c, k, opts, earlier),
                     case_control_condition(g, roles, c, k, opts, earlier)};
    report.ok = report.ok && sv.ok();
    report.stages.push_back(std::move(sv));
    earlier.insert(roles.selection[idx]);
  }
  return report;
}

enum class SelectionRequirement { None, Cohort, CaseControl, Either };

inline std::string_view to_string(SelectionRequirement r) {
  switch (r) {
    case SelectionRequirement::None: return "none";
    case SelectionRequirement::Cohort: return "cohort";
    case SelectionRequirement::CaseControl: return "casecontrol";
    case SelectionRequirement::Either: return "either";
  }
  return "none";
}

struct Requirement {
  bool exchangeability = false;
  SelectionRequirement selection = SelectionRequirement::Either;
};

/// Whether `adjust` meets the requirement at every selection stage.
inline bool satisfies(const Dag& g, const StudyRoles& roles, const NodeSet& adjust, const Requirement& req,
                      const CriteriaOptions& opts = {}) {
  if (req.exchangeability && !exchangeability(g, roles, adjust, opts).holds) return false;
  if (req.selection == SelectionRequirement::None) return true;
  NodeSet earlier;
  for (int k = 1; k <= static_cast<int>(roles.selection.size()); ++k) {
    bool ok = false;
    if (req.selection != SelectionRequirement::CaseControl)
      ok = cohort_condition(g, roles, adjust, k, opts, earlier).holds;
    if (!ok && req.selection != SelectionRequirement::Cohort)
      ok = case_control_condition(g, roles, adjust, k, opts, earlier).holds;
    if (!ok) return false;
    earlier.insert(roles.selection[static_cast<std::size_t>(k - 1)]);
  }
  return true;
}

/// All inclusion-minimal eligible sets meeting `req`, by increasing size then
/// lexicographically.
inline std::vector<NodeSet> find_adjustment_sets(const Dag& graph, const StudyRoles& roles, const Requirement& req,
                                                 const CriteriaOptions& opts = {}) {
  const Dag g = opts.null_hypothesis ? null_graph(graph, roles) : graph;
  std::vector<NodeId> pool;
  for (const auto& n : roles.candidates)
    if (g.has_node(n) && detail::eligible_candidate(g, roles, n, !opts.null_hypothesis)) pool.push_back(n);

  std::vector<NodeSet> found;
  const auto n = pool.size();
  std::vector<std::size_t> pick;
  auto consider = [&](const NodeSet& set) {
    for (const auto& f : found)
      if (std::includes(set.begin(), set.end(), f.begin(), f.end())) return;
    if (satisfies(graph, roles, set, req, opts)) found.push_back(set);
  };
  // Combinations of each size in lexicographic order of the sorted pool.
  for (std::size_t k = 0; k <= n; ++k) {
    pick.resize(k);
    for (std::size_t i = 0; i < k; ++i) pick[i] = i;
    while (true) {
      NodeSet set;
      for (auto i : pick) set.insert(pool[i]);
      consider(set);
      std::size_t i = k;
      while (i > 0 && pick[i - 1] == n - k + i - 1) --i;
      if (i == 0) break;
      ++pick[i - 1];
      for (std::size_t j = i; j < k; ++j) pick[j] = pick[j - 1] + 1;
    }
  }
  return found;
}

/// Graph of the study population after selecting on a matched selection node
/// `s` (matched on C, balanced across B). The study distribution makes C and
/// B independent by design; it factorizes as Q(B) Q(C) prod Q(v | pred(v)),
/// and each remaining variable keeps only the predecessors it is not
/// d-separated from given the others and `s` in the source graph.
inline Dag study_population_graph(const Dag& g, const NodeId& s) {
  const auto& sel = g.node(s);
  if (!sel.match || !sel.balance) throw RoleError("selection node " + s + " is not matched");
  std::vector<NodeId> order{*sel.balance, *sel.match};
  for (const auto& v : topological_order(g))
    if (v != s && v != *sel.match && v != *sel.balance) order.push_back(v);

  Dag h(g.name());
  for (const auto& node : g.nodes())
    if (node.name != s) h.add_node(node);
  for (std::size_t k = 2; k < order.size(); ++k) {
    const auto& v = order[k];
    NodeSet pred(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    NodeSet parents;
    for (const auto& p : pred) {
      NodeSet rest = pred;
      rest.erase(p);
      rest.insert(s);
      if (!d_separated(g, {v}, {p}, rest).separated) parents.insert(p);
    }
    NodeSet others;
    std::set_difference(pred.begin(), pred.end(), parents.begin(), parents.end(), std::inserter(others, others.end()));
    NodeSet given = parents;
    given.insert(s);
    if (!others.empty() && !d_separated(g, {v}, others, given).separated) parents = pred;
    for (const auto& p : parents) {
      auto it = g.edges().find(Edge{p, v, false});
      h.add_edge(p, v, it != g.edges().end() && it->dashed);
    }
  }
  return h;
}

/// d-separation in the population selected by `selected` (conditioning on
/// each selection indicator). Matched selection nodes are replaced by their
/// study-population graph; unmatched ones join the conditioning set.
inline bool separated_in_population(const Dag& g, const NodeSet& a, const NodeSet& b, const NodeSet& z,
                                    const NodeSet& selected) {
  Dag h = g;
  NodeSet given = z;
  for (const auto& s : selected) {
    if (h.node(s).match) {
      h = study_population_graph(h, s);
    } else {
      given.insert(s);
    }
  }
  return d_separated(h, a, b, given).separated;
}

struct Collapsibility {
  bool holds = false;
  bool first = false;   // C ⫫ X (RD/RR) or C ⫫ X | D (OR), plus extra conditioning
  bool second = false;  // C ⫫ D | X, plus extra conditioning
  std::string first_statement;
  std::string second_statement;
  std::string which;  // the statement that holds, or "none"
};

/// Graphical sufficient conditions for the C-marginal and C-conditional
/// measures to agree. Selection nodes in `extra` put the check in the study
/// population.
inline Collapsibility collapsibility_conditions(const Dag& g, const StudyRoles& roles, const NodeId& covariate,
                                                MeasureScale measure, const NodeSet& extra = {}) {
  g.index_of(covariate);
  NodeSet selected, plain;
  for (const auto& n : extra) {
    if (g.node(n).role.kind == RoleKind::Selection)
      selected.insert(n);
    else
      plain.insert(n);
  }
  auto with = [&](NodeSet z) {
    z.insert(plain.begin(), plain.end());
    return z;
  };
  auto render = [&](const NodeId& other, const NodeSet& z) {
    std::string out = covariate + " ⫫ " + other;
    NodeSet all = z;
    all.insert(extra.begin(), extra.end());
    return all.empty() ? out : out + " | " + detail::join(all);
  };
  Collapsibility c;
  const NodeSet first_z = measure == MeasureScale::OddsRatio ? NodeSet{roles.outcome} : NodeSet{};
  c.first = separated_in_population(g, {covariate}, {roles.treatment}, with(first_z), selected);
  c.second = separated_in_population(g, {covariate}, {roles.outcome}, with({roles.treatment}), selected);
  c.first_statement = render(roles.treatment, first_z);
  c.second_statement = render(roles.outcome, {roles.treatment});
  c.holds = c.first || c.second;
  c.which = c.first ? c.first_statement : c.second ? c.second_statement : "none";
  return c;
}

enum class IdentifiedTarget { MarginalEligible, ConditionalEligible, None };

inline std::string_view to_string(IdentifiedTarget t) {
  switch (t) {
    case IdentifiedTarget::MarginalEligible: return "marginal_eligible";
    case IdentifiedTarget::ConditionalEligible: return "conditional_eligible";
    case IdentifiedTarget::None: return "none";
  }
  return "none";
}

/// Outcome of checking M_E = M_CE = M_CS = M_S for one covariate and scale.
/// `equalities[0]`: eligible C-marginal equals C-conditional (collapsibility);
/// `equalities[1]`: C-conditional measure agrees across populations (no
/// selection bias given C); `equalities[2]`: C-conditional equals C-marginal
/// in the study population.
struct DecisionReport {
  MeasureScale measure = MeasureScale::RiskDifference;
  NodeId covariate;
  Hypothesis hypothesis;
  std::array<bool, 3> equalities{};
  bool confounder = false;  // an open backdoor path runs through the covariate
  bool needs_adjustment = true;
  IdentifiedTarget identified_target = IdentifiedTarget::None;
  Collapsibility eligible;
  Collapsibility study;
  std::vector<ConditionVerdict> selection_verdicts;
};

/// Decides whether the C-marginal measure in the study population can stand
/// in for a causal measure in the eligible population without adjusting for
/// C. The study marginal needs the last two equalities; the eligible marginal
/// target additionally needs the first, and is not causal when C confounds.
inline DecisionReport adjustment_decision(const Dag& graph, const StudyRoles& roles, const NodeId& covariate,
                                          MeasureScale measure, const Hypothesis& hypothesis) {
  if (!graph.node(covariate).observed) throw UnmeasuredCovariate("covariate " + covariate + " is unmeasured");
  const CriteriaOptions opts{hypothesis.is_null()};
  const Dag g = opts.null_hypothesis ? null_graph(graph, roles) : graph;

  DecisionReport r;
  r.measure = measure;
  r.covariate = covariate;
  r.hypothesis = hypothesis;
  const bool em_ok = hypothesis.is_null() || hypothesis.no_effect_modification == measure;

  for (const auto& p : backdoor_paths(g, roles.treatment, roles.outcome)) {
    auto nodes = p.nodes();
    if (p.open && std::find(nodes.begin(), nodes.end(), covariate) != nodes.end()) r.confounder = true;
  }

  r.eligible = collapsibility_conditions(g, roles, covariate, measure);
  r.equalities[0] = em_ok && r.eligible.holds;

  // Risk-based measures need the cohort condition; the odds ratio is also
  // available from exposure prevalences under the case-control condition.
  // Under the null the case-control condition gives X ⫫ D | C, S, which
  // covers every scale.
  bool no_selection_bias = true;
  NodeSet earlier;
  for (int k = 1; k <= static_cast<int>(roles.selection.size()); ++k) {
    auto cohort = cohort_condition(graph, roles, {covariate}, k, opts, earlier);
    bool ok = cohort.holds;
    r.selection_verdicts.push_back(cohort);
    if (measure == MeasureScale::OddsRatio || hypothesis.is_null()) {
      auto cc = case_control_condition(graph, roles, {covariate}, k, opts, earlier);
      ok = ok || cc.holds;
      r.selection_verdicts.push_back(cc);
    }
    no_selection_bias = no_selection_bias && ok;
    earlier.insert(roles.selection[static_cast<std::size_t>(k - 1)]);
  }
  r.equalities[1] = no_selection_bias;

  NodeSet all_selection(roles.selection.begin(), roles.selection.end());
  r.study = collapsibility_conditions(g, roles, covariate, measure, all_selection);
  r.equalities[2] = em_ok && r.study.holds;

  r.needs_adjustment = !(r.equalities[1] && r.equalities[2]);
  if (!r.needs_adjustment)
    r.identified_target = r.equalities[0] && !r.confounder ? IdentifiedTarget::MarginalEligible
                                                           : IdentifiedTarget::ConditionalEligible;
  return r;
}

}  // namespace swigcheck
