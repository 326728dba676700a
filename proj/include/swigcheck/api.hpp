#pragma once

#include <optional>
#include <string>
#include <vector>

#include "swigcheck/json_io.hpp"

namespace swigcheck::api {

/// Role assignments that replace the ones declared in a file.
struct RoleOverrides {
  std::optional<NodeId> treatment;
  std::optional<NodeId> outcome;
  std::optional<std::vector<NodeId>> selection;  // in stage order
};

inline Dag apply_roles(Dag g, const RoleOverrides& o) {
  auto reassign = [&g](RoleKind kind, const NodeId& name) {
    g.index_of(name);
    for (const auto& n : g.nodes())
      if (n.role.kind == kind) g.node(n.name).role = Role::covariate();
    g.node(name).role = kind == RoleKind::Treatment ? Role::treatment() : Role::outcome();
  };
  if (o.treatment) reassign(RoleKind::Treatment, *o.treatment);
  if (o.outcome) reassign(RoleKind::Outcome, *o.outcome);
  if (o.selection) {
    for (const auto& s : *o.selection) g.index_of(s);
    for (const auto& n : g.nodes())
      if (n.role.kind == RoleKind::Selection) {
        auto& node = g.node(n.name);
        node.role = Role::covariate();
        node.match.reset();
        node.balance.reset();
      }
    int stage = 1;
    for (const auto& s : *o.selection) g.node(s).role = Role::selection(stage++);
  }
  return validate(g);
}

/// The graph under the null: every dashed edge and the treatment -> outcome
/// edge removed.
inline Dag null_modified(const Dag& g) {
  Dag out = g;
  for (const auto& e : g.edges())
    if (e.dashed) out.remove_edge(e.from, e.to);
  if (auto x = g.treatment(), d = g.outcome(); x && d) out.remove_edge(*x, *d);
  return out;
}

struct CheckRequest {
  std::string condition = "all";  // exchangeability | cohort | casecontrol | all
  NodeSet adjust;
  std::optional<int> stage;
  bool null = false;
};

/// Verdicts for the requested conditions. Stage k > 1 also conditions on the
/// selection nodes of earlier stages.
inline json check(const Dag& graph, const CheckRequest& req) {
  const Dag g = req.null ? null_modified(graph) : graph;
  const auto roles = StudyRoles::from_graph(g, req.null);
  const CriteriaOptions opts{req.null};
  const bool all = req.condition == "all";
  if (!all && !condition_from_string(req.condition))
    throw BadRequest("unknown condition '" + req.condition + "'");
  const auto wants = [&](Condition c) { return all || req.condition == to_string(c); };

  json verdicts = json::array();
  if (wants(Condition::Exchangeability)) verdicts.push_back(to_json(exchangeability(g, roles, req.adjust, opts)));
  const int stages = static_cast<int>(roles.selection.size());
  if ((wants(Condition::Cohort) || wants(Condition::CaseControl)) && stages == 0)
    throw RoleError("graph declares no selection node");
  if (req.stage && (*req.stage < 1 || *req.stage > stages))
    throw RoleError("no selection node for stage " + std::to_string(*req.stage));
  NodeSet earlier;
  for (int k = 1; k <= stages; ++k) {
    if (!req.stage || *req.stage == k) {
      if (wants(Condition::Cohort)) verdicts.push_back(to_json(cohort_condition(g, roles, req.adjust, k, opts, earlier)));
      if (wants(Condition::CaseControl))
        verdicts.push_back(to_json(case_control_condition(g, roles, req.adjust, k, opts, earlier)));
    }
    earlier.insert(roles.selection[static_cast<std::size_t>(k - 1)]);
  }
  return json{{"verdicts", verdicts}};
}

inline SelectionRequirement requirement_from_string(const std::string& s) {
  if (s == "cohort") return SelectionRequirement::Cohort;
  if (s == "casecontrol") return SelectionRequirement::CaseControl;
  if (s == "either") return SelectionRequirement::Either;
  if (s == "none") return SelectionRequirement::None;
  throw BadRequest("unknown requirement '" + s + "'");
}

inline json adjust(const Dag& graph, const Requirement& req, bool null) {
  const Dag g = null ? null_modified(graph) : graph;
  const auto roles = StudyRoles::from_graph(g, null);
  json sets = json::array();
  for (const auto& s : find_adjustment_sets(g, roles, req, {null})) sets.push_back(to_json(s));
  return json{{"require", {{"exchangeability", req.exchangeability}, {"selection", to_string(req.selection)}}},
              {"candidates", to_json(roles.candidates)},
              {"sets", sets}};
}

struct EvalRequest {
  std::string population = "eligible";  // eligible | study
  MeasureScale measure = MeasureScale::RiskDifference;
  std::vector<NodeId> stratify;
};

inline json eval(const Document& doc, const EvalRequest& req) {
  if (!doc.model) throw BadRequest("document has no model block");
  const auto roles = StudyRoles::from_graph(doc.graph);
  auto table = joint(*doc.model);
  if (req.population == "study") {
    if (roles.selection.empty()) throw RoleError("graph declares no selection node");
    table = study_population(table, roles.selection);
  } else if (req.population != "eligible") {
    throw BadRequest("population must be eligible or study");
  }
  auto rep = measure(table, roles.treatment, roles.outcome, req.measure, req.stratify, std::nullopt, req.population);
  return to_json(rep);
}

inline json decide(const Dag& g, const NodeId& covariate, MeasureScale m, const Hypothesis& h) {
  g.index_of(covariate);
  return to_json(adjustment_decision(g, StudyRoles::from_graph(g), covariate, m, h));
}

inline constexpr std::size_t kMaxSweepGrid = 1001;

inline json sweep(double r0_c0, double r0_c1, MeasureScale scale, double value, std::size_t grid) {
  if (grid > kMaxSweepGrid) throw InvalidValue("grid is capped at " + std::to_string(kMaxSweepGrid) + " points");
  return json{{"points", to_json(trial_sweep(r0_c0, r0_c1, scale, value, grid))}};
}

/// One curve when a scale and value are given, otherwise the standard set.
inline json labbe(std::optional<MeasureScale> scale, std::optional<double> value, std::size_t resolution) {
  json curves = json::array();
  if (scale) {
    const double v = value.value_or(*scale == MeasureScale::RiskDifference ? 0.0 : 1.0);
    curves.push_back(to_json(LabbeCurve{std::string(to_string(*scale)) + format_number(v), *scale, v,
                                        labbe_curves(*scale, v, resolution)}));
  } else {
    for (const auto& c : labbe_figure(resolution)) curves.push_back(to_json(c));
  }
  return json{{"curves", curves}};
}

inline json stats(const TwoByTwo& t, std::optional<double> rr0, bool yates) {
  json out{{"table", {{"a", t.a}, {"b", t.b}, {"c", t.c}, {"d", t.d}}}, {"stats", to_json(two_by_two_stats(t, yates))}};
  if (rr0) {
    out["rr0"] = *rr0;
    out["rr_test"] = to_json(rr_fixed_null_test(t, *rr0));
  }
  return out;
}

inline json parse_result(const Document& doc) {
  json out{{"graph", to_json(doc.graph, doc.title)}};
  out["model"] = doc.model ? to_json(*doc.model) : json(nullptr);
  out["text"] = serialize(doc);
  json warnings = json::array();
  if (!doc.graph.treatment()) warnings.push_back("no treatment node declared");
  if (!doc.graph.outcome()) warnings.push_back("no outcome node declared");
  if (doc.graph.selection().empty()) warnings.push_back("no selection node declared");
  out["warnings"] = warnings;
  return out;
}

}  // namespace swigcheck::api
