#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "swigcheck/criteria.hpp"
#include "swigcheck/dsl.hpp"
#include "swigcheck/inference.hpp"

namespace swigcheck {

struct ExpectedCondition {
  Condition condition = Condition::Cohort;
  NodeSet adjust;
  bool holds = false;
  int stage = 1;
  bool include_earlier_stages = false;

  bool operator==(const ExpectedCondition&) const = default;
};

struct ExpectedDecision {
  NodeId covariate;
  MeasureScale measure = MeasureScale::OddsRatio;
  Hypothesis hypothesis;
  bool needs_adjustment = false;

  bool operator==(const ExpectedDecision&) const = default;
};

struct ExpectedTable {
  std::vector<ExpectedCondition> conditions;
  std::vector<ExpectedDecision> decisions;

  std::size_t size() const { return conditions.size() + decisions.size(); }
};

/// Edge edits turning the base graph into a named variant.
struct VariantSpec {
  std::string name;
  std::vector<std::pair<NodeId, NodeId>> remove;
  NodeSet latent;
};

struct Scenario {
  std::string id;
  std::string title;
  Document document;  // base graph with its faithful model
  std::vector<VariantSpec> variants;
  std::map<std::string, ExpectedTable> expected;  // keyed by variant name, "base" included

  std::vector<std::string> variant_names() const {
    std::vector<std::string> out{"base"};
    for (const auto& v : variants) out.push_back(v.name);
    return out;
  }

  /// The document of a variant, with its model adapted to the new parents.
  Document variant_document(std::string_view variant) const;
};

namespace detail {

/// Accepts "→" as a spelling of "->" in variant names.
inline std::string normalize_variant(std::string_view name) {
  std::string out(name);
  const std::string arrow = "→";
  for (auto pos = out.find(arrow); pos != std::string::npos; pos = out.find(arrow, pos)) out.replace(pos, arrow.size(), "->");
  return out;
}

/// Drops `parent` from the table of `child`, keeping the rows where it is 0.
inline DiscreteModel drop_parent(const DiscreteModel& model, const Dag& target, const NodeId& parent,
                                 const NodeId& child) {
  const auto old_ps = model.graph().parents(child);
  const auto new_ps = target.parents(child);
  std::vector<double> rows(std::size_t{1} << new_ps.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Assignment a;
    for (std::size_t j = 0; j < new_ps.size(); ++j) a[new_ps[j]] = static_cast<int>(r >> j & 1U);
    a[parent] = 0;
    rows[r] = model.p1(child, a);
  }
  DiscreteModel out(target);
  for (const auto& n : target.nodes())
    if (n.name != child) out.set_table(n.name, model.cpt(n.name));
  out.set_table(child, std::move(rows));
  return out;
}

/// Selection probabilities of a matched node are recomputed for the current
/// model at half the largest feasible rate.
inline DiscreteModel rematch(DiscreteModel model) {
  for (const auto& n : model.graph().nodes())
    if (n.match && n.balance) {
      const double rate = 0.5 * max_match_rate(model, n.name, *n.match, *n.balance);
      model = matched_selection_cpt(model, n.name, *n.match, *n.balance, rate);
    }
  return model;
}

}  // namespace detail

inline Document Scenario::variant_document(std::string_view variant) const {
  const auto name = detail::normalize_variant(variant);
  if (name == "base") return document;
  for (const auto& v : variants) {
    if (v.name != name) continue;
    Document doc = document;
    DiscreteModel model = *document.model;
    for (const auto& [from, to] : v.remove) {
      doc.graph.remove_edge(from, to);
      model = detail::drop_parent(model, doc.graph, from, to);
    }
    for (const auto& n : v.latent) doc.graph.node(n).observed = false;
    DiscreteModel relabelled(doc.graph);
    for (const auto& n : doc.graph.nodes()) relabelled.set_table(n.name, model.cpt(n.name));
    doc.model = detail::rematch(relabelled);
    return doc;
  }
  throw UnknownVariant("scenario " + id + " has no variant '" + std::string(variant) + "'");
}

namespace detail {

inline ExpectedCondition cond(Condition c, NodeSet adjust, bool holds, int stage = 1, bool earlier = false) {
  return {c, std::move(adjust), holds, stage, earlier};
}

inline ExpectedDecision decide(NodeId cov, MeasureScale m, Hypothesis h, bool needs) {
  return {std::move(cov), m, h, needs};
}

inline Scenario make_scenario(std::string id, std::string_view text, std::vector<VariantSpec> variants,
                              std::map<std::string, ExpectedTable> expected) {
  Scenario s;
  s.id = std::move(id);
  s.document = parse(text);
  s.title = s.document.title;
  s.document.model = rematch(*s.document.model);
  s.variants = std::move(variants);
  s.expected = std::move(expected);
  return s;
}

inline std::vector<Scenario> build_registry() {
  using C = Condition;
  using M = MeasureScale;
  const auto T = true;
  const auto F = false;
  const auto null = Hypothesis::null();
  auto off = [](M m) { return Hypothesis::off_null(m); };
  auto null_variant = [](VariantSpec v = {"null", {{"X", "D"}}, {}}) { return v; };

  std::vector<Scenario> out;

  out.push_back(make_scenario(
      "cohort",
      R"(dag cohort [title="Cohort study; selection depends on treatment and C"] {
  X [role=treatment]; D [role=outcome]; S [role=selection]; C;
  C -> S; C -> D; X -> S; X -> D [dashed];
}
model {
  p(X=1) = 0.3;
  p(D=1 | C=0, X=0) = 0.1; p(D=1 | C=1, X=0) = 0.4; p(D=1 | C=0, X=1) = 0.2; p(D=1 | C=1, X=1) = 0.8;
  p(S=1 | C=0, X=0) = 0.2; p(S=1 | C=1, X=0) = 0.5; p(S=1 | C=0, X=1) = 0.6; p(S=1 | C=1, X=1) = 0.9;
  p(C=1) = 0.4;
})",
      {null_variant(), {"no-X->S", {{"X", "S"}}, {}}},
      {{"base",
        {{cond(C::Cohort, {"C"}, T), cond(C::Cohort, {}, F), cond(C::CaseControl, {"C"}, F),
          cond(C::CaseControl, {}, F), cond(C::Exchangeability, {}, T)},
         {}}},
       {"no-X->S",
        {{cond(C::Cohort, {"C"}, T), cond(C::CaseControl, {"C"}, T), cond(C::Cohort, {}, F),
          cond(C::CaseControl, {}, F)},
         {}}},
       {"null", {{cond(C::Cohort, {"C"}, T), cond(C::Cohort, {}, F)}, {}}}}));

  out.push_back(make_scenario(
      "casecontrol",
      R"(dag casecontrol [title="Case-control study; selection depends on outcome and C"] {
  X [role=treatment]; D [role=outcome]; S [role=selection]; C;
  C -> X; C -> S; D -> S; X -> D [dashed];
}
model {
  p(X=1 | C=0) = 0.2; p(X=1 | C=1) = 0.6;
  p(D=1 | X=0) = 0.15; p(D=1 | X=1) = 0.35;
  p(S=1 | C=0, D=0) = 0.1; p(S=1 | C=1, D=0) = 0.3; p(S=1 | C=0, D=1) = 0.5; p(S=1 | C=1, D=1) = 0.9;
  p(C=1) = 0.4;
})",
      {null_variant(), {"no-D->S", {{"D", "S"}}, {}}},
      {{"base",
        {{cond(C::CaseControl, {"C"}, T), cond(C::CaseControl, {}, F), cond(C::Cohort, {"C"}, F),
          cond(C::Exchangeability, {"C"}, T), cond(C::Exchangeability, {}, T)},
         {}}},
       {"no-D->S", {{cond(C::Cohort, {"C"}, T), cond(C::CaseControl, {"C"}, T)}, {}}},
       {"null", {{cond(C::CaseControl, {"C"}, T), cond(C::CaseControl, {}, F)}, {}}}}));

  out.push_back(make_scenario(
      "colliderS",
      R"(dag colliderS [title="Collider at selection: S has parents X and D"] {
  X [role=treatment]; D [role=outcome]; S [role=selection]; W;
  W -> X; W -> D; X -> S; D -> S; X -> D [dashed];
}
model {
  p(X=1 | W=0) = 0.3; p(X=1 | W=1) = 0.7;
  p(D=1 | W=0, X=0) = 0.1; p(D=1 | W=1, X=0) = 0.4; p(D=1 | W=0, X=1) = 0.2; p(D=1 | W=1, X=1) = 0.8;
  p(S=1 | D=0, X=0) = 0.1; p(S=1 | D=1, X=0) = 0.5; p(S=1 | D=0, X=1) = 0.4; p(S=1 | D=1, X=1) = 0.9;
  p(W=1) = 0.5;
})",
      {null_variant()},
      {{"base",
        {{cond(C::Cohort, {}, F), cond(C::Cohort, {"W"}, F), cond(C::CaseControl, {}, F),
          cond(C::CaseControl, {"W"}, F), cond(C::Exchangeability, {"W"}, T), cond(C::Exchangeability, {}, F)},
         {}}},
       {"null", {{cond(C::Cohort, {"W"}, F), cond(C::CaseControl, {"W"}, F)}, {}}}}));

  out.push_back(make_scenario(
      "colliderX",
      R"(dag colliderX [title="Collider at treatment: X has parents U and V"] {
  X [role=treatment]; D [role=outcome]; S [role=selection]; U; V;
  U -> S; U -> X; V -> X; V -> D; X -> D [dashed];
}
model {
  p(X=1 | U=0, V=0) = 0.1; p(X=1 | U=1, V=0) = 0.5; p(X=1 | U=0, V=1) = 0.3; p(X=1 | U=1, V=1) = 0.8;
  p(D=1 | V=0, X=0) = 0.1; p(D=1 | V=1, X=0) = 0.4; p(D=1 | V=0, X=1) = 0.2; p(D=1 | V=1, X=1) = 0.8;
  p(S=1 | U=0) = 0.2; p(S=1 | U=1) = 0.7;
  p(U=1) = 0.4;
  p(V=1) = 0.6;
})",
      {null_variant(), {"V-latent", {}, {"V"}}},
      {{"base",
        {{cond(C::Cohort, {}, F), cond(C::Cohort, {"U"}, T), cond(C::Cohort, {"V"}, T),
          cond(C::Cohort, {"U", "V"}, T), cond(C::Exchangeability, {"V"}, T), cond(C::Exchangeability, {"U"}, F)},
         {}}},
       {"V-latent", {{cond(C::Cohort, {"U"}, T), cond(C::Cohort, {}, F), cond(C::Exchangeability, {"U"}, F)}, {}}},
       {"null", {{cond(C::Cohort, {"U"}, T), cond(C::Cohort, {"V"}, T)}, {}}}}));

  out.push_back(make_scenario(
      "colliderD",
      R"(dag colliderD [title="Collider at outcome: D has parents X and U"] {
  X [role=treatment]; D [role=outcome]; S [role=selection]; U;
  X -> D [dashed]; U -> D; U -> S;
}
model {
  p(X=1) = 0.5;
  p(D=1 | U=0, X=0) = 0.1; p(D=1 | U=1, X=0) = 0.4; p(D=1 | U=0, X=1) = 0.2; p(D=1 | U=1, X=1) = 0.8;
  p(S=1 | U=0) = 0.2; p(S=1 | U=1) = 0.7;
  p(U=1) = 0.3;
})",
      {null_variant()},
      {{"base",
        {{cond(C::CaseControl, {"U"}, T), cond(C::CaseControl, {}, F), cond(C::Cohort, {"U"}, T)},
         {decide("U", M::OddsRatio, off(M::OddsRatio), T), decide("U", M::OddsRatio, null, F),
          decide("U", M::RiskRatio, off(M::RiskRatio), F),
          decide("U", M::RiskDifference, off(M::RiskDifference), F)}}},
       {"null", {{cond(C::CaseControl, {}, T), cond(C::CaseControl, {"U"}, T)}, {}}}}));

  out.push_back(make_scenario(
      "greenland",
      R"(dag greenland [title="C affects both selection and outcome; no collider on the path"] {
  X [role=treatment]; D [role=outcome]; S [role=selection]; C;
  C -> S; C -> D; X -> D [dashed];
}
model {
  p(X=1) = 0.5;
  p(D=1 | C=0, X=0) = 0.1; p(D=1 | C=1, X=0) = 0.4; p(D=1 | C=0, X=1) = 0.2; p(D=1 | C=1, X=1) = 0.8;
  p(S=1 | C=0) = 0.2; p(S=1 | C=1) = 0.7;
  p(C=1) = 0.4;
})",
      {null_variant()},
      {{"base",
        {{cond(C::Cohort, {}, F), cond(C::Cohort, {"C"}, T), cond(C::CaseControl, {}, F),
          cond(C::CaseControl, {"C"}, T)},
         {decide("C", M::RiskRatio, off(M::RiskRatio), F),
          decide("C", M::RiskDifference, off(M::RiskDifference), F),
          decide("C", M::OddsRatio, off(M::OddsRatio), T), decide("C", M::OddsRatio, null, F),
          decide("C", M::RiskRatio, null, F)}}},
       {"null", {{cond(C::Cohort, {"C"}, T), cond(C::CaseControl, {}, T)}, {}}}}));

  out.push_back(make_scenario(
      "clinical",
      R"(dag clinical [title="Clinical trial; treatment assigned only within the study"] {
  X [role=treatment]; D [role=outcome]; S [role=selection]; C;
  C -> S; C -> D; S -> X; X -> D [dashed];
}
model {
  p(X=1 | S=0) = 0; p(X=1 | S=1) = 0.5;
  p(D=1 | C=0, X=0) = 0.2; p(D=1 | C=1, X=0) = 0.8;
  p(D=1 | C=0, X=1) = 0.3333333333333333; p(D=1 | C=1, X=1) = 0.8888888888888888;
  p(S=1 | C=0) = 0.3; p(S=1 | C=1) = 0.7;
  p(C=1) = 0.5;
})",
      {null_variant()},
      {{"base",
        {{cond(C::Cohort, {"C"}, T), cond(C::Cohort, {}, F), cond(C::CaseControl, {"C"}, F),
          cond(C::CaseControl, {}, F), cond(C::Exchangeability, {}, F), cond(C::Exchangeability, {"C"}, T)},
         {decide("C", M::OddsRatio, off(M::OddsRatio), T), decide("C", M::RiskRatio, null, F),
          decide("C", M::OddsRatio, null, F), decide("C", M::RiskRatio, off(M::RiskRatio), F),
          decide("C", M::RiskDifference, off(M::RiskDifference), F)}}},
       {"null", {{cond(C::Cohort, {"C"}, T), cond(C::CaseControl, {"C"}, F)}, {}}}}));

  const ExpectedTable matched_cohort_table{
      {cond(C::Cohort, {"C"}, T), cond(C::Cohort, {}, F)},
      {decide("C", M::RiskRatio, off(M::RiskRatio), F), decide("C", M::OddsRatio, off(M::OddsRatio), T),
       decide("C", M::OddsRatio, null, F)}};
  out.push_back(make_scenario(
      "matched_cohort",
      R"(dag matched_cohort [title="Matched cohort; exposure groups share the distribution of C"] {
  X [role=treatment]; D [role=outcome]; S [role=selection, match=C, balance=X]; C;
  C -> X; C -> D; C -> S; X -> S; X -> D [dashed];
}
model {
  p(X=1 | C=0) = 0.3; p(X=1 | C=1) = 0.6;
  p(D=1 | C=0, X=0) = 0.1; p(D=1 | C=1, X=0) = 0.4; p(D=1 | C=0, X=1) = 0.2; p(D=1 | C=1, X=1) = 0.8;
  p(S=1 | C=0, X=0) = 0.5; p(S=1 | C=1, X=0) = 0.5; p(S=1 | C=0, X=1) = 0.5; p(S=1 | C=1, X=1) = 0.5;
  p(C=1) = 0.4;
})",
      {null_variant(), {"no-C->X", {{"C", "X"}}, {}}, {"no-C->D", {{"C", "D"}}, {}}},
      {{"base", matched_cohort_table},
       {"no-C->X", matched_cohort_table},
       {"no-C->D", {{cond(C::Cohort, {}, T), cond(C::Cohort, {"C"}, T)}, {}}},
       {"null", {{cond(C::Cohort, {"C"}, T)}, {}}}}));

  out.push_back(make_scenario(
      "matched_casecontrol",
      R"(dag matched_casecontrol [title="Matched case-control; cases and controls share the distribution of C"] {
  X [role=treatment]; D [role=outcome]; S [role=selection, match=C, balance=D]; C;
  C -> X; C -> D; C -> S; D -> S; X -> D [dashed];
}
model {
  p(X=1 | C=0) = 0.3; p(X=1 | C=1) = 0.6;
  p(D=1 | C=0, X=0) = 0.1; p(D=1 | C=1, X=0) = 0.4; p(D=1 | C=0, X=1) = 0.2; p(D=1 | C=1, X=1) = 0.8;
  p(S=1 | C=0, D=0) = 0.5; p(S=1 | C=1, D=0) = 0.5; p(S=1 | C=0, D=1) = 0.5; p(S=1 | C=1, D=1) = 0.5;
  p(C=1) = 0.4;
})",
      {null_variant(),
       {"no-C->X", {{"C", "X"}}, {}},
       {"no-C->X-null", {{"C", "X"}, {"X", "D"}}, {}},
       {"no-C->D", {{"C", "D"}}, {}}},
      {{"base",
        {{cond(C::CaseControl, {"C"}, T), cond(C::Cohort, {"C"}, F), cond(C::CaseControl, {}, F)},
         {decide("C", M::OddsRatio, off(M::OddsRatio), T), decide("C", M::OddsRatio, null, F)}}},
       {"no-C->X",
        {{cond(C::CaseControl, {"C"}, T), cond(C::CaseControl, {}, F)}, {decide("C", M::OddsRatio, null, F)}}},
       {"no-C->X-null", {{cond(C::CaseControl, {}, T)}, {}}},
       {"no-C->D",
        {{cond(C::CaseControl, {"C"}, T), cond(C::CaseControl, {}, F)},
         {decide("C", M::OddsRatio, off(M::OddsRatio), T), decide("C", M::OddsRatio, null, F)}}},
       {"null", {{cond(C::CaseControl, {"C"}, T)}, {}}}}));

  out.push_back(make_scenario(
      "casecohort",
      R"(dag casecohort [title="Case-cohort; a subcohort and all cases are selected in a second stage"] {
  X [role=treatment]; D [role=outcome]; S1 [role=selection]; S2 [role=selection, stage=2];
  X -> S1; X -> D [dashed]; D -> S2; S1 -> S2;
}
model {
  p(X=1) = 0.3;
  p(D=1 | X=0) = 0.1; p(D=1 | X=1) = 0.3;
  p(S1=1 | X=0) = 0.2; p(S1=1 | X=1) = 0.6;
  p(S2=1 | D=0, S1=0) = 0.05; p(S2=1 | D=1, S1=0) = 0.5; p(S2=1 | D=0, S1=1) = 0.3; p(S2=1 | D=1, S1=1) = 0.9;
})",
      {null_variant()},
      {{"base",
        {{cond(C::Cohort, {}, T, 1), cond(C::CaseControl, {}, T, 2, true), cond(C::CaseControl, {}, F, 2, false),
          cond(C::Cohort, {}, F, 2, true)},
         {}}},
       {"null", {{cond(C::Cohort, {}, T, 1), cond(C::CaseControl, {}, T, 2, true)}, {}}}}));

  return out;
}

}  // namespace detail

/// Built-in scenarios in registry order. Built once; read-only afterwards.
inline const std::vector<Scenario>& scenario_registry() {
  static const std::vector<Scenario> registry = detail::build_registry();
  return registry;
}

inline std::vector<std::string> list_scenarios() {
  std::vector<std::string> out;
  for (const auto& s : scenario_registry()) out.push_back(s.id);
  return out;
}

inline const Scenario& get_scenario(std::string_view id) {
  for (const auto& s : scenario_registry())
    if (s.id == id) return s;
  throw UnknownScenario("unknown scenario '" + std::string(id) + "'");
}

inline const ExpectedTable& expected_verdicts(std::string_view id, std::string_view variant) {
  const auto& s = get_scenario(id);
  auto it = s.expected.find(detail::normalize_variant(variant));
  if (it == s.expected.end()) {
    s.variant_document(variant);  // throws UnknownVariant for unknown names
    static const ExpectedTable empty;
    return empty;
  }
  return it->second;
}

/// Runs the criteria engine on one expected condition entry.
inline ConditionVerdict evaluate_expected(const Document& doc, const ExpectedCondition& e) {
  const auto roles = StudyRoles::from_graph(doc.graph);
  NodeSet earlier;
  if (e.include_earlier_stages)
    for (int k = 1; k < e.stage; ++k) earlier.insert(roles.selection[static_cast<std::size_t>(k - 1)]);
  return check_condition(doc.graph, roles, e.condition, e.adjust, e.stage, {}, earlier);
}

inline DecisionReport evaluate_expected(const Document& doc, const ExpectedDecision& e) {
  return adjustment_decision(doc.graph, StudyRoles::from_graph(doc.graph), e.covariate, e.measure, e.hypothesis);
}

}  // namespace swigcheck
