#include <gtest/gtest.h>

#include "identities.hpp"
#include "support.hpp"
#include "swigcheck/scenarios.hpp"

using namespace swigcheck;

namespace {

Dag roles_graph(std::initializer_list<std::pair<const char*, const char*>> edges, NodeSet latent = {}) {
  Dag g;
  auto add = [&](const char* n) {
    if (g.has_node(n)) return;
    std::string s = n;
    Role r = s == "X" ? Role::treatment() : s == "D" ? Role::outcome() : s == "S" || s == "S1" ? Role::selection(1)
             : s == "S2"                                                                    ? Role::selection(2)
                                                                                            : Role::covariate();
    g.add_node(s, r, !latent.count(s));
  };
  for (const auto& [a, b] : edges) {
    add(a);
    add(b);
    g.add_edge(a, b);
  }
  return validate(g);
}

const Dag& fig2() {
  static const Dag g = roles_graph({{"C", "X"}, {"C", "D"}, {"X", "D"}});
  return g;
}
const Dag& cohort_graph() {
  static const Dag g = roles_graph({{"C", "S"}, {"C", "D"}, {"X", "S"}, {"X", "D"}});
  return g;
}
const Dag& collider_x(bool v_latent = false) {
  static const Dag a = roles_graph({{"U", "S"}, {"U", "X"}, {"V", "X"}, {"V", "D"}, {"X", "D"}});
  static const Dag b = roles_graph({{"U", "S"}, {"U", "X"}, {"V", "X"}, {"V", "D"}, {"X", "D"}}, {"V"});
  return v_latent ? b : a;
}
const Dag& collider_d() {
  static const Dag g = roles_graph({{"X", "D"}, {"U", "D"}, {"U", "S"}});
  return g;
}
const Dag& clinical() {
  static const Dag g = roles_graph({{"C", "S"}, {"C", "D"}, {"S", "X"}, {"X", "D"}});
  return g;
}
const Dag& casecohort() {
  static const Dag g = roles_graph({{"X", "S1"}, {"X", "D"}, {"D", "S2"}, {"S1", "S2"}});
  return g;
}

ConditionVerdict run(const Dag& g, Condition c, const NodeSet& adjust, int stage = 1, const NodeSet& earlier = {}) {
  return check_condition(g, StudyRoles::from_graph(g), c, adjust, stage, {}, earlier);
}

}  // namespace

TEST(Exchangeability, ConfoundedTriangle) {
  EXPECT_TRUE(run(fig2(), Condition::Exchangeability, {"C"}).holds);
  auto v = run(fig2(), Condition::Exchangeability, {});
  EXPECT_FALSE(v.holds);
  ASSERT_TRUE(v.certificate);
  EXPECT_EQ(v.certificate->to_string(), "X←C→D^x");
  EXPECT_EQ(v.statement, "X ⫫ D^x");
}

TEST(Exchangeability, NoBackdoorPath) {
  auto g = roles_graph({{"X", "D"}});
  EXPECT_TRUE(exchangeability(g, StudyRoles::from_graph(g), {}).holds);
}

TEST(Cohort, HoldsGivenC) {
  auto v = run(cohort_graph(), Condition::Cohort, {"C"});
  EXPECT_TRUE(v.holds);
  EXPECT_EQ(v.statement, "S^x ⫫ D^x | C, X");
  auto empty = run(cohort_graph(), Condition::Cohort, {});
  EXPECT_FALSE(empty.holds);
  EXPECT_EQ(empty.certificate->to_string(), "S^x←C→D^x");
}

TEST(Cohort, ColliderAtSelectionFailsForAnySet) {
  auto g = roles_graph({{"X", "S"}, {"D", "S"}, {"W", "X"}, {"W", "D"}, {"X", "D"}});
  for (const NodeSet& c : {NodeSet{}, NodeSet{"W"}}) {
    auto v = run(g, Condition::Cohort, c);
    EXPECT_FALSE(v.holds);
    ASSERT_TRUE(v.certificate);
    EXPECT_EQ(v.certificate->to_string(), "S^x←D^x");
  }
}

TEST(Cohort, ColliderAtTreatment) {
  EXPECT_TRUE(run(collider_x(), Condition::Cohort, {"U"}).holds);
  EXPECT_TRUE(run(collider_x(), Condition::Cohort, {"V"}).holds);
  auto v = run(collider_x(), Condition::Cohort, {});
  EXPECT_FALSE(v.holds);
  EXPECT_EQ(v.certificate->to_string(), "S←U→X←V→D^x");
  const auto& x = v.certificate->interior[1];
  EXPECT_EQ(x.node, "X");
  EXPECT_TRUE(x.collider);
  EXPECT_TRUE(x.open);
}

TEST(CaseControl, Examples) {
  auto cc = roles_graph({{"C", "S"}, {"C", "X"}, {"D", "S"}, {"X", "D"}});
  EXPECT_TRUE(run(cc, Condition::CaseControl, {"C"}).holds);
  EXPECT_TRUE(run(collider_d(), Condition::CaseControl, {"U"}).holds);
  auto v = run(collider_d(), Condition::CaseControl, {});
  EXPECT_FALSE(v.holds);
  EXPECT_EQ(v.certificate->to_string(), "S←U→D←X");
  EXPECT_EQ(v.statement, "S ⫫ X | D");
}

TEST(CaseControl, TreatmentChildOfSelectionAlwaysFails) {
  for (const NodeSet& c : {NodeSet{}, NodeSet{"C"}}) {
    auto v = run(clinical(), Condition::CaseControl, c);
    EXPECT_FALSE(v.holds);
    EXPECT_EQ(v.certificate->to_string(), "S→X");
  }
  EXPECT_TRUE(run(clinical(), Condition::Cohort, {"C"}).holds);
}

TEST(MultiStage, CaseCohort) {
  const auto& g = casecohort();
  EXPECT_TRUE(run(g, Condition::Cohort, {}, 1).holds);
  EXPECT_TRUE(run(g, Condition::CaseControl, {}, 2, {"S1"}).holds);
  auto without = run(g, Condition::CaseControl, {}, 2);
  EXPECT_FALSE(without.holds);
  EXPECT_EQ(without.certificate->to_string(), "S2^d←S1←X");
  auto report = multi_stage_check(g, StudyRoles::from_graph(g), {{}, {}});
  ASSERT_EQ(report.stages.size(), 2u);
  EXPECT_TRUE(report.stages[0].cohort.holds);
  EXPECT_TRUE(report.stages[1].case_control.holds);
  EXPECT_TRUE(report.ok);
}

TEST(MultiStage, SingleStageReducesToPlainCheck) {
  const auto& g = cohort_graph();
  auto roles = StudyRoles::from_graph(g);
  auto report = multi_stage_check(g, roles, {{"C"}});
  ASSERT_EQ(report.stages.size(), 1u);
  EXPECT_EQ(report.stages[0].cohort.holds, cohort_condition(g, roles, {"C"}).holds);
  EXPECT_EQ(report.stages[0].case_control.holds, case_control_condition(g, roles, {"C"}).holds);
}

TEST(AdjustSets, Validation) {
  auto roles = StudyRoles::from_graph(collider_x(true));
  EXPECT_THROW(cohort_condition(collider_x(true), roles, {"V"}), InvalidAdjustSet);
  EXPECT_THROW(cohort_condition(collider_x(true), roles, {"Q"}), InvalidAdjustSet);
  EXPECT_THROW(cohort_condition(collider_x(true), roles, {"X"}), InvalidAdjustSet);
  auto g = roles_graph({{"C", "X"}, {"X", "M"}, {"M", "D"}, {"X", "S"}});
  EXPECT_THROW(exchangeability(g, StudyRoles::from_graph(g), {"M"}), InvalidAdjustSet);
}

TEST(AdjustSets, Search) {
  auto g = collider_x(true);
  auto roles = StudyRoles::from_graph(g);
  EXPECT_EQ(find_adjustment_sets(g, roles, {false, SelectionRequirement::Cohort}), (std::vector<NodeSet>{{"U"}}));
  EXPECT_TRUE(find_adjustment_sets(g, roles, {true, SelectionRequirement::Cohort}).empty());
  EXPECT_EQ(find_adjustment_sets(collider_x(), StudyRoles::from_graph(collider_x()), {}),
            (std::vector<NodeSet>{{"U"}, {"V"}}));
  EXPECT_EQ(find_adjustment_sets(cohort_graph(), StudyRoles::from_graph(cohort_graph()), {}),
            (std::vector<NodeSet>{{"C"}}));
  Dag edgeless;
  edgeless.add_node("X", Role::treatment());
  edgeless.add_node("D", Role::outcome());
  edgeless.add_node("S", Role::selection(1));
  EXPECT_EQ(find_adjustment_sets(edgeless, StudyRoles::from_graph(edgeless), {}), (std::vector<NodeSet>{{}}));
}

TEST(AdjustSets, EveryReportedSetSatisfiesAndIsMinimal) {
  for (const auto& s : scenario_registry())
    for (const auto& v : s.variant_names()) {
      const auto g = s.variant_document(v).graph;
      const auto roles = StudyRoles::from_graph(g);
      for (auto req : {Requirement{false, SelectionRequirement::Either}, Requirement{true, SelectionRequirement::Either},
                       Requirement{false, SelectionRequirement::Cohort}}) {
        for (const auto& set : find_adjustment_sets(g, roles, req)) {
          EXPECT_TRUE(satisfies(g, roles, set, req)) << s.id << "/" << v;
          for (const auto& n : set) {
            auto smaller = set;
            smaller.erase(n);
            EXPECT_FALSE(satisfies(g, roles, smaller, req)) << s.id << "/" << v;
          }
        }
      }
    }
}

TEST(Collapsibility, Examples) {
  auto u = collapsibility_conditions(collider_d(), StudyRoles::from_graph(collider_d()), "U", MeasureScale::OddsRatio);
  EXPECT_FALSE(u.first);
  EXPECT_FALSE(u.second);
  EXPECT_EQ(u.which, "none");

  auto greenland = roles_graph({{"C", "S"}, {"C", "D"}, {"X", "D"}});
  auto rr = collapsibility_conditions(greenland, StudyRoles::from_graph(greenland), "C", MeasureScale::RiskRatio);
  EXPECT_TRUE(rr.first);
  EXPECT_EQ(rr.which, "C ⫫ X");

  auto null = roles_graph({{"C", "S"}, {"C", "D"}, {"X", "S"}});
  null.node("X").role = Role::treatment();
  auto orr = collapsibility_conditions(null, StudyRoles::from_graph(null), "C", MeasureScale::OddsRatio);
  EXPECT_TRUE(orr.first);
  EXPECT_EQ(orr.first_statement, "C ⫫ X | D");

  auto off = collapsibility_conditions(greenland, StudyRoles::from_graph(greenland), "C", MeasureScale::OddsRatio);
  EXPECT_FALSE(off.first);
  EXPECT_FALSE(off.second);
}

TEST(Collapsibility, StudyPopulationOfMatchedDesign) {
  const auto& s = get_scenario("matched_cohort");
  const auto& g = s.document.graph;
  auto roles = StudyRoles::from_graph(g);
  EXPECT_TRUE(separated_in_population(g, {"C"}, {"X"}, {}, {"S"}));
  EXPECT_FALSE(d_separated(g, {"C"}, {"X"}, {"S"}).separated);
  auto h = study_population_graph(g, "S");
  EXPECT_FALSE(h.has_node("S"));
  EXPECT_FALSE(h.has_edge("C", "X"));
  auto c = collapsibility_conditions(g, roles, "C", MeasureScale::RiskRatio, {"S"});
  EXPECT_TRUE(c.first);
  EXPECT_EQ(c.first_statement, "C ⫫ X | S");
  EXPECT_THROW(study_population_graph(get_scenario("cohort").document.graph, "S"), RoleError);
}

TEST(Decision, ClinicalTrial) {
  auto roles = StudyRoles::from_graph(clinical());
  auto off = adjustment_decision(clinical(), roles, "C", MeasureScale::OddsRatio,
                                 Hypothesis::off_null(MeasureScale::OddsRatio));
  EXPECT_TRUE(off.needs_adjustment);
  EXPECT_EQ(off.identified_target, IdentifiedTarget::None);
  auto null = adjustment_decision(clinical(), roles, "C", MeasureScale::RiskRatio, Hypothesis::null());
  EXPECT_FALSE(null.needs_adjustment);
}

TEST(Decision, MatchedCaseControl) {
  const auto& g = get_scenario("matched_casecontrol").document.graph;
  auto roles = StudyRoles::from_graph(g);
  auto off = adjustment_decision(g, roles, "C", MeasureScale::OddsRatio, Hypothesis::off_null(MeasureScale::OddsRatio));
  EXPECT_TRUE(off.needs_adjustment);
  EXPECT_TRUE(off.equalities[1]);
  EXPECT_FALSE(off.equalities[2]);
  EXPECT_FALSE(adjustment_decision(g, roles, "C", MeasureScale::OddsRatio, Hypothesis::null()).needs_adjustment);
}

TEST(Decision, Greenland) {
  const auto& g = get_scenario("greenland").document.graph;
  auto roles = StudyRoles::from_graph(g);
  auto rr = adjustment_decision(g, roles, "C", MeasureScale::RiskRatio, Hypothesis::off_null(MeasureScale::RiskRatio));
  EXPECT_FALSE(rr.needs_adjustment);
  EXPECT_EQ(rr.identified_target, IdentifiedTarget::MarginalEligible);
  EXPECT_TRUE(adjustment_decision(g, roles, "C", MeasureScale::OddsRatio, Hypothesis::off_null(MeasureScale::OddsRatio))
                  .needs_adjustment);
  EXPECT_FALSE(adjustment_decision(g, roles, "C", MeasureScale::OddsRatio, Hypothesis::null()).needs_adjustment);
  // Without a no-effect-modification assumption the measure is not collapsible.
  EXPECT_TRUE(adjustment_decision(g, roles, "C", MeasureScale::RiskRatio, Hypothesis::off_null()).needs_adjustment);
}

TEST(Decision, ConfounderGivesConditionalTarget) {
  const auto& g = get_scenario("matched_cohort").document.graph;
  auto r = adjustment_decision(g, StudyRoles::from_graph(g), "C", MeasureScale::RiskRatio,
                               Hypothesis::off_null(MeasureScale::RiskRatio));
  EXPECT_TRUE(r.confounder);
  EXPECT_FALSE(r.needs_adjustment);
  EXPECT_EQ(r.identified_target, IdentifiedTarget::ConditionalEligible);
}

TEST(Decision, UnmeasuredCovariateRejected) {
  auto g = collider_x(true);
  EXPECT_THROW(adjustment_decision(g, StudyRoles::from_graph(g), "V", MeasureScale::OddsRatio, Hypothesis::null()),
               UnmeasuredCovariate);
}

TEST(Decision, NullNeverNeedsAdjustmentForRegistryCovariates) {
  for (const auto& s : scenario_registry())
    for (const auto& [variant, table] : s.expected)
      for (const auto& d : table.decisions) {
        const auto g = s.variant_document(variant).graph;
        for (auto m : {MeasureScale::RiskDifference, MeasureScale::RiskRatio, MeasureScale::OddsRatio})
          EXPECT_FALSE(adjustment_decision(g, StudyRoles::from_graph(g), d.covariate, m, Hypothesis::null())
                           .needs_adjustment)
              << s.id << "/" << variant;
      }
}

TEST(Registry, ListAndLookup) {
  EXPECT_EQ(list_scenarios(), (std::vector<std::string>{"cohort", "casecontrol", "colliderS", "colliderX", "colliderD",
                                                        "greenland", "clinical", "matched_cohort",
                                                        "matched_casecontrol", "casecohort"}));
  EXPECT_THROW(get_scenario("nope"), UnknownScenario);
  EXPECT_THROW(expected_verdicts("cohort", "nope"), UnknownVariant);
  EXPECT_EQ(&expected_verdicts("matched_cohort", "no-C→D"), &expected_verdicts("matched_cohort", "no-C->D"));
}

TEST(Registry, SpecificEntries) {
  auto has = [](const std::string& id, const std::string& v, ExpectedCondition e) {
    const auto& t = expected_verdicts(id, v);
    return std::find(t.conditions.begin(), t.conditions.end(), e) != t.conditions.end();
  };
  EXPECT_TRUE(has("clinical", "base", {Condition::Cohort, {"C"}, true, 1, false}));
  EXPECT_TRUE(has("matched_cohort", "no-C->D", {Condition::Cohort, {}, true, 1, false}));
  for (const NodeSet& c : {NodeSet{"U"}, NodeSet{"V"}, NodeSet{"U", "V"}})
    EXPECT_TRUE(has("colliderX", "base", {Condition::Cohort, c, true, 1, false}));
  EXPECT_TRUE(has("casecohort", "base", {Condition::Cohort, {}, true, 1, false}));
  EXPECT_TRUE(has("casecohort", "base", {Condition::CaseControl, {}, true, 2, true}));
}

TEST(Registry, EngineReproducesEveryEntry) {
  std::size_t entries = 0;
  for (const auto& s : scenario_registry())
    for (const auto& [variant, table] : s.expected) {
      const auto doc = s.variant_document(variant);
      for (const auto& e : table.conditions) {
        ++entries;
        EXPECT_EQ(evaluate_expected(doc, e).holds, e.holds) << s.id << "/" << variant << " " << to_string(e.condition);
      }
      for (const auto& e : table.decisions) {
        ++entries;
        EXPECT_EQ(evaluate_expected(doc, e).needs_adjustment, e.needs_adjustment) << s.id << "/" << variant;
      }
    }
  EXPECT_GE(entries, 40u);
}

TEST(Registry, ConditionsAgreeWithPathOracleOnSwigs) {
  for (const auto& s : scenario_registry())
    for (const auto& [variant, table] : s.expected) {
      const auto doc = s.variant_document(variant);
      const auto roles = StudyRoles::from_graph(doc.graph);
      for (const auto& e : table.conditions) {
        const auto v = evaluate_expected(doc, e);
        const NodeId target = e.condition == Condition::CaseControl ? roles.outcome : roles.treatment;
        const auto sw = build_swig(doc.graph, Intervention::on(target, identities::free_label(doc.graph, target)));
        NodeSet a, b;
        if (e.condition == Condition::Exchangeability) {
          a = {roles.treatment};
          b = {roles.outcome};
        } else {
          a = {roles.selection[static_cast<std::size_t>(e.stage - 1)]};
          b = {e.condition == Condition::Cohort ? roles.outcome : roles.treatment};
        }
        EXPECT_EQ(oracle::d_separated(sw.random_graph(), a, b, v.conditioning_set), e.holds)
            << s.id << "/" << variant << " " << v.statement;
      }
    }
}

// Graphical verdicts against numeric independence in exact SWIG joints.
TEST(Registry, NumericSoundnessAndFaithfulness) {
  for (const auto& s : scenario_registry())
    for (const auto& [variant, table] : s.expected) {
      const auto doc = s.variant_document(variant);
      const auto roles = StudyRoles::from_graph(doc.graph);
      // Matching tunes selection to cancel dependences the graph still shows.
      const bool matched = std::any_of(doc.graph.nodes().begin(), doc.graph.nodes().end(),
                                       [](const Node& n) { return n.match.has_value(); });
      for (const auto& e : table.conditions) {
        const auto v = evaluate_expected(doc, e);
        double worst = 0;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
          const double dev = identities::swig_ci_deviation(oracle::random_model(doc.graph, seed), roles, v);
          if (v.holds) {
            EXPECT_LT(dev, 1e-9) << s.id << "/" << variant << " " << v.statement << " seed " << seed;
          }
          worst = std::max(worst, dev);
        }
        if (!v.holds && !matched) {
          EXPECT_GT(worst, 1e-6) << s.id << "/" << variant << " " << v.statement;
        }
      }
    }
}

TEST(Identities, CertifiedConditionsGiveExactEqualities) {
  for (const auto& s : scenario_registry())
    for (const auto& [variant, table] : s.expected) {
      const auto doc = s.variant_document(variant);
      const auto roles = StudyRoles::from_graph(doc.graph);
      for (const auto& e : table.conditions) {
        if (!e.holds) continue;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
          const auto m = oracle::random_model(doc.graph, seed);
          const double gap = e.condition == Condition::Exchangeability
                                 ? identities::exchangeability_gap(m, roles, e.adjust)
                                 : identities::selection_gap(m, roles, e.condition, e.adjust, e.stage,
                                                             e.include_earlier_stages);
          EXPECT_LT(gap, 1e-9) << s.id << "/" << variant << " seed " << seed;
        }
      }
    }
}
