#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "swigcheck/service.hpp"

using namespace swigcheck;
using service::handle;

namespace {

service::Response post(const std::string& path, const json& body) { return handle("POST", path, body.dump()); }

const char* kLatentCollider =
    "dag LatentCollider { X [role=treatment]; D [role=outcome]; S [role=selection]; U [latent]; X -> D; U -> D; U -> S; }";

}  // namespace

TEST(Envelope, Shape) {
  auto r = handle("GET", "/v1/scenarios", "");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body["schema_version"], "1");
  EXPECT_EQ(r.body["ok"], true);
  auto e = handle("GET", "/v1/nowhere", "");
  EXPECT_EQ(e.status, 404);
  EXPECT_EQ(e.body["schema_version"], "1");
  EXPECT_EQ(e.body["ok"], false);
  EXPECT_EQ(e.body["error"]["code"], "NotFound");
}

TEST(Envelope, TransportErrors) {
  EXPECT_EQ(handle("DELETE", "/v1/parse", "{}").status, 405);
  EXPECT_EQ(handle("POST", "/v1/parse", "").status, 400);
  EXPECT_EQ(handle("POST", "/v1/parse", "  \n").status, 400);
  EXPECT_EQ(handle("POST", "/v1/parse", "{oops").status, 400);
  EXPECT_EQ(handle("POST", "/v1/parse", "[1]").status, 400);
  EXPECT_EQ(post("/v1/parse", json::object()).status, 400);
  EXPECT_EQ(post("/v1/parse", {{"text", 7}}).status, 400);
  const std::string big(service::kMaxBody + 1, ' ');
  auto r = handle("POST", "/v1/parse", big);
  EXPECT_EQ(r.status, 413);
  EXPECT_EQ(r.body["error"]["code"], "PayloadTooLarge");
}

TEST(Parse, LatentNodeListed) {
  auto r = post("/v1/parse", {{"text", kLatentCollider}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  const auto& nodes = r.body["result"]["graph"]["nodes"];
  auto u = std::find_if(nodes.begin(), nodes.end(), [](const json& n) { return n["name"] == "U"; });
  ASSERT_NE(u, nodes.end());
  EXPECT_EQ((*u)["latent"], true);
  EXPECT_EQ(r.body["result"]["model"], nullptr);
  EXPECT_TRUE(r.body["result"]["warnings"].empty());
}

TEST(Parse, RoundTripCanonical) {
  auto r = post("/v1/parse", {{"text", kLatentCollider}});
  const auto text = r.body["result"]["text"].get<std::string>();
  EXPECT_EQ(text, serialize(parse(kLatentCollider)));
  auto again = post("/v1/parse", {{"text", text}});
  EXPECT_EQ(again.body["result"]["text"], text);
  EXPECT_EQ(again.body["result"]["graph"], r.body["result"]["graph"]);
}

TEST(Parse, SyntaxErrorCarriesSpan) {
  auto r = post("/v1/parse", {{"text", "dag Bad { X -> X; }"}});
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body["error"]["code"], "SemanticError");
  EXPECT_EQ(r.body["error"]["span"]["line"], 1);
  auto s = post("/v1/parse", {{"text", "dag G {\n  A -> ;\n}"}});
  EXPECT_EQ(s.status, 400);
  EXPECT_EQ(s.body["error"]["code"], "SyntaxError");
  EXPECT_EQ(s.body["error"]["span"]["line"], 2);
}

TEST(Check, ClinicalCaseControlCertificate) {
  auto r = post("/v1/check", {{"scenario", "clinical"}, {"condition", "casecontrol"}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  const auto& v = r.body["result"]["verdicts"];
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0]["holds"], false);
  const auto& edges = v[0]["certificate"]["edges"];
  EXPECT_NE(std::find(edges.begin(), edges.end(), json{{"from", "S"}, {"to", "X"}}), edges.end()) << v[0].dump();
}

TEST(Check, CohortAdjustedHolds) {
  auto r = post("/v1/check", {{"scenario", "cohort"}, {"adjust", {"C"}}, {"condition", "cohort"}});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["result"]["verdicts"][0]["holds"], true);
  EXPECT_EQ(r.body["result"]["verdicts"][0]["certificate"], nullptr);
  auto all = post("/v1/check", {{"scenario", "cohort"}});
  EXPECT_EQ(all.body["result"]["verdicts"].size(), 3u);
}

TEST(Check, LatentAdjustmentRejected) {
  auto r = post("/v1/check", {{"text", kLatentCollider}, {"adjust", {"U"}}});
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(r.body["error"]["code"], "InvalidAdjustSet");
  EXPECT_NE(r.body["error"]["message"].get<std::string>().find("U"), std::string::npos);
}

TEST(Check, RequestErrors) {
  EXPECT_EQ(post("/v1/check", {{"scenario", "nope"}}).status, 404);
  EXPECT_EQ(post("/v1/check", {{"scenario", "cohort"}, {"variant", "nope"}}).status, 404);
  EXPECT_EQ(post("/v1/check", {{"scenario", "cohort"}, {"condition", "bogus"}}).status, 400);
  EXPECT_EQ(post("/v1/check", {{"scenario", "cohort"}, {"stage", 3}}).status, 422);
  EXPECT_EQ(post("/v1/check", {{"adjust", {"C"}}}).status, 400);
}

TEST(Check, RolesOverride) {
  auto r = post("/v1/check", {{"text", "dag G { A; B; C; A -> B; C -> B; }"},
                              {"roles", {{"treatment", "A"}, {"outcome", "B"}, {"selection", {"C"}}}},
                              {"condition", "exchangeability"}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["result"]["verdicts"][0]["holds"], true);
}

TEST(Adjust, ColliderAtTreatment) {
  auto r = post("/v1/adjust", {{"scenario", "colliderX"}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["result"]["sets"], json::parse(R"([["U"],["V"]])"));
}

TEST(Eval, TrialRiskRatio) {
  const std::string text = serialize({trial_model(0.5, 0.1, 0.4, MeasureScale::RiskRatio, 2).graph(),
                                      trial_model(0.5, 0.1, 0.4, MeasureScale::RiskRatio, 2), ""});
  auto r = post("/v1/eval", {{"text", text}, {"measure", "rr"}, {"stratify", {"C"}}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_NEAR(r.body["result"]["marginal"].get<double>(), 2.0, 1e-12);
  EXPECT_EQ(r.body["result"]["strata"].size(), 2u);
}

TEST(Eval, ZeroStratumIs422) {
  const std::string text = "dag G { C; X [role=treatment]; D [role=outcome]; C -> D; X -> D; }\n"
                           "model { p(C=1) = 0; p(X=1) = 0.5; p(D=1 | C=0, X=0) = 0.1; p(D=1 | C=0, X=1) = 0.2;"
                           " p(D=1 | C=1, X=0) = 0.3; p(D=1 | C=1, X=1) = 0.4; }";
  auto r = post("/v1/eval", {{"text", text}, {"measure", "rd"}, {"stratify", {"C"}}});
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(r.body["error"]["code"], "UndefinedMeasure");
  EXPECT_EQ(post("/v1/eval", {{"text", kLatentCollider}}).status, 400);
}

TEST(Decide, MatchedCaseControlOffNull) {
  auto r = post("/v1/decide", {{"scenario", "matched_casecontrol"}, {"covariate", "C"}, {"measure", "or"}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["result"]["needs_adjustment"], true);
  auto n = post("/v1/decide",
                {{"scenario", "matched_casecontrol"}, {"covariate", "C"}, {"measure", "or"}, {"null", true}});
  EXPECT_EQ(n.body["result"]["needs_adjustment"], false);
}

TEST(Decide, Greenland) {
  auto rr = post("/v1/decide", {{"scenario", "greenland"}, {"covariate", "C"}, {"measure", "rr"}, {"no_em", "rr"}});
  EXPECT_EQ(rr.body["result"]["needs_adjustment"], false);
  auto orr = post("/v1/decide", {{"scenario", "greenland"}, {"covariate", "C"}, {"measure", "or"}});
  EXPECT_EQ(orr.body["result"]["needs_adjustment"], true);
  EXPECT_EQ(post("/v1/decide", {{"scenario", "greenland"}, {"covariate", "Q"}}).status, 422);
  EXPECT_EQ(post("/v1/decide", {{"scenario", "greenland"}, {"covariate", "C"}, {"measure", "xx"}}).status, 400);
}

TEST(Sweep, TrialPoints) {
  auto r = post("/v1/sweep", {{"untreated", {0.2, 0.8}}, {"scale", "or"}, {"value", 2}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  const auto& pts = r.body["result"]["points"];
  ASSERT_EQ(pts.size(), kDefaultGrid);
  for (const auto& p : pts) {
    EXPECT_NEAR(p["or_null"].get<double>(), 1.0, 1e-12);
    for (const char* k : {"p", "or", "rr", "rr_null"}) EXPECT_TRUE(p.contains(k));
  }
  EXPECT_EQ(post("/v1/sweep", {{"untreated", {0.2, 0.8}}, {"value", 2}, {"grid", 1002}}).status, 422);
  EXPECT_EQ(post("/v1/sweep", {{"untreated", {0.2, 0.8}}, {"value", 2}, {"grid", 1001}}).status, 200);
  EXPECT_EQ(post("/v1/sweep", {{"untreated", {0.2}}, {"value", 2}}).status, 400);
}

TEST(Labbe, Curves) {
  auto all = post("/v1/labbe", json::object());
  ASSERT_EQ(all.status, 200);
  EXPECT_EQ(all.body["result"]["curves"][0]["name"], "null");
  auto one = post("/v1/labbe", {{"scale", "rr"}, {"value", 2}, {"resolution", 5}});
  EXPECT_EQ(one.body["result"]["curves"].size(), 1u);
  EXPECT_EQ(one.body["result"]["curves"][0]["points"].size(), 5u);
}

TEST(Stats, ChiSquare) {
  auto r = post("/v1/stats", {{"table", {20, 30, 30, 20}}, {"rr0", 1}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_NEAR(r.body["result"]["stats"]["chi_square"].get<double>(), 4.0, 1e-12);
  EXPECT_TRUE(r.body["result"].contains("rr_test"));
  EXPECT_EQ(post("/v1/stats", {{"table", {0, 0, 0, 0}}}).status, 422);
}

TEST(Scenarios, Listing) {
  auto r = handle("GET", "/v1/scenarios", "");
  const auto& list = r.body["result"]["scenarios"];
  EXPECT_EQ(list.size(), 10u);
  std::vector<std::string> ids;
  for (const auto& s : list) ids.push_back(s["id"]);
  EXPECT_EQ(ids, list_scenarios());
}

TEST(Scenarios, CaseCohortStages) {
  auto r = handle("GET", "/v1/scenarios/casecohort", "");
  ASSERT_EQ(r.status, 200);
  std::map<std::string, int> stages;
  for (const auto& n : r.body["result"]["graph"]["nodes"])
    if (n.contains("stage")) stages[n["name"]] = n["stage"];
  EXPECT_EQ(stages, (std::map<std::string, int>{{"S1", 1}, {"S2", 2}}));
  EXPECT_EQ(parse(r.body["result"]["text"].get<std::string>()), get_scenario("casecohort").document);
  EXPECT_FALSE(r.body["result"]["expected"]["base"]["conditions"].empty());
}

TEST(Scenarios, UnknownIs404) {
  auto r = handle("GET", "/v1/scenarios/x", "");
  EXPECT_EQ(r.status, 404);
  EXPECT_EQ(r.body["error"]["code"], "UnknownScenario");
}

TEST(Statelessness, PermutedSequence) {
  std::vector<std::pair<std::string, json>> reqs = {
      {"/v1/check", {{"scenario", "colliderS"}}},
      {"/v1/adjust", {{"scenario", "colliderX"}, {"variant", "V-latent"}}},
      {"/v1/decide", {{"scenario", "clinical"}, {"covariate", "C"}}},
      {"/v1/eval", {{"scenario", "clinical"}, {"population", "study"}, {"measure", "or"}, {"stratify", {"C"}}}},
      {"/v1/sweep", {{"untreated", {0.1, 0.4}}, {"scale", "rr"}, {"value", 2}, {"grid", 11}}},
      {"/v1/parse", {{"text", kLatentCollider}}},
      {"/v1/check", {{"scenario", "nope"}}},
  };
  std::vector<service::Response> first;
  for (const auto& [path, body] : reqs) first.push_back(post(path, body));
  std::vector<std::size_t> order(reqs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937 rng(7);
  for (int round = 0; round < 5; ++round) {
    std::shuffle(order.begin(), order.end(), rng);
    for (auto i : order) {
      auto r = post(reqs[i].first, reqs[i].second);
      EXPECT_EQ(r.status, first[i].status);
      EXPECT_EQ(r.body, first[i].body) << reqs[i].first;
    }
  }
}
