#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "swigcheck/criteria.hpp"
#include "swigcheck/dsl.hpp"
#include "swigcheck/inference.hpp"
#include "swigcheck/scenarios.hpp"
#include "swigcheck/stats.hpp"
#include "swigcheck/sweep.hpp"

namespace swigcheck {

using json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1";

/// Malformed request payloads (missing or mistyped fields).
class BadRequest : public Error {
 public:
  explicit BadRequest(const std::string& message) : Error("BadRequest", message) {}
};

inline json envelope_ok(json result) {
  return json{{"schema_version", kSchemaVersion}, {"ok", true}, {"result", std::move(result)}};
}

inline json span_json(const SourceSpan& s) {
  return {{"line", s.line}, {"column", s.column}, {"end_line", s.end_line},
          {"end_column", s.end_column}, {"begin", s.begin}, {"end", s.end}};
}

inline json envelope_error(const std::string& code, const std::string& message,
                           const std::optional<SourceSpan>& span = std::nullopt) {
  json err{{"code", code}, {"message", message}};
  if (span) err["span"] = span_json(*span);
  return json{{"schema_version", kSchemaVersion}, {"ok", false}, {"error", std::move(err)}};
}

inline json envelope_error(const Error& e) { return envelope_error(e.code(), e.what(), e.span()); }

inline json to_json(const NodeSet& s) { return json(std::vector<std::string>(s.begin(), s.end())); }

inline json to_json(const Dag& g, const std::string& title = "") {
  json nodes = json::array();
  for (const auto& n : g.nodes()) {
    json j{{"name", n.name}, {"role", to_string(n.role.kind)}, {"latent", !n.observed}};
    if (n.role.kind == RoleKind::Selection) j["stage"] = n.role.stage;
    if (n.match) j["match"] = *n.match;
    if (n.balance) j["balance"] = *n.balance;
    nodes.push_back(std::move(j));
  }
  json edges = json::array();
  for (const auto& e : g.edges()) edges.push_back({{"from", e.from}, {"to", e.to}, {"dashed", e.dashed}});
  json out{{"name", g.name()}};
  if (!title.empty()) out["title"] = title;
  out["nodes"] = std::move(nodes);
  out["edges"] = std::move(edges);
  return out;
}

/// Tables as {node, parents, p1}; p1[i] is P(node = 1) when parent j takes
/// bit j of i.
inline json to_json(const DiscreteModel& m) {
  json out = json::array();
  for (const auto& n : m.graph().nodes())
    out.push_back({{"node", n.name}, {"parents", m.graph().parents(n.name)}, {"p1", m.cpt(n.name)}});
  return out;
}

namespace detail {

inline const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw BadRequest(std::string("missing field '") + key + "'");
  return j.at(key);
}

template <typename T>
T get_as(const json& j, const char* key) {
  const auto& v = field(j, key);
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw BadRequest(std::string("field '") + key + "' has the wrong type");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  return get_as<T>(j, key);
}

}  // namespace detail

inline Dag dag_from_json(const json& j) {
  Dag g(detail::get_or<std::string>(j, "name", "G"));
  const auto& nodes = detail::field(j, "nodes");
  if (!nodes.is_array()) throw BadRequest("field 'nodes' must be an array");
  for (const auto& n : nodes) {
    Node node{detail::get_as<std::string>(n, "name"), Role::covariate(), true, std::nullopt, std::nullopt};
    auto role = role_kind_from_string(detail::get_or<std::string>(n, "role", "covariate"));
    if (!role) throw BadRequest("unknown role for node " + node.name);
    node.role.kind = *role;
    if (*role == RoleKind::Selection) node.role.stage = detail::get_or<int>(n, "stage", 1);
    node.observed = !detail::get_or<bool>(n, "latent", false);
    if (n.contains("match")) node.match = detail::get_as<std::string>(n, "match");
    if (n.contains("balance")) node.balance = detail::get_as<std::string>(n, "balance");
    g.add_node(std::move(node));
  }
  const auto& edges = detail::field(j, "edges");
  if (!edges.is_array()) throw BadRequest("field 'edges' must be an array");
  for (const auto& e : edges)
    g.add_edge(detail::get_as<std::string>(e, "from"), detail::get_as<std::string>(e, "to"),
               detail::get_or<bool>(e, "dashed", false));
  return validate(g);
}

inline DiscreteModel model_from_json(const Dag& g, const json& j) {
  if (!j.is_array()) throw BadRequest("model must be an array of tables");
  DiscreteModel m(g);
  std::set<NodeId> seen;
  for (const auto& t : j) {
    const auto node = detail::get_as<std::string>(t, "node");
    const auto parents = detail::get_or<std::vector<std::string>>(t, "parents", {});
    if (parents != g.parents(node)) throw InvalidCpt("parents of " + node + " must be listed as in the graph");
    m.set_table(node, detail::get_as<std::vector<double>>(t, "p1"));
    seen.insert(node);
  }
  for (const auto& n : g.nodes())
    if (!seen.count(n.name)) throw InvalidCpt("no table for " + n.name);
  return m;
}

inline json to_json(const PathCertificate& c) {
  json nodes = json::array(), edges = json::array(), interior = json::array();
  for (std::size_t i = 0; i < c.steps.size(); ++i) {
    const auto& s = c.steps[i];
    nodes.push_back(s.node);
    if (s.to_next) {
      const auto& next = c.steps[i + 1].node;
      bool fwd = *s.to_next == EdgeDir::Forward;
      edges.push_back({{"from", fwd ? s.node : next}, {"to", fwd ? next : s.node}});
    }
  }
  for (const auto& n : c.interior)
    interior.push_back({{"node", n.node}, {"collider", n.collider}, {"open", n.open}, {"reason", n.reason}});
  return {{"path", c.to_string()}, {"open", c.open}, {"nodes", nodes}, {"edges", edges}, {"interior", interior}};
}

inline json to_json(const ConditionVerdict& v) {
  return {{"condition", to_string(v.condition)},
          {"stage", v.stage},
          {"holds", v.holds},
          {"adjust", to_json(v.adjust)},
          {"conditioning_set", to_json(v.conditioning_set)},
          {"statement", v.statement},
          {"certificate", v.certificate ? to_json(*v.certificate) : json(nullptr)}};
}

inline json to_json(const Hypothesis& h) {
  json out{{"kind", h.is_null() ? "null" : "off_null"}};
  out["no_effect_modification"] = h.no_effect_modification ? json(to_string(*h.no_effect_modification)) : json(nullptr);
  return out;
}

inline json to_json(const Collapsibility& c) {
  return {{"holds", c.holds}, {"first", c.first}, {"second", c.second},
          {"first_statement", c.first_statement}, {"second_statement", c.second_statement}, {"which", c.which}};
}

inline json to_json(const DecisionReport& r) {
  json verdicts = json::array();
  for (const auto& v : r.selection_verdicts) verdicts.push_back(to_json(v));
  return {{"measure", to_string(r.measure)},
          {"covariate", r.covariate},
          {"hypothesis", to_json(r.hypothesis)},
          {"equalities", r.equalities},
          {"confounder", r.confounder},
          {"needs_adjustment", r.needs_adjustment},
          {"identified_target", to_string(r.identified_target)},
          {"eligible", to_json(r.eligible)},
          {"study", to_json(r.study)},
          {"selection_verdicts", verdicts}};
}

inline json to_json(const Assignment& a) {
  json out = json::object();
  for (const auto& [k, v] : a) out[k] = v;
  return out;
}

inline json to_json(const MeasureReport& r) {
  auto risks = [](const Risks& k) { return json{{"treated", k.treated}, {"untreated", k.untreated}}; };
  json strata = json::array();
  for (const auto& s : r.strata)
    strata.push_back({{"stratum", to_json(s.stratum)}, {"weight", s.weight}, {"risks", risks(s.risks)}, {"value", s.value}});
  json out{{"scale", to_string(r.scale)},
           {"population", r.population},
           {"marginal", r.marginal},
           {"marginal_risks", risks(r.marginal_risks)},
           {"strata", strata}};
  out["standardized"] = r.standardized ? json(*r.standardized) : json(nullptr);
  if (r.standardized) out["standardized_risks"] = risks(r.standardized_risks);
  return out;
}

inline json to_json(const std::vector<SweepPoint>& pts) {
  json out = json::array();
  for (const auto& p : pts)
    out.push_back({{"p", p.p}, {"or", p.odds_ratio}, {"rr", p.risk_ratio}, {"or_null", p.odds_ratio_null},
                   {"rr_null", p.risk_ratio_null}});
  return out;
}

inline json to_json(const LabbeCurve& c) {
  json pts = json::array();
  for (const auto& p : c.points) pts.push_back({{"p0", p.p0}, {"p1", p.p1}});
  return {{"name", c.name}, {"scale", to_string(c.scale)}, {"value", c.value}, {"points", pts}};
}

inline json to_json(const TableStats& s) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"rd", opt(s.rd)}, {"rr", opt(s.rr)}, {"or", opt(s.odds_ratio)},
          {"chi_square", s.chi_square}, {"chi_square_p", s.chi_square_p}};
}

inline json to_json(const RrTest& t) {
  return {{"log_rr", t.log_rr}, {"se", t.se}, {"z", t.z}, {"p", t.p}};
}

inline json to_json(const ExpectedTable& t) {
  json conds = json::array(), decs = json::array();
  for (const auto& c : t.conditions)
    conds.push_back({{"condition", to_string(c.condition)}, {"adjust", to_json(c.adjust)}, {"holds", c.holds},
                     {"stage", c.stage}, {"include_earlier_stages", c.include_earlier_stages}});
  for (const auto& d : t.decisions)
    decs.push_back({{"covariate", d.covariate}, {"measure", to_string(d.measure)},
                    {"hypothesis", to_json(d.hypothesis)}, {"needs_adjustment", d.needs_adjustment}});
  return {{"conditions", conds}, {"decisions", decs}};
}

inline json scenario_summary(const Scenario& s) {
  return {{"id", s.id}, {"title", s.title}, {"variants", s.variant_names()}};
}

inline json scenario_detail(const Scenario& s) {
  json expected = json::object();
  json variants = json::object();
  for (const auto& v : s.variant_names()) {
    expected[v] = to_json(expected_verdicts(s.id, v));
    const auto doc = s.variant_document(v);
    variants[v] = {{"text", serialize(doc)}, {"graph", to_json(doc.graph, doc.title)}};
  }
  return {{"id", s.id},
          {"title", s.title},
          {"text", serialize(s.document)},
          {"graph", to_json(s.document.graph, s.document.title)},
          {"model", to_json(*s.document.model)},
          {"variants", variants},
          {"expected", expected}};
}

}  // namespace swigcheck
