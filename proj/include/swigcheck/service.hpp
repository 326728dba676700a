#pragma once

#include <functional>
#include <iostream>
#include <string>
#include <string_view>

#include <httplib.h>

#include "swigcheck/api.hpp"

namespace swigcheck::service {

inline constexpr std::size_t kMaxBody = 256 * 1024;

struct Response {
  int status = 200;
  json body;
};

namespace detail {

using swigcheck::detail::get_as;
using swigcheck::detail::get_or;

inline int status_for(const std::string& code) {
  if (code == "SyntaxError" || code == "SemanticError" || code == "BadRequest") return 400;
  if (code == "UnknownScenario" || code == "UnknownVariant" || code == "NotFound") return 404;
  return 422;
}

/// The document a request refers to: DSL `text`, a `graph` (with optional
/// `model`), or a built-in `scenario` with optional `variant`.
inline Document source(const json& req) {
  Document doc;
  if (req.contains("text")) {
    doc = parse(get_as<std::string>(req, "text"));
  } else if (req.contains("graph")) {
    doc.graph = dag_from_json(req.at("graph"));
    doc.title = get_or<std::string>(req.at("graph"), "title", "");
    if (req.contains("model") && !req.at("model").is_null()) doc.model = model_from_json(doc.graph, req.at("model"));
  } else if (req.contains("scenario")) {
    doc = get_scenario(get_as<std::string>(req, "scenario")).variant_document(get_or<std::string>(req, "variant", "base"));
  } else {
    throw BadRequest("request needs one of 'text', 'graph' or 'scenario'");
  }
  if (req.contains("roles") && !req.at("roles").is_null()) {
    const auto& r = req.at("roles");
    api::RoleOverrides o;
    if (r.contains("treatment")) o.treatment = get_as<std::string>(r, "treatment");
    if (r.contains("outcome")) o.outcome = get_as<std::string>(r, "outcome");
    if (r.contains("selection")) o.selection = get_as<std::vector<std::string>>(r, "selection");
    doc.graph = api::apply_roles(doc.graph, o);
    if (doc.model) {
      DiscreteModel m(doc.graph);
      for (const auto& n : doc.graph.nodes()) m.set_table(n.name, doc.model->cpt(n.name));
      doc.model = m;
    }
  }
  return doc;
}

inline MeasureScale measure_field(const json& req, const char* key, MeasureScale fallback) {
  if (!req.contains(key)) return fallback;
  auto m = measure_from_string(get_as<std::string>(req, key));
  if (!m) throw BadRequest(std::string("field '") + key + "' must be rd, rr or or");
  return *m;
}

inline NodeSet set_field(const json& req, const char* key) {
  auto v = get_or<std::vector<std::string>>(req, key, {});
  return NodeSet(v.begin(), v.end());
}

inline json post(std::string_view path, const json& req) {
  if (path == "/v1/parse") return api::parse_result(parse(get_as<std::string>(req, "text")));
  if (path == "/v1/check") {
    api::CheckRequest c;
    c.condition = get_or<std::string>(req, "condition", "all");
    c.adjust = set_field(req, "adjust");
    if (req.contains("stage")) c.stage = get_as<int>(req, "stage");
    c.null = get_or<bool>(req, "null", false);
    return api::check(source(req).graph, c);
  }
  if (path == "/v1/adjust") {
    Requirement r;
    r.exchangeability = get_or<bool>(req, "exchangeability", false);
    r.selection = api::requirement_from_string(get_or<std::string>(req, "require", "either"));
    return api::adjust(source(req).graph, r, get_or<bool>(req, "null", false));
  }
  if (path == "/v1/eval") {
    api::EvalRequest e;
    e.population = get_or<std::string>(req, "population", "eligible");
    e.measure = measure_field(req, "measure", MeasureScale::RiskDifference);
    e.stratify = get_or<std::vector<std::string>>(req, "stratify", {});
    return api::eval(source(req), e);
  }
  if (path == "/v1/decide") {
    Hypothesis h;
    if (get_or<bool>(req, "null", false)) {
      h = Hypothesis::null();
    } else if (req.contains("no_em") && !req.at("no_em").is_null()) {
      h = Hypothesis::off_null(measure_field(req, "no_em", MeasureScale::OddsRatio));
    }
    return api::decide(source(req).graph, get_as<std::string>(req, "covariate"),
                       measure_field(req, "measure", MeasureScale::OddsRatio), h);
  }
  if (path == "/v1/sweep") {
    const auto untreated = get_as<std::vector<double>>(req, "untreated");
    if (untreated.size() != 2) throw BadRequest("field 'untreated' needs two risks");
    return api::sweep(untreated[0], untreated[1], measure_field(req, "scale", MeasureScale::OddsRatio),
                      get_as<double>(req, "value"), get_or<std::size_t>(req, "grid", kDefaultGrid));
  }
  if (path == "/v1/labbe") {
    std::optional<MeasureScale> scale;
    if (req.contains("scale")) scale = measure_field(req, "scale", MeasureScale::OddsRatio);
    std::optional<double> value;
    if (req.contains("value")) value = get_as<double>(req, "value");
    return api::labbe(scale, value, get_or<std::size_t>(req, "resolution", kDefaultGrid));
  }
  if (path == "/v1/stats") {
    const auto cells = get_as<std::vector<double>>(req, "table");
    if (cells.size() != 4) throw BadRequest("field 'table' needs four counts a, b, c, d");
    std::optional<double> rr0;
    if (req.contains("rr0")) rr0 = get_as<double>(req, "rr0");
    return api::stats({cells[0], cells[1], cells[2], cells[3]}, rr0, get_or<bool>(req, "yates", false));
  }
  throw Error("NotFound", "no such endpoint: POST " + std::string(path));
}

inline json get(std::string_view path) {
  if (path == "/v1/scenarios") {
    json list = json::array();
    for (const auto& s : scenario_registry()) list.push_back(scenario_summary(s));
    return json{{"scenarios", list}};
  }
  const std::string_view prefix = "/v1/scenarios/";
  if (path.substr(0, prefix.size()) == prefix && path.size() > prefix.size())
    return scenario_detail(get_scenario(path.substr(prefix.size())));
  throw Error("NotFound", "no such endpoint: GET " + std::string(path));
}

}  // namespace detail

/// Routes one request. Pure: the response depends only on the arguments.
inline Response handle(std::string_view method, std::string_view path, std::string_view body) {
  try {
    if (method == "GET") return {200, envelope_ok(detail::get(path))};
    if (method != "POST") return {405, envelope_error("MethodNotAllowed", "method not allowed")};
    if (body.size() > kMaxBody) return {413, envelope_error("PayloadTooLarge", "request body exceeds 256 KiB")};
    if (body.find_first_not_of(" \t\r\n") == std::string_view::npos)
      return {400, envelope_error("BadRequest", "empty request body")};
    json req;
    try {
      req = json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      return {400, envelope_error("BadRequest", std::string("invalid JSON: ") + e.what())};
    }
    if (!req.is_object()) return {400, envelope_error("BadRequest", "request body must be a JSON object")};
    return {200, envelope_ok(detail::post(path, req))};
  } catch (const Error& e) {
    return {detail::status_for(e.code()), envelope_error(e)};
  } catch (const nlohmann::json::exception& e) {
    return {400, envelope_error("BadRequest", e.what())};
  }
}

struct ServerOptions {
  std::string bind = "127.0.0.1";
  int port = 8787;
  std::string allow_origin;  // empty: no CORS headers
};

/// Blocks serving HTTP until the process is stopped.
inline bool serve(const ServerOptions& opts, std::ostream& log = std::cerr) {
  httplib::Server server;
  server.set_payload_max_length(4 * kMaxBody);
  auto reply = [&opts](const Response& r, httplib::Response& res) {
    res.status = r.status;
    res.set_content(r.body.dump() + "\n", "application/json; charset=utf-8");
    if (!opts.allow_origin.empty()) {
      res.set_header("Access-Control-Allow-Origin", opts.allow_origin);
      res.set_header("Vary", "Origin");
    }
  };
  server.Get(R"(/.*)", [&](const httplib::Request& req, httplib::Response& res) {
    reply(handle("GET", req.path, req.body), res);
  });
  server.Post(R"(/.*)", [&](const httplib::Request& req, httplib::Response& res) {
    reply(handle("POST", req.path, req.body), res);
  });
  server.Options(R"(/.*)", [&](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
    if (!opts.allow_origin.empty()) {
      res.set_header("Access-Control-Allow-Origin", opts.allow_origin);
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
    }
  });
  log << "listening on http://" << opts.bind << ':' << opts.port << '\n';
  return server.listen(opts.bind, opts.port);
}

}  // namespace swigcheck::service
