// swigcheck command-line front end and HTTP service launcher.
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "swigcheck/service.hpp"

namespace fs = std::filesystem;
using namespace swigcheck;

namespace {

enum Exit { kOk = 0, kConditionFails = 1, kUsage = 2, kInput = 3, kNumeric = 4 };

int exit_code_for(const std::string& code) {
  static const std::set<std::string> numeric{"UndefinedMeasure", "ZeroProbabilityEvent", "DegenerateTable",
                                             "InfeasibleMatch",  "InvalidValue",         "TooManyVariables"};
  return numeric.count(code) ? kNumeric : kInput;
}

class Output {
 public:
  explicit Output(bool json_mode) : json_(json_mode) {
    const char* env = std::getenv("SWIGCHECK_COLOR");
    const std::string mode = env ? env : "auto";
    color_ = mode == "always" || (mode != "never" && isatty(STDOUT_FILENO));
  }

  bool json_mode() const { return json_; }

  std::string verdict(bool holds) const {
    const char* word = holds ? "holds" : "fails";
    if (!color_) return word;
    return std::string(holds ? "\033[32m" : "\033[31m") + word + "\033[0m";
  }

  void result(const json& r) const { std::cout << envelope_ok(r).dump(2) << '\n'; }

  int error(const std::string& code, const std::string& message, const std::optional<SourceSpan>& span,
            const std::string& file) const {
    if (json_) std::cout << envelope_error(code, message, span).dump(2) << '\n';
    std::cerr << "error[" << code << "]";
    if (span) std::cerr << ' ' << (file.empty() ? "<input>" : file) << ':' << span->line << ':' << span->column;
    std::cerr << ": " << message << '\n';
    return exit_code_for(code);
  }

 private:
  bool json_ = false;
  bool color_ = false;
};

std::string read_text(const std::string& path) {
  std::stringstream ss;
  if (path == "-") {
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("FileError", "cannot read " + path);
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("FileError", "cannot write " + path);
  out << text;
}

/// Comma- or space-separated node names; an empty string is the empty set.
NodeSet split_set(const std::vector<std::string>& items) {
  NodeSet out;
  for (const auto& item : items) {
    std::string cur;
    for (char c : item + ",") {
      if (c == ',' || c == ' ') {
        if (!cur.empty()) out.insert(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
  }
  return out;
}

MeasureScale scale_of(const std::string& s) { return *measure_from_string(s); }

struct GraphArgs {
  std::string file;
  std::string treatment, outcome;
  std::vector<std::string> selection;

  void add(CLI::App* cmd) {
    cmd->add_option("file", file, "graph file (.dag), or - for stdin")->required();
    cmd->add_option("--treatment", treatment, "treatment node (overrides the file)");
    cmd->add_option("--outcome", outcome, "outcome node (overrides the file)");
    cmd->add_option("--selection", selection, "selection nodes in stage order (overrides the file)");
  }

  Document load() const {
    Document doc = parse(read_text(file));
    api::RoleOverrides o;
    if (!treatment.empty()) o.treatment = treatment;
    if (!outcome.empty()) o.outcome = outcome;
    if (!selection.empty()) o.selection = selection;
    if (o.treatment || o.outcome || o.selection) {
      doc.graph = api::apply_roles(doc.graph, o);
      if (doc.model) {
        DiscreteModel m(doc.graph);
        for (const auto& n : doc.graph.nodes()) m.set_table(n.name, doc.model->cpt(n.name));
        doc.model = m;
      }
    }
    return doc;
  }
};

std::string set_text(const json& arr) {
  std::string out = "{";
  for (std::size_t i = 0; i < arr.size(); ++i) out += (i ? ", " : "") + arr[i].get<std::string>();
  return out + "}";
}

void print_verdict(const Output& out, const json& v) {
  std::cout << v["condition"].get<std::string>();
  if (v["condition"] != "exchangeability") std::cout << " (stage " << v["stage"].get<int>() << ")";
  std::cout << ": " << v["statement"].get<std::string>() << "  " << out.verdict(v["holds"].get<bool>()) << '\n';
  if (v["certificate"].is_null()) return;
  const auto& c = v["certificate"];
  std::cout << "  open path: " << c["path"].get<std::string>() << '\n';
  for (const auto& n : c["interior"])
    std::cout << "    " << n["node"].get<std::string>() << ": " << n["reason"].get<std::string>() << '\n';
}

std::string num(const json& v) { return v.is_null() ? "undefined" : format_number(v.get<double>()); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Selection-bias and confounding checks on causal DAGs via single-world intervention graphs"};
  app.require_subcommand(1);
  app.fallthrough();
  bool json_out = false;
  app.add_flag("--json", json_out, "emit the JSON envelope used by the HTTP service");

  // check
  auto* check = app.add_subcommand("check", "decide exchangeability, cohort and case-control conditions");
  GraphArgs check_graph;
  check_graph.add(check);
  std::vector<std::string> check_adjust;
  std::string check_condition = "all", check_expect;
  int check_stage = 0;
  bool check_null = false;
  check->add_option("--adjust", check_adjust, "adjustment set, comma separated (\"\" for the empty set)");
  check->add_option("--condition", check_condition, "cohort | casecontrol | exchangeability | all")
      ->check(CLI::IsMember({"cohort", "casecontrol", "exchangeability", "all"}));
  check->add_option("--stage", check_stage, "only this selection stage");
  check->add_flag("--null", check_null, "remove dashed edges and the treatment -> outcome edge first");
  check->add_option("--expect", check_expect, "exit 1 unless every verdict matches")
      ->check(CLI::IsMember({"holds", "fails"}));

  // adjust
  auto* adjust = app.add_subcommand("adjust", "list minimal adjustment sets");
  GraphArgs adjust_graph;
  adjust_graph.add(adjust);
  std::string adjust_require = "either";
  bool adjust_exch = false, adjust_null = false;
  adjust->add_option("--require", adjust_require, "cohort | casecontrol | either | none")
      ->check(CLI::IsMember({"cohort", "casecontrol", "either", "none"}));
  adjust->add_flag("--exchangeability", adjust_exch, "also require exchangeability");
  adjust->add_flag("--null", adjust_null, "remove dashed edges and the treatment -> outcome edge first");

  // swig
  auto* swig = app.add_subcommand("swig", "build a SWIG and export it as DOT");
  GraphArgs swig_graph;
  swig_graph.add(swig);
  std::vector<std::string> swig_set;
  std::string swig_dot;
  swig->add_option("--set", swig_set, "intervention NODE=label (label defaults to the lowercased name)")->required();
  swig->add_option("--dot", swig_dot, "write DOT here instead of stdout");

  // eval
  auto* evalc = app.add_subcommand("eval", "exact measures of association from the model block");
  GraphArgs eval_graph;
  eval_graph.add(evalc);
  std::string eval_population = "eligible", eval_measure = "rd";
  std::vector<std::string> eval_stratify;
  evalc->add_option("--population", eval_population, "eligible | study")
      ->check(CLI::IsMember({"eligible", "study"}));
  evalc->add_option("--measure", eval_measure, "rd | rr | or")->check(CLI::IsMember({"rd", "rr", "or"}));
  evalc->add_option("--stratify", eval_stratify, "stratification variables");

  // decide
  auto* decidec = app.add_subcommand("decide", "decide whether a measure needs adjustment for a covariate");
  GraphArgs decide_graph;
  decide_graph.add(decidec);
  std::string decide_cov, decide_measure = "or", decide_no_em;
  bool decide_null = false, decide_off = false;
  decidec->add_option("--covariate", decide_cov, "covariate C")->required();
  decidec->add_option("--measure", decide_measure, "rd | rr | or")->check(CLI::IsMember({"rd", "rr", "or"}));
  auto* null_flag = decidec->add_flag("--null", decide_null, "assume no effect of treatment on outcome");
  decidec->add_flag("--off-null", decide_off, "allow an effect (default)")->excludes(null_flag);
  decidec->add_option("--no-em", decide_no_em, "scale with no effect modification by the covariate")
      ->check(CLI::IsMember({"rd", "rr", "or"}));

  // sweep
  auto* sweepc = app.add_subcommand("sweep", "marginal OR and RR of a randomized trial across P(C=1)");
  std::vector<double> sweep_untreated;
  std::string sweep_scale = "or", sweep_csv;
  double sweep_value = 2;
  std::size_t sweep_grid = kDefaultGrid;
  sweepc->add_option("--untreated", sweep_untreated, "untreated risks when C=0 and C=1")->expected(2)->required();
  sweepc->add_option("--scale", sweep_scale, "scale of the stratum effect: rd | rr | or")
      ->check(CLI::IsMember({"rd", "rr", "or"}));
  sweepc->add_option("--value", sweep_value, "stratum effect");
  sweepc->add_option("--grid", sweep_grid, "number of grid points on [0, 1]");
  sweepc->add_option("--csv", sweep_csv, "write CSV here instead of stdout");

  // labbe
  auto* labbec = app.add_subcommand("labbe", "L'Abbe lines of constant effect");
  std::string labbe_csv, labbe_scale;
  double labbe_value = 0;
  std::size_t labbe_res = kDefaultGrid;
  labbec->add_option("--csv", labbe_csv, "write CSV here instead of stdout");
  labbec->add_option("--scale", labbe_scale, "single curve on this scale")->check(CLI::IsMember({"rd", "rr", "or"}));
  auto* labbe_value_opt = labbec->add_option("--value", labbe_value, "effect value of the single curve");
  labbec->add_option("--resolution", labbe_res, "points per curve");

  // stats
  auto* statsc = app.add_subcommand("stats", "2x2 table statistics");
  std::string stats_table, stats_csv;
  double stats_rr0 = 0;
  bool stats_yates = false;
  auto* table_opt = statsc->add_option("--table", stats_table, "counts a,b,c,d");
  statsc->add_option("--csv", stats_csv, "CSV file with header a,b,c,d")->excludes(table_opt);
  auto* rr0_opt = statsc->add_option("--rr0", stats_rr0, "risk ratio under the null of the Wald test");
  statsc->add_flag("--yates", stats_yates, "continuity-corrected chi-square");

  // scenarios
  auto* scen = app.add_subcommand("scenarios", "built-in scenario registry");
  scen->require_subcommand(1);
  auto* scen_list = scen->add_subcommand("list", "list scenario ids");
  auto* scen_show = scen->add_subcommand("show", "print a scenario document and its expected verdicts");
  std::string show_id, show_variant = "base";
  scen_show->add_option("id", show_id)->required();
  scen_show->add_option("--variant", show_variant, "variant name");
  auto* scen_export = scen->add_subcommand("export", "write every scenario as a .dag file");
  std::string export_dir = "scenarios";
  scen_export->add_option("dir", export_dir, "output directory");

  // serve
  auto* serve = app.add_subcommand("serve", "run the JSON HTTP service");
  service::ServerOptions sopts;
  serve->add_option("--bind", sopts.bind, "bind address");
  serve->add_option("--port", sopts.port, "port");
  serve->add_option("--allow-origin", sopts.allow_origin, "origin allowed by CORS");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  const Output out(json_out);
  std::string current_file;
  try {
    if (*check) {
      current_file = check_graph.file;
      api::CheckRequest req;
      req.condition = check_condition;
      req.adjust = split_set(check_adjust);
      req.null = check_null;
      if (check_stage > 0) req.stage = check_stage;
      const auto r = api::check(check_graph.load().graph, req);
      if (out.json_mode()) out.result(r);
      else for (const auto& v : r["verdicts"]) print_verdict(out, v);
      if (!check_expect.empty())
        for (const auto& v : r["verdicts"])
          if (v["holds"].get<bool>() != (check_expect == "holds")) return kConditionFails;
      return kOk;
    }
    if (*adjust) {
      current_file = adjust_graph.file;
      Requirement req{adjust_exch, api::requirement_from_string(adjust_require)};
      const auto r = api::adjust(adjust_graph.load().graph, req, adjust_null);
      if (out.json_mode()) out.result(r);
      else for (const auto& s : r["sets"]) std::cout << set_text(s) << '\n';
      return r["sets"].empty() ? kConditionFails : kOk;
    }
    if (*swig) {
      current_file = swig_graph.file;
      const auto doc = swig_graph.load();
      Intervention iv;
      for (const auto& s : swig_set) {
        const auto eq = s.find('=');
        const auto node = s.substr(0, eq);
        iv.targets.push_back({node, eq == std::string::npos ? default_label(node) : s.substr(eq + 1)});
      }
      const auto sw = build_swig(doc.graph, iv);
      const auto dot = emit_dot(sw);
      if (!swig_dot.empty()) write_text(swig_dot, dot);
      if (out.json_mode()) {
        json nodes = json::array();
        for (const auto& n : sw.nodes())
          nodes.push_back({{"base", n.base}, {"kind", n.kind == SwigNodeKind::Fixed ? "fixed" : "random"},
                           {"display", n.display()}});
        json edges = json::array();
        for (const auto& e : sw.edges())
          edges.push_back({{"from", sw.nodes()[e.from].display()}, {"to", sw.nodes()[e.to].display()},
                           {"dashed", e.dashed}});
        out.result({{"nodes", nodes}, {"edges", edges}, {"dot", dot}});
      } else if (swig_dot.empty()) {
        std::cout << dot;
      }
      return kOk;
    }
    if (*evalc) {
      current_file = eval_graph.file;
      api::EvalRequest req{eval_population, scale_of(eval_measure), eval_stratify};
      const auto r = api::eval(eval_graph.load(), req);
      if (out.json_mode()) {
        out.result(r);
      } else {
        std::cout << eval_measure << " (" << eval_population << ") marginal " << num(r["marginal"]) << '\n';
        for (const auto& s : r["strata"]) {
          std::string label;
          for (const auto& [k, v] : s["stratum"].items()) label += (label.empty() ? "" : ", ") + k + "=" + std::to_string(v.get<int>());
          std::cout << "  stratum " << label << ": " << num(s["value"]) << " (weight " << num(s["weight"]) << ")\n";
        }
        if (!r["standardized"].is_null()) std::cout << "  standardized " << num(r["standardized"]) << '\n';
      }
      return kOk;
    }
    if (*decidec) {
      current_file = decide_graph.file;
      Hypothesis h = decide_null ? Hypothesis::null()
                                 : Hypothesis::off_null(decide_no_em.empty() ? std::nullopt
                                                                             : std::optional(scale_of(decide_no_em)));
      const auto r = api::decide(decide_graph.load().graph, decide_cov, scale_of(decide_measure), h);
      if (out.json_mode()) {
        out.result(r);
      } else {
        const auto& eq = r["equalities"];
        std::cout << decide_measure << " adjusted for " << decide_cov << ": "
                  << (r["needs_adjustment"].get<bool>() ? "adjustment needed" : "no adjustment needed") << '\n'
                  << "  eligible marginal = eligible conditional: " << out.verdict(eq[0].get<bool>()) << '\n'
                  << "  no selection bias given " << decide_cov << ": " << out.verdict(eq[1].get<bool>()) << '\n'
                  << "  study conditional = study marginal: " << out.verdict(eq[2].get<bool>()) << '\n'
                  << "  identified target: " << r["identified_target"].get<std::string>() << '\n';
      }
      return kOk;
    }
    if (*sweepc) {
      const auto r = api::sweep(sweep_untreated[0], sweep_untreated[1], scale_of(sweep_scale), sweep_value, sweep_grid);
      std::ostringstream csv;
      write_sweep_csv(csv, trial_sweep(sweep_untreated[0], sweep_untreated[1], scale_of(sweep_scale), sweep_value,
                                       sweep_grid));
      if (!sweep_csv.empty()) write_text(sweep_csv, csv.str());
      if (out.json_mode()) out.result(r);
      else if (sweep_csv.empty()) std::cout << csv.str();
      return kOk;
    }
    if (*labbec) {
      std::vector<LabbeCurve> curves;
      if (!labbe_scale.empty()) {
        const auto sc = scale_of(labbe_scale);
        const double v = *labbe_value_opt ? labbe_value : (sc == MeasureScale::RiskDifference ? 0.0 : 1.0);
        curves.push_back({labbe_scale + format_number(v), sc, v, labbe_curves(sc, v, labbe_res)});
      } else {
        curves = labbe_figure(labbe_res);
      }
      std::ostringstream csv;
      write_labbe_csv(csv, curves);
      if (!labbe_csv.empty()) write_text(labbe_csv, csv.str());
      if (out.json_mode()) {
        json arr = json::array();
        for (const auto& c : curves) arr.push_back(to_json(c));
        out.result({{"curves", arr}});
      } else if (labbe_csv.empty()) {
        std::cout << csv.str();
      }
      return kOk;
    }
    if (*statsc) {
      TwoByTwo t;
      if (!stats_csv.empty()) {
        current_file = stats_csv;
        std::istringstream in(read_text(stats_csv));
        t = read_counts_csv(in);
      } else if (!stats_table.empty()) {
        t = parse_counts(stats_table);
      } else {
        std::cerr << "stats needs --table or --csv\n";
        return kUsage;
      }
      const auto r = api::stats(t, *rr0_opt ? std::optional(stats_rr0) : std::nullopt, stats_yates);
      if (out.json_mode()) {
        out.result(r);
      } else {
        const auto& s = r["stats"];
        std::cout << "rd " << num(s["rd"]) << "\nrr " << num(s["rr"]) << "\nor " << num(s["or"]) << "\nchi2 "
                  << num(s["chi_square"]) << "\np " << num(s["chi_square_p"]) << '\n';
        if (r.contains("rr_test"))
          std::cout << "rr test z " << num(r["rr_test"]["z"]) << " p " << num(r["rr_test"]["p"]) << '\n';
      }
      return kOk;
    }
    if (*scen_list) {
      if (out.json_mode()) {
        json list = json::array();
        for (const auto& s : scenario_registry()) list.push_back(scenario_summary(s));
        out.result({{"scenarios", list}});
      } else {
        for (const auto& s : scenario_registry()) std::cout << s.id << "  " << s.title << '\n';
      }
      return kOk;
    }
    if (*scen_show) {
      const auto& s = get_scenario(show_id);
      if (out.json_mode()) {
        out.result(scenario_detail(s));
        return kOk;
      }
      std::cout << serialize(s.variant_document(show_variant));
      const auto& t = expected_verdicts(s.id, show_variant);
      for (const auto& c : t.conditions) {
        std::cout << "# expect " << to_string(c.condition);
        if (c.condition != Condition::Exchangeability) std::cout << " stage " << c.stage;
        std::cout << (c.include_earlier_stages ? " (with earlier stages)" : "") << " given {";
        std::string sep;
        for (const auto& n : c.adjust) std::cout << std::exchange(sep, ", ") << n;
        std::cout << "}: " << (c.holds ? "holds" : "fails") << '\n';
      }
      for (const auto& d : t.decisions)
        std::cout << "# expect " << to_string(d.measure) << (d.hypothesis.is_null() ? " null" : " off-null")
                  << " adjusting for " << d.covariate << ": "
                  << (d.needs_adjustment ? "adjustment needed" : "no adjustment needed") << '\n';
      return kOk;
    }
    if (*scen_export) {
      fs::create_directories(export_dir);
      json files = json::array();
      for (const auto& s : scenario_registry()) {
        const auto path = (fs::path(export_dir) / (s.id + ".dag")).string();
        write_text(path, serialize(s.document));
        files.push_back(path);
      }
      if (out.json_mode()) out.result({{"files", files}});
      else for (const auto& f : files) std::cout << f.get<std::string>() << '\n';
      return kOk;
    }
    if (*serve) return service::serve(sopts) ? kOk : kInput;
  } catch (const Error& e) {
    return out.error(e.code(), e.what(), e.span(), current_file);
  } catch (const std::exception& e) {
    return out.error("InternalError", e.what(), std::nullopt, current_file);
  }
  return kUsage;
}
