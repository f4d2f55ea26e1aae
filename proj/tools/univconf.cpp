#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "univconf/calibration.hpp"
#include "univconf/constructions.hpp"
#include "univconf/harness.hpp"
#include "univconf/operators.hpp"
#include "univconf/predictor_io.hpp"

using namespace univconf;

namespace {

using Params = std::map<std::string, std::string>;

// key = value lines, '#' comments.
Params read_params(const std::string& path) {
  Params p;
  if (path.empty()) return p;
  std::ifstream in(path);
  if (!in) throw Error("cannot open params file " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) throw Error(path + ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t\r"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    p[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return p;
}

void add_sets(Params& p, const std::vector<std::string>& sets) {
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Error("--set expects key=value, got '" + s + "'");
    p[s.substr(0, eq)] = s.substr(eq + 1);
  }
}

std::string get(const Params& p, const std::string& key, const std::string& fallback) {
  const auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}
double get_real(const Params& p, const std::string& key, double fallback) {
  const auto it = p.find(key);
  return it == p.end() ? fallback : std::stod(it->second);
}
std::size_t get_size(const Params& p, const std::string& key, std::size_t fallback) {
  const auto it = p.find(key);
  return it == p.end() ? fallback : std::stoul(it->second);
}

MarkovKernel kernel_for(const std::string& name, SpacePtr space) {
  if (name == "flip") return MarkovKernel::flip(space);
  if (name == "uniform_other") return MarkovKernel::uniform_other(space);
  if (name == "uniform_all") return MarkovKernel::uniform_all(space);
  throw DomainError("unknown kernel '" + name + "' (flip, uniform_other, uniform_all)");
}

// Writes `text` to `path`, or stdout when empty.
void emit_text(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

void emit_predictor(const Predictor& p, const std::string& path) {
  std::ostringstream os;
  write_predictor(os, tabulate(p));
  emit_text(os.str(), path);
}

SearchConfig search_from(const std::string& path) {
  ExperimentConfig cfg;
  for (const auto& [k, v] : read_params(path)) cfg.set(k, v);
  if (!cfg.params.empty()) throw DomainError("unknown search key '" + cfg.params.begin()->first + "'");
  return cfg.search;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');)
    if (!item.empty()) out.push_back(std::stod(item));
  return out;
}

int run_certify(const std::string& cls, const std::string& file, const std::string& search_file,
                const std::string& alphas_text, std::optional<std::uint64_t> seed, const std::string& out) {
  const Predictor p = load_predictor(file);
  SearchConfig search = search_from(search_file);
  if (seed) search.seed = *seed;
  const std::vector<double> alphas = parse_list(alphas_text);
  Certificate c;
  switch (parse_target_class(cls)) {
    case TargetClass::exch_e: c = certify_exchangeability_e(p, search.evaluation_cap); break;
    case TargetClass::rand_e: c = certify_randomness_e(p, search); break;
    case TargetClass::invariant_rand_e: c = certify_invariant_randomness_e(p, search); break;
    case TargetClass::exch_p: c = certify_exchangeability_p(p, alphas, search.evaluation_cap); break;
    case TargetClass::rand_p: c = certify_randomness_p(p, alphas, search); break;
    case TargetClass::test_cond_exch_e: c = certify_test_conditional(p, search.evaluation_cap); break;
  }
  emit_text(certificate_json(c) + "\n", out);
  return c.passed() ? 0 : 1;
}

int run_construct(const std::string& name, Params params, const std::string& out) {
  const std::size_t n = get_size(params, "n", 4);
  const double delta = get_real(params, "delta", 0.5);
  auto input = [&]() -> Predictor {
    const std::string path = get(params, "input", "");
    if (path.empty()) throw DomainError("construct " + name + " needs input = <predictor file>");
    return load_predictor(path);
  };
  auto kernel = [&](const Predictor& p) { return kernel_for(get(params, "kernel", "flip"), p.space_ptr()); };
  if (name == "thm1G") {
    const Predictor e = input();
    emit_predictor(theorem1_G(e, kernel(e), get_real(params, "scale", 1.0 / kE)), out);
  } else if (name == "thm2") {
    const Theorem2Report r = theorem2_counterexample(n, get_real(params, "c", 0.4));
    nlohmann::json j = {{"n", r.n},
                        {"c", format_number(r.c)},
                        {"value_at_zero", format_number(r.value_at_zero)},
                        {"closed_form", format_number(r.closed_form)},
                        {"certificate", nlohmann::json::parse(certificate_json(r.certificate))}};
    emit_text(j.dump(2) + "\n", out);
    return r.certificate.passed() == (r.closed_form <= 1.0) ? 0 : 1;
  } else if (name == "cor1" || name == "cor3") {
    const Predictor p = input();
    const PPair pair = name == "cor1" ? corollary1_G(p, kernel(p), delta) : corollary3_G(p, kernel(p), delta);
    const std::string which = get(params, "output", "g");
    emit_predictor(which == "p_prime" ? pair.p_prime : pair.g, out);
  } else if (name == "multiclass") {
    const Predictor e = input();
    emit_predictor(multiclass_G(e, parse_multiclass_variant(get(params, "variant", "exclude_true"))), out);
  } else if (name == "thm3E") {
    emit_predictor(theorem3_E(n, int(get_size(params, "k", 2)), get_real(params, "a", 0.99)), out);
  } else if (name == "thm4E") {
    emit_predictor(theorem4_E(n, get_size(params, "m", 2), get_real(params, "c", 0.9)), out);
  } else if (name == "thm5G") {
    const Predictor e = input();
    emit_predictor(theorem5_G(e, kernel(e)), out);
  } else if (name == "cor2G") {
    const Predictor e = input();
    emit_predictor(corollary2_G(e, kernel(e)), out);
  } else if (name == "cor3G") {
    const Predictor p = input();
    emit_predictor(corollary3_G(p, kernel(p), delta).g, out);
  } else if (name == "conformalp") {
    const Predictor p = input();
    emit_predictor(conformal_p_from_scores(p.space_ptr(), p.n(), remark1_scorer(p), p.label_only()), out);
  } else if (name == "eq13") {
    emit_predictor(eq13_predictor(n), out);
  } else if (name == "laplace") {
    emit_predictor(laplace_predictor(n), out);
  } else {
    throw DomainError("unknown construction '" + name + "'");
  }
  return 0;
}

int run_calibrate(const std::string& kind, double delta, const std::string& density, const std::string& file,
                  const std::string& out) {
  Calibrator c = kind == "power"     ? Calibrator::power(delta)
                 : kind == "density" ? Calibrator::density(read_density_file(density))
                 : kind == "e-to-p"  ? Calibrator::e_to_p()
                                     : throw DomainError("unknown calibrator '" + kind + "'");
  if (file.empty()) {
    nlohmann::json j = {{"calibrator", kind}};
    if (c.source() == Flavor::p) j["integral"] = format_number(c.integral());
    emit_text(j.dump(2) + "\n", out);
    return 0;
  }
  emit_predictor(calibrate_predictor(c, load_predictor(file)), out);
  return 0;
}

int finish_reports(const std::vector<Report>& reports, ReportFormat format, bool stdout_report) {
  bool ok = true;
  for (const auto& r : reports) {
    if (stdout_report) emit_report(r, format, std::cout);
    std::cerr << (r.passed() ? "PASS " : "FAIL ") << r.label;
    if (r.error) std::cerr << " (" << *r.error << ")";
    std::cerr << '\n';
    ok = ok && r.passed();
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal and randomness e/p-predictors over finite example spaces"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;
  std::string out, format = "json";
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--out", out, "Output directory (experiment, suite) or file (other commands)");
  app.add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}));

  auto* certify = app.add_subcommand("certify", "Certify a predictor file against a class");
  std::string cls, predictor_file, search_file, alphas;
  certify->add_option("--class", cls, "exch-e, rand-e, invariant-rand-e, exch-p, rand-p, test-cond")->required();
  certify->add_option("--predictor", predictor_file, "Predictor file")->required()->check(CLI::ExistingFile);
  certify->add_option("--search", search_file, "Search config (key = value)")->check(CLI::ExistingFile);
  certify->add_option("--alphas", alphas, "Extra alpha levels, comma separated");

  auto* construct = app.add_subcommand("construct", "Build a named construction");
  std::string cname, params_file;
  std::vector<std::string> sets;
  construct
      ->add_option("--name", cname,
                   "thm1G, thm2, cor1, multiclass, thm3E, thm4E, thm5G, cor2G, cor3G, conformalp, eq13, laplace")
      ->required();
  construct->add_option("--params", params_file, "Parameters (key = value)")->check(CLI::ExistingFile);
  construct->add_option("--set", sets, "Parameter override key=value");

  auto* calibrate = app.add_subcommand("calibrate", "Apply a calibrator to a predictor file");
  std::string kind = "power", density_file, cal_file;
  double delta = 0.5;
  calibrate->add_option("--calibrator", kind, "power, density, e-to-p")
      ->check(CLI::IsMember({"power", "density", "e-to-p"}));
  calibrate->add_option("--delta", delta, "Power calibrator exponent");
  calibrate->add_option("--density", density_file, "Density heights file")->check(CLI::ExistingFile);
  calibrate->add_option("--predictor", cal_file, "Predictor file; omitted: report the integral")
      ->check(CLI::ExistingFile);

  auto* op = app.add_subcommand("operator", "Apply averaging operators to a predictor file");
  std::string chain, op_file;
  op->add_option("--chain", chain, "Comma-separated chain of i, x, t, tx")->required();
  op->add_option("--predictor", op_file, "Predictor file")->required()->check(CLI::ExistingFile);

  auto* experiment = app.add_subcommand("experiment", "Run one scenario");
  std::string scenario;
  std::vector<std::string> exp_sets;
  experiment->add_option("scenario", scenario, "Scenario name")->required();
  experiment->add_option("--set", exp_sets, "Config override key=value");

  auto* suite = app.add_subcommand("suite", "Run every section of a config file");
  std::string suite_file;
  bool parallel = false;
  suite->add_option("config", suite_file, "Config file")->required()->check(CLI::ExistingFile);
  suite->add_flag("--parallel", parallel, "Run scenarios concurrently");

  app.add_subcommand("list", "List scenarios");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*certify) return run_certify(cls, predictor_file, search_file, alphas, seed, out);
    if (*construct) {
      Params p = read_params(params_file);
      add_sets(p, sets);
      return run_construct(cname, p, out);
    }
    if (*calibrate) return run_calibrate(kind, delta, density_file, cal_file, out);
    if (*op) {
      emit_predictor(apply_operators(load_predictor(op_file), chain), out);
      return 0;
    }
    const ReportFormat fmt = parse_report_format(format);
    if (*experiment) {
      ExperimentConfig cfg;
      cfg.scenario = scenario;
      cfg.seed = seed;
      Params p;
      add_sets(p, exp_sets);
      for (const auto& [k, v] : p) cfg.set(k, v);
      if (!out.empty()) {
        cfg.out_dir = out;
        cfg.formats = {fmt};
      }
      return finish_reports({run_scenario(cfg)}, fmt, out.empty());
    }
    if (*suite) {
      SuiteConfig s = load_suite(suite_file);
      s.parallel = s.parallel || parallel;
      for (auto& cfg : s.runs) {
        if (seed) cfg.seed = seed;
        if (!out.empty()) cfg.out_dir = out;
      }
      const std::vector<Report> reports = run_suite(s);
      if (!out.empty()) emit_text(suite_summary_json(reports) + "\n", out + "/summary.json");
      return finish_reports(reports, fmt, out.empty());
    }
    for (const auto& info : scenario_catalog())
      std::cout << info.name << (info.stochastic ? " (seeded)" : "") << "  " << info.summary << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
