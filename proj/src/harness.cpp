#include "univconf/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "univconf/calibration.hpp"
#include "univconf/generators.hpp"
#include "univconf/operators.hpp"
#include "univconf/orbit.hpp"
#include "univconf/parallel.hpp"

namespace univconf {

using nlohmann::json;

std::string to_string(ReportFormat f) { return f == ReportFormat::json ? "json" : "csv"; }

ReportFormat parse_report_format(const std::string& s) {
  if (s == "json") return ReportFormat::json;
  if (s == "csv") return ReportFormat::csv;
  throw DomainError("unknown report format '" + s + "' (json, csv)");
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw DomainError("key '" + key + "' expects a number, got '" + v + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const auto x = std::stoull(v, &used);
    if (used != v.size() || v.front() == '-') throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw DomainError("key '" + key + "' expects a nonnegative integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw DomainError("key '" + key + "' expects a boolean, got '" + v + "'");
}

// Json number with 12 significant digits; strings for non-finite values.
json num(double v) {
  if (!std::isfinite(v)) return format_number(v);
  return std::strtod(format_number(v).c_str(), nullptr);
}

json certificate_to_json(const Certificate& c) {
  json j;
  j["target"] = to_string(c.target);
  j["verdict"] = to_string(c.verdict);
  j["worst_value"] = num(c.worst_value);
  j["margin"] = num(c.margin);
  j["method"] = to_string(c.method);
  j["resolution"] = c.resolution ? num(*c.resolution) : json(nullptr);
  j["tolerance"] = num(c.tolerance);
  j["seed"] = c.seed;
  j["evaluations"] = c.evaluations;
  j["note"] = c.note;
  if (c.witness) {
    json w = json::object();
    if (c.witness->sequence) {
      json seq = json::array();
      for (const auto& z : *c.witness->sequence) seq.push_back({z.object, z.label});
      w["sequence"] = seq;
    }
    if (c.witness->distribution) {
      json d = json::array();
      for (double q : *c.witness->distribution) d.push_back(num(q));
      w["distribution"] = d;
    }
    if (c.witness->alpha) w["alpha"] = num(*c.witness->alpha);
    j["witness"] = w;
  } else {
    j["witness"] = nullptr;
  }
  return j;
}

json report_to_json(const Report& r, bool timing) {
  json j;
  j["scenario"] = r.scenario;
  j["label"] = r.label;
  j["seed"] = r.seed ? json(*r.seed) : json(nullptr);
  j["inputs"] = r.inputs;
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"name", row.name},
                    {"expected", num(row.expected)},
                    {"observed", num(row.observed)},
                    {"tolerance", num(row.tolerance)},
                    {"relation", row.relation},
                    {"pass", row.pass},
                    {"note", row.note}});
  }
  j["checks"] = rows;
  json certs = json::array();
  for (const auto& [name, c] : r.certificates) certs.push_back({{"name", name}, {"certificate", certificate_to_json(c)}});
  j["certificates"] = certs;
  j["methods"] = r.methods;
  j["error"] = r.error ? json(*r.error) : json(nullptr);
  j["passed"] = r.passed();
  if (timing) j["wall_seconds"] = num(r.wall_seconds);
  return j;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + '"';
}

// ---------------------------------------------------------------------------
// Scenario plumbing

class Context {
 public:
  Context(const ExperimentConfig& cfg, Report& report) : cfg_(cfg), report_(report) {}

  const ExperimentConfig& cfg() const { return cfg_; }
  const ExperimentConstants& k() const { return cfg_.constants; }
  const SearchConfig& search() const { return cfg_.search; }
  Report& report() { return report_; }

  std::uint64_t seed() {
    if (!cfg_.seed) throw DomainError("scenario '" + cfg_.scenario + "' is stochastic and needs a seed");
    return *cfg_.seed;
  }

  std::size_t size(const std::string& key, std::size_t fallback) {
    const auto it = cfg_.params.find(key);
    const std::size_t v = it == cfg_.params.end() ? fallback : std::size_t(to_u64(key, it->second));
    report_.inputs[key] = std::to_string(v);
    return v;
  }
  double real(const std::string& key, double fallback) {
    const auto it = cfg_.params.find(key);
    const double v = it == cfg_.params.end() ? fallback : to_double(key, it->second);
    report_.inputs[key] = format_number(v);
    return v;
  }
  bool flag(const std::string& key, bool fallback) {
    const auto it = cfg_.params.find(key);
    const bool v = it == cfg_.params.end() ? fallback : to_bool(key, it->second);
    report_.inputs[key] = v ? "true" : "false";
    return v;
  }
  std::vector<double> reals(const std::string& key, std::vector<double> fallback) {
    const auto it = cfg_.params.find(key);
    if (it != cfg_.params.end()) {
      fallback.clear();
      for (const auto& s : split_list(it->second)) fallback.push_back(to_double(key, s));
    }
    std::string echo;
    for (double v : fallback) echo += (echo.empty() ? "" : ",") + format_number(v);
    report_.inputs[key] = echo;
    return fallback;
  }
  std::vector<std::size_t> sizes(const std::string& key, std::vector<std::size_t> fallback) {
    const auto it = cfg_.params.find(key);
    if (it != cfg_.params.end()) {
      fallback.clear();
      for (const auto& s : split_list(it->second)) fallback.push_back(std::size_t(to_u64(key, s)));
    }
    std::string echo;
    for (auto v : fallback) echo += (echo.empty() ? "" : ",") + std::to_string(v);
    report_.inputs[key] = echo;
    return fallback;
  }

  void close(const std::string& name, double expected, double observed, double tol,
             std::string note = {}) {
    const bool pass = (std::isinf(expected) && expected == observed) ||
                      std::abs(observed - expected) <= tol;
    add({name, expected, observed, tol, "abs", pass, std::move(note)});
  }
  void at_most(const std::string& name, double bound, double observed, double tol,
               std::string note = {}) {
    add({name, bound, observed, tol, "le", observed <= bound + tol, std::move(note)});
  }
  void at_least(const std::string& name, double bound, double observed, double tol,
                std::string note = {}) {
    add({name, bound, observed, tol, "ge", observed >= bound - tol, std::move(note)});
  }
  void holds(const std::string& name, bool ok, std::string note = {}) {
    add({name, 1.0, ok ? 1.0 : 0.0, 0.0, "true", ok, std::move(note)});
  }
  void record(const std::string& name, double observed, std::string note = {}) {
    add({name, observed, observed, 0.0, "report", true, std::move(note)});
  }
  void verdict(const std::string& name, const Certificate& c, bool expect_pass) {
    const bool ok = c.passed() == expect_pass;
    add({name + " verdict", expect_pass ? 1.0 : 0.0, c.passed() ? 1.0 : 0.0, 0.0, "true", ok,
         to_string(c.target) + " " + to_string(c.verdict) + " via " + to_string(c.method)});
    report_.certificates.emplace_back(name, c);
    method(name + ": " + to_string(c.method) + " -> " + to_string(c.verdict));
  }
  void method(std::string line) { report_.methods.push_back(std::move(line)); }

 private:
  void add(CheckRow row) { report_.rows.push_back(std::move(row)); }

  const ExperimentConfig& cfg_;
  Report& report_;
};

// Largest |a - b| / max(1, |a|) over Z^{n+1}; matching infinities count as equal.
double max_relative_gap(const Predictor& a, const Predictor& b) {
  double worst = 0.0;
  for_each_sequence(a.space(), a.arity(), [&](SequenceView s) {
    const double x = a.eval(s), y = b.eval(s);
    if (x == y) return;
    if (std::isinf(x) || std::isinf(y)) {
      worst = kInf;
      return;
    }
    worst = std::max(worst, std::abs(x - y) / std::max(1.0, std::abs(x)));
  });
  return worst;
}

std::string tag(const std::string& what, std::size_t i) { return what + "[" + std::to_string(i) + "]"; }

// Randomness p-predictor: min(1/E, 1) of a normalized train-invariant table.
Predictor random_randomness_p(SpacePtr space, std::size_t n, CounterRng& rng, const SearchConfig& cfg) {
  const Predictor e = random_train_invariant_table(space, n, Flavor::e, rng);
  return tabulate(calibrate_predictor(Calibrator::e_to_p(), normalize_randomness(e, cfg)));
}

// Exchangeability p-predictor: min(1/E^X, 1) of a train-invariant table.
Predictor random_exchangeability_p(SpacePtr space, std::size_t n, CounterRng& rng) {
  const Predictor e = random_train_invariant_table(space, n, Flavor::e, rng);
  return tabulate(calibrate_predictor(Calibrator::e_to_p(), relative_deviation(e).predictor));
}

// ---------------------------------------------------------------------------
// Scenarios

void scenario_eq13(Context& ctx) {
  const std::size_t lo = ctx.size("n_min", 2), hi = ctx.size("n_max", 20);
  const std::size_t orbit_max = ctx.size("orbit_n_max", 8);
  for (std::size_t n = lo; n <= hi; ++n) {
    const std::string id = "n=" + std::to_string(n);
    const Predictor e = eq13_predictor(n);
    const Certificate c = certify_randomness_e(e, ctx.search());
    ctx.verdict("eq13 " + id + " rand-e", c, true);
    ctx.close("eq13 " + id + " worst expectation", 1.0, c.worst_value, 1e-9);
    const double theta = c.witness && c.witness->distribution ? (*c.witness->distribution)[1] : -1.0;
    ctx.close("eq13 " + id + " maximizer theta", 1.0 / double(n + 1), theta, 1e-6);
    if (n > orbit_max) continue;
    const OperatorResult ex = relative_deviation(e, OperatorOptions{.allow_fast_path = false});
    const Predictor ei = avg_all(e, OperatorOptions{.allow_fast_path = false}).predictor;
    std::size_t support_mismatch = 0, convention_mismatch = 0;
    for_each_sequence(e.space(), e.arity(), [&](SequenceView s) {
      std::size_t ones = 0;
      for (const auto& z : s) ones += z.label;
      const double v = ex.predictor.eval(s);
      if (ei.eval(s) > 0.0) support_mismatch += v != (ones == 1 ? 1.0 : 0.0);
      else convention_mismatch += v != 1.0;
    });
    ctx.method("eq13 " + id + " E^X by " + to_string(ex.method));
    ctx.close("eq13 " + id + " E^X = indicator(k=1) where E^i > 0", 0.0, double(support_mismatch), 0.0,
              "mismatching sequences");
    ctx.close("eq13 " + id + " E^X = 1 where E^i = 0", 0.0, double(convention_mismatch), 0.0,
              "0/0 := 1 convention of the relative deviation");
  }
}

void scenario_thm2(Context& ctx) {
  const std::size_t n = ctx.size("n", 9);
  const double c = ctx.real("c", 0.4);
  const std::vector<std::size_t> ns = ctx.sizes("pass_ns", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  const Theorem2Report r = theorem2_counterexample(n, c, ctx.search());
  const double closed = c * std::pow(1.0 + 1.0 / double(n), double(n));
  ctx.close("G(0,...,0)", closed, r.value_at_zero, 1e-12, "c (1+1/n)^n");
  ctx.verdict("G at c=" + format_number(c), r.certificate, closed <= 1.0);
  ctx.at_least("worst expectation", closed, r.certificate.worst_value, 1e-9, "point mass on label 0");
  double mass = 0.0;
  if (r.certificate.witness && r.certificate.witness->distribution)
    for (double q : *r.certificate.witness->distribution) mass = std::max(mass, q);
  ctx.close("witness is a point mass", 1.0, mass, 1e-6, "largest coordinate of the witness Q");
  for (std::size_t m : ns) {
    const Theorem2Report ok = theorem2_counterexample(m, 1.0 / kE, ctx.search());
    ctx.verdict("G at c=1/e n=" + std::to_string(m), ok.certificate, true);
    ctx.at_most("G(0,...,0) at c=1/e n=" + std::to_string(m), 1.0, ok.value_at_zero, 0.0);
  }
}

void scenario_laplace(Context& ctx) {
  const std::vector<std::size_t> ns = ctx.sizes("ns", {10, 100, 1000});
  double previous = 0.0;
  bool monotone = true;
  for (std::size_t n : ns) {
    const Predictor e = laplace_predictor(n);
    const OperatorResult ex = relative_deviation(e);
    std::vector<std::uint32_t> labels(n + 1, 0);
    labels.back() = 1;
    const Sequence seq = label_sequence(labels);
    const double ratio = e(seq) / ex.predictor(seq);
    const double closed = std::pow(1.0 + 1.0 / double(n), double(n));
    const std::string id = "n=" + std::to_string(n);
    ctx.method("laplace " + id + " E^X by " + to_string(ex.method));
    ctx.close("E/E^X at (0,...,0,1) " + id, closed, ratio, 1e-9, "(1+1/n)^n");
    ctx.close("E^X at (0,...,0,1) " + id, double(n + 1), ex.predictor(seq), 1e-9 * double(n + 1));
    ctx.at_most("E/E^X below e " + id, kE, ratio, 0.0);
    ctx.record("e - E/E^X " + id, kE - ratio);
    monotone = monotone && ratio > previous;
    previous = ratio;
  }
  ctx.holds("E/E^X increasing in n", monotone);
}

void scenario_thm1(Context& ctx) {
  const std::uint64_t seed = ctx.seed();
  const std::size_t count = ctx.size("predictors", 20), n = ctx.size("n", 6);
  const std::size_t trials = ctx.size("trials", 100000);
  const std::vector<double> thetas = ctx.reals("thetas", {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9});
  const std::size_t scalar_max = ctx.size("scalar_n_max", 50);
  const double eps = ctx.k().epsilon;
  const SpacePtr space = binary_space();
  const MarkovKernel flip = MarkovKernel::flip(space);
  for (std::size_t p = 0; p < count; ++p) {
    CounterRng rng(seed, 0x7431, p);
    double worst = 0.0;
    const Predictor e = tabulate(normalize_randomness(
        random_train_invariant_table(space, n, Flavor::e, rng), ctx.search(), &worst));
    const Certificate ce = certify_randomness_e(e, ctx.search());
    ctx.verdict(tag("E", p) + " rand-e", ce, true);
    const Predictor g = tabulate(theorem1_G(e, flip));
    double worst_excess = -kInf, markov_excess = -kInf;
    for (std::size_t t = 0; t < thetas.size(); ++t) {
      const ProductModel model = ProductModel::bernoulli(space, thetas[t], n + 1);
      const std::vector<double> draws = mc_samples(g, model, trials, derive_seed(seed, p, t), ctx.cfg().threads);
      const double mean = compensated_sum(draws) / double(trials);
      double var = 0.0;
      for (double x : draws) var += (x - mean) * (x - mean);
      const double se = std::sqrt(var / double(trials - 1) / double(trials));
      ctx.at_most(tag("G", p) + " mean at theta=" + format_number(thetas[t]), 1.0, mean, 3.0 * se,
                  "tolerance is 3 SE");
      worst_excess = std::max(worst_excess, mean - 1.0);
      const MarkovReport mk = markov_guarantee(draws, eps);
      markov_excess = std::max(markov_excess, mk.frequency - mk.epsilon - 3.0 * mk.standard_error);
    }
    ctx.at_most(tag("G", p) + " Markov frequency of G >= 1/epsilon minus bound", 0.0, markov_excess, 0.0,
                "worst theta; bound epsilon + 3 SE");
    const ProofParts parts = theorem1_proof_parts(e, flip, {}, std::uint64_t{1} << 13, 20000, derive_seed(seed, 0x6732, p));
    const Predictor ei = avg_all(e).predictor;
    double ratio_min = kInf, chain_gap = kInf;
    for_each_sequence(e.space(), e.arity(), [&](SequenceView s) {
      const double g1 = parts.g1.eval(s), g2 = parts.g2.eval(s);
      if (g1 > 0.0) ratio_min = std::min(ratio_min, g2 / g1);
      Sequence flipped(s.begin(), s.end());
      double integral = 0.0;
      for (std::uint32_t y = 0; y < 2; ++y) {
        flipped.back().label = y;
        integral += flip(y, s.back()) * ei.eval(flipped);
      }
      chain_gap = std::min(chain_gap, g2 * parts.g3.eval(s) - integral / kE);
    });
    ctx.at_least(tag("G2/G1", p) + " pointwise minimum", 1.0 / kE, ratio_min, 0.0,
                 parts.g2_exact ? "exact 2^(n+1) enumeration" : "Monte Carlo G2");
    ctx.at_least(tag("G2 G3 - int E^i B / e", p) + " pointwise minimum", 0.0, chain_gap, 1e-12);
  }
  double scalar_min = kInf;
  for (std::size_t m = 1; m <= scalar_max; ++m) scalar_min = std::min(scalar_min, exactly_one_resample_probability(m));
  ctx.at_least("min over n of (n/(n+1))^n", 1.0 / kE, scalar_min, 0.0);
}

void scenario_operators(Context& ctx) {
  const std::uint64_t seed = ctx.seed();
  const std::size_t count = ctx.size("tables", 100), n = ctx.size("n", 4);
  const std::size_t labels = ctx.size("labels", 3);
  const SpacePtr space = ExampleSpace::numbered_labels(labels);
  const OperatorOptions full{.allow_fast_path = false};
  double idem_i = 0, idem_x = 0, idem_t = 0, idem_tx = 0, xi_one = 0, it_fix = 0, fast = 0;
  bool fast_used = true;
  for (std::size_t p = 0; p < count; ++p) {
    CounterRng rng(seed, 0x6f70, p);
    const Predictor e = random_table(space, n, Flavor::e, rng);
    const Predictor ei = tabulate(avg_all(e).predictor);
    const Predictor ex = tabulate(relative_deviation(e).predictor);
    const Predictor et = tabulate(avg_train(e).predictor);
    const Predictor etx = tabulate(conformalize(e).predictor);
    const Predictor tx = tabulate(relative_deviation(et).predictor);
    const Predictor xt = tabulate(avg_train(ex).predictor);
    ctx.close(tag("(E^t)^X = (E^X)^t", p), 0.0, max_relative_gap(tx, xt), 1e-12);
    idem_i = std::max(idem_i, max_relative_gap(tabulate(avg_all(ei).predictor), ei));
    idem_x = std::max(idem_x, max_relative_gap(tabulate(relative_deviation(ex).predictor), ex));
    idem_t = std::max(idem_t, max_relative_gap(tabulate(avg_train(et).predictor), et));
    idem_tx = std::max(idem_tx, max_relative_gap(tabulate(conformalize(etx).predictor), etx));
    xi_one = std::max(xi_one, max_relative_gap(tabulate(avg_all(ex).predictor), constant_predictor(space, n, Flavor::e, 1.0)));
    it_fix = std::max(it_fix, max_relative_gap(tabulate(avg_train(ei).predictor), ei));
    for (const Predictor* in : {&et, &etx}) {
      const OperatorResult xa = relative_deviation(*in), xb = relative_deviation(*in, full);
      const OperatorResult ia = avg_all(*in), ib = avg_all(*in, full);
      fast_used = fast_used && xa.method == OperatorMethod::cyclic_fast_path &&
                  ia.method == OperatorMethod::cyclic_fast_path &&
                  xb.method == OperatorMethod::exact_enumeration;
      fast = std::max({fast, max_relative_gap(tabulate(xa.predictor), tabulate(xb.predictor)),
                       max_relative_gap(tabulate(ia.predictor), tabulate(ib.predictor))});
    }
  }
  ctx.close("(E^i)^i = E^i", 0.0, idem_i, 1e-12, "max over tables");
  ctx.close("(E^X)^X = E^X", 0.0, idem_x, 1e-12, "max over tables");
  ctx.close("(E^t)^t = E^t", 0.0, idem_t, 1e-12, "max over tables");
  ctx.close("(E^tX)^tX = E^tX", 0.0, idem_tx, 1e-12, "max over tables");
  ctx.close("(E^X)^i = 1", 0.0, xi_one, 1e-12, "max over tables");
  ctx.close("(E^i)^t = E^i", 0.0, it_fix, 1e-12, "max over tables");
  ctx.close("cyclic fast path = full enumeration", 0.0, fast, 1e-12, "E^X and E^i of E^t and E^tX");
  ctx.holds("fast path selected for train-invariant input", fast_used);
  ctx.method("operators: exact enumeration and cyclic fast path compared");
}

void scenario_calibration(Context& ctx) {
  const std::uint64_t seed = ctx.seed();
  const std::vector<double> deltas = ctx.reals("deltas", {0.25, 0.5, 0.75});
  const std::size_t count = ctx.size("predictors", 10), n = ctx.size("n", 5);
  const double delta = ctx.k().delta;
  for (double d : deltas)
    ctx.close("integral of delta p^(delta-1) at delta=" + format_number(d), 1.0, Calibrator::power(d).integral(), 1e-6);
  const SpacePtr space = binary_space();
  const MarkovKernel flip = MarkovKernel::flip(space);
  for (std::size_t i = 0; i < count; ++i) {
    CounterRng rng(seed, 0x6331, i);
    const Predictor p = random_randomness_p(space, n, rng, ctx.search());
    const PPair pair = corollary1_G(p, flip, delta);
    const Predictor g = tabulate(pair.g);
    const Predictor pp = tabulate(pair.p_prime);
    const Certificate cg = certify_randomness_e(g, ctx.search());
    ctx.verdict(tag("corollary 1 G", i) + " rand-e", cg, true);
    ctx.verdict(tag("corollary 1 P'", i) + " exch-p", certify_exchangeability_p(pp), true);
    ctx.holds(tag("corollary 1 P'", i) + " train-invariant", check_structure(pp).train_invariant);
  }
}

void scenario_thm4(Context& ctx) {
  const std::uint64_t seed = ctx.seed();
  const std::size_t n = ctx.size("n", 2000), m = ctx.size("m", 5);
  const std::size_t trials = ctx.size("trials", 10000);
  const double threshold = ctx.real("e_threshold", 0.99);
  const bool certify_base = ctx.flag("certify_e_prime_base", true);
  const double c = ctx.k().c;
  const Certificate mod = certify_randomness_e_modular({n, m, c}, ctx.search());
  ctx.verdict("modular-sum E rand-e", mod, true);
  ctx.at_most("c m max_Q min(P(S=0 mod m), P(balance))", 1.0, mod.worst_value, 1e-6);
  const SpacePtr space = ExampleSpace::numbered_labels(m);
  const Predictor g = constant_predictor(space, n, Flavor::e, 1.0);
  const Predictor ep = rare_label_EX(n, m);
  if (certify_base) ctx.verdict("rare-label E rand-e", certify_randomness_e(rare_label_E(n, m), ctx.search()), true);
  const Theorem4Events ev = theorem4_events(n, m, c, trials, seed, &g, &ep, ctx.cfg().threads);
  ctx.close("sum = 0 mod m frequency", 1.0, ev.sum_zero_frequency, 0.0, "holds by construction");
  ctx.at_least("frequency of E(Y_1..Y_n,Y) >= c m", threshold, ev.e_frequency, 0.0,
               "finite-n threshold; asymptotic claim 0.999; SE " + format_number(ev.e_standard_error));
  ctx.at_least("frequency of G <= 2", 0.5, *ev.g_frequency, 3.0 * *ev.g_standard_error,
               "G = 1; Markov bound 1/2, tolerance 3 SE");
  ctx.at_least("frequency of E' <= 2.01", 1.0 - 1.0 / 2.01, *ev.eprime_frequency, 3.0 * *ev.eprime_standard_error,
               "E' = E^X of the rare-label E; Markov bound 1 - 1/2.01, tolerance 3 SE");
}

void scenario_thm3(Context& ctx) {
  const std::size_t n = ctx.size("n", 64);
  const int k = ctx.k().k;
  const double a = ctx.k().a, b = ctx.k().b;
  const double c3 = ctx.real("thm3_c", 2.0);
  ctx.report().inputs["k"] = std::to_string(k);
  ctx.report().inputs["a"] = format_number(a);
  ctx.report().inputs["b"] = format_number(b);
  const Predictor e = theorem3_E(n, k, a);
  const SimplexMaximum profile = theorem3_profile_maximum(n, k, a, ctx.search());
  ctx.method("theta profile: " + to_string(profile.method));
  ctx.at_most("theta-profile worst expectation", 1.0, profile.value, 1e-9);
  const Certificate cert = certify_randomness_e(e, ctx.search());
  ctx.verdict("theorem 3 E rand-e", cert, true);
  ctx.at_most("simplex search worst expectation", 1.0, cert.worst_value, 1e-6);
  ctx.at_most("simplex search does not exceed the profile optimum", profile.value, cert.worst_value, 1e-6);
  ctx.holds("E train-invariant and label-only", [&] {
    const StructureCheck s = check_structure(e);
    return s.train_invariant && s.label_only;
  }());
  const Theorem3Chain chain = theorem3_chain(n, k, a, b, c3);
  ctx.record("chain: E value", chain.value);
  ctx.record("chain: ratio bound", chain.ratio_bound);
  ctx.record("chain: target c/(e|Y|)", chain.target);
  ctx.record("chain: holds", chain.holds ? 1.0 : 0.0, "recorded, not asserted");
  ctx.record("chain: smallest c for which it holds", chain.c_threshold);
  ctx.record("chain: exact P(|sum - n/2| <= k)", chain.condition_probability);
  ctx.record("chain: exact ratio bound", chain.exact_ratio_bound);
  ctx.record("chain: exact holds", chain.exact_holds ? 1.0 : 0.0, "recorded, not asserted");
}

void scenario_appendix_b(Context& ctx) {
  const std::uint64_t seed = ctx.seed();
  const std::size_t t5 = ctx.size("thm5_tables", 50), nmax = ctx.size("n_max", 5);
  const std::size_t c2 = ctx.size("cor2_tables", 10), c3 = ctx.size("cor3_tables", 10);
  const std::size_t c2n = ctx.size("cor2_n", 3), c3n = ctx.size("cor3_n", 4);
  const double delta = ctx.k().delta;
  const SpacePtr space = binary_space();
  const MarkovKernel flip = MarkovKernel::flip(space);
  for (std::size_t i = 0; i < t5; ++i) {
    CounterRng rng(seed, 0x7435, i);
    const std::size_t n = 1 + i % nmax;
    const Predictor e = random_table(space, n, Flavor::e, rng);
    const Certificate c = certify_test_conditional(tabulate(theorem5_G(e, flip)));
    ctx.verdict(tag("theorem 5 G", i) + " n=" + std::to_string(n) + " test-cond", c, true);
    ctx.holds(tag("theorem 5 G", i) + " exact", c.verdict == Verdict::pass_exact);
  }
  double const_gap = 0.0;
  for (std::size_t n = 1; n <= nmax; ++n) {
    const Predictor g = corollary2_G(constant_predictor(space, n, Flavor::e, 1.0), flip);
    for_each_sequence(*space, n + 1, [&](SequenceView s) {
      const_gap = std::max(const_gap, std::abs(g.eval(s) - std::exp(-0.5)));
    });
  }
  ctx.close("corollary 2 G on E = 1 equals e^(-1/2)", 0.0, const_gap, 1e-12, "max over n and sequences");
  for (std::size_t i = 0; i < c2; ++i) {
    CounterRng rng(seed, 0x6332, i);
    const Predictor e = tabulate(normalize_randomness(random_table(space, c2n, Flavor::e, rng), ctx.search()));
    const Predictor g = tabulate(corollary2_G(e, flip));
    ctx.verdict(tag("corollary 2 G", i) + " rand-e", certify_randomness_e(g, ctx.search()), true);
    double gap = -kInf;
    const Predictor bound = tabulate(corollary2_bound(e, flip));
    for_each_sequence(*space, c2n + 1, [&](SequenceView s) { gap = std::max(gap, g.eval(s) - bound.eval(s)); });
    ctx.at_most(tag("corollary 2 G - (G1+G2)/2", i) + " pointwise maximum", 0.0, gap, 1e-12);
  }
  for (std::size_t i = 0; i < c3; ++i) {
    CounterRng rng(seed, 0x6333, i);
    const Predictor p = random_randomness_p(space, c3n, rng, ctx.search());
    const PPair pair = corollary3_G(p, flip, delta);
    const Predictor pp = tabulate(pair.p_prime);
    const Certificate cp = certify_exchangeability_p(pp);
    ctx.verdict(tag("corollary 3 P'", i) + " exch-p", cp, true);
    ctx.holds(tag("corollary 3 P'", i) + " exact", cp.verdict == Verdict::pass_exact);
    ctx.holds(tag("corollary 3 P'", i) + " train-invariant", check_structure(pp).train_invariant);
    ctx.verdict(tag("corollary 3 G", i) + " rand-e", certify_randomness_e(tabulate(pair.g), ctx.search()), true);
  }
}

void scenario_remark1(Context& ctx) {
  const std::uint64_t seed = ctx.seed();
  const std::size_t count = ctx.size("predictors", 20), nmax = ctx.size("n_max", 5);
  const SpacePtr space = binary_space();
  for (std::size_t i = 0; i < count; ++i) {
    CounterRng rng(seed, 0x7231, i);
    const std::size_t n = 1 + i % nmax;
    const Predictor p = random_exchangeability_p(space, n, rng);
    const std::string id = tag("P", i) + " n=" + std::to_string(n);
    ctx.verdict(id + " exch-p", certify_exchangeability_p(p), true);
    const Predictor conf = tabulate(conformal_p_from_scores(space, n, remark1_scorer(p), true, "remark1"));
    double excess = -kInf;
    for_each_sequence(*space, n + 1, [&](SequenceView s) { excess = std::max(excess, conf.eval(s) - p.eval(s)); });
    ctx.at_most(id + " max(P_conf - P)", 0.0, excess, 1e-12, "pointwise domination");
  }
}

struct Entry {
  ScenarioInfo info;
  std::function<void(Context&)> run;
};

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = {
      {{"eq13-certification", "worst-case expectation of the k=1 predictor and its relative deviation", false,
        {"n_min", "n_max", "orbit_n_max"}},
       scenario_eq13},
      {{"thm2-refute", "flip-kernel G with c > 1/e fails randomness certification", false, {"n", "c", "pass_ns"}},
       scenario_thm2},
      {{"laplace-gap", "E/E^X of the Laplace predictor approaches e from below", false, {"ns"}}, scenario_laplace},
      {{"thm1-mc", "Monte Carlo means of the flip-kernel G and the proof decomposition", true,
        {"predictors", "n", "trials", "thetas", "scalar_n_max"}},
       scenario_thm1},
      {{"operators-laws", "algebra of the averaging operators on random tables", true, {"tables", "n", "labels"}},
       scenario_operators},
      {{"calibration-transport", "calibrator integrals and the p-to-e construction", true, {"deltas", "predictors", "n"}},
       scenario_calibration},
      {{"thm4-desk", "modular-sum predictor certification and event frequencies", true,
        {"n", "m", "trials", "e_threshold", "certify_e_prime_base"}},
       scenario_thm4},
      {{"thm3-construction", "encoder predictor certification and the inequality chain", false, {"n", "thm3_c"}},
       scenario_thm3},
      {{"appendix-b", "test-conditional G and the square-root constructions", true,
        {"thm5_tables", "n_max", "cor2_tables", "cor3_tables", "cor2_n", "cor3_n"}},
       scenario_appendix_b},
      {{"remark1-domination", "conformal p from 1/P scores dominates P", true, {"predictors", "n_max"}},
       scenario_remark1},
  };
  return entries;
}

const Entry* find_entry(const std::string& name) {
  const std::string key = name == "thm2-refutation" ? "thm2-refute" : name;
  for (const auto& e : registry())
    if (e.info.name == key) return &e;
  return nullptr;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  auto real = [&] { return to_double(key, value); };
  auto whole = [&] { return std::size_t(to_u64(key, value)); };
  if (key == "scenario") scenario = value;
  else if (key == "label") label = value;
  else if (key == "seed") seed = to_u64(key, value);
  else if (key == "threads") threads = unsigned(whole());
  else if (key == "out") out_dir = value;
  else if (key == "format") {
    formats.clear();
    for (const auto& f : split_list(value)) formats.push_back(parse_report_format(f));
  } else if (key == "a") constants.a = real();
  else if (key == "b") constants.b = real();
  else if (key == "c") constants.c = real();
  else if (key == "delta") constants.delta = real();
  else if (key == "epsilon") constants.epsilon = real();
  else if (key == "epsilon1") constants.epsilon1 = real();
  else if (key == "epsilon2") constants.epsilon2 = real();
  else if (key == "k") constants.k = int(whole());
  else if (key == "grid_resolution") search.grid_resolution = whole();
  else if (key == "max_grid_points") search.max_grid_points = whole();
  else if (key == "multistarts") search.multistarts = whole();
  else if (key == "ascent_iterations") search.ascent_iterations = whole();
  else if (key == "theta_grid") search.theta_grid = whole();
  else if (key == "golden_tolerance") search.golden_tolerance = real();
  else if (key == "exact_tolerance") search.exact_tolerance = real();
  else if (key == "search_tolerance") search.search_tolerance = real();
  else if (key == "search_seed") search.seed = to_u64(key, value);
  else if (key == "evaluation_cap") search.evaluation_cap = to_u64(key, value);
  else params[key] = value;
}

void ExperimentConfig::validate(bool require_seed) const {
  const Entry* entry = find_entry(scenario);
  if (!entry) {
    std::string known;
    for (const auto& e : registry()) known += (known.empty() ? "" : ", ") + e.info.name;
    throw DomainError("unknown scenario '" + scenario + "' (known: " + known + ")");
  }
  for (const auto& [key, value] : params) {
    const auto& keys = entry->info.keys;
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw DomainError("scenario '" + entry->info.name + "' does not accept key '" + key + "'");
  }
  if (require_seed && entry->info.stochastic && !seed)
    throw DomainError("scenario '" + entry->info.name + "' is stochastic and needs a seed");
  constants.validate();
}

SuiteConfig parse_suite(std::istream& in, const std::string& origin) {
  SuiteConfig suite;
  ExperimentConfig global;
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> sections;
  std::vector<std::pair<std::string, std::string>> global_pairs;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string text = trim(raw);
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw Error(origin + ":" + std::to_string(line) + ": unterminated section");
      sections.emplace_back(trim(text.substr(1, text.size() - 2)), std::vector<std::pair<std::string, std::string>>{});
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw Error(origin + ":" + std::to_string(line) + ": expected key = value");
    std::pair<std::string, std::string> kv{trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
    if (kv.first.empty()) throw Error(origin + ":" + std::to_string(line) + ": empty key");
    if (sections.empty()) global_pairs.push_back(kv);
    else sections.back().second.push_back(kv);
  }
  for (const auto& [key, value] : global_pairs) {
    if (key == "parallel") suite.parallel = to_bool(key, value);
    else global.set(key, value);
  }
  for (const auto& [name, pairs] : sections) {
    ExperimentConfig cfg = global;
    cfg.scenario = name;
    cfg.label = name;
    for (const auto& [key, value] : pairs) cfg.set(key, value);
    try {
      cfg.validate(false);
    } catch (const Error& e) {
      throw Error(origin + ": section [" + name + "]: " + e.what());
    }
    suite.runs.push_back(std::move(cfg));
  }
  if (suite.runs.empty() && !global.scenario.empty()) {
    global.validate(false);
    suite.runs.push_back(global);
  }
  return suite;
}

SuiteConfig load_suite(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path);
  return parse_suite(in, path);
}

// ---------------------------------------------------------------------------
// Running and reporting

bool Report::passed() const {
  if (error || rows.empty()) return false;
  return std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.pass; });
}

const std::vector<ScenarioInfo>& scenario_catalog() {
  static const std::vector<ScenarioInfo> infos = [] {
    std::vector<ScenarioInfo> v;
    for (const auto& e : registry()) v.push_back(e.info);
    return v;
  }();
  return infos;
}

const ScenarioInfo* find_scenario(const std::string& name) {
  const Entry* e = find_entry(name);
  return e ? &e->info : nullptr;
}

Report run_scenario(const ExperimentConfig& cfg) {
  cfg.validate();
  const Entry* entry = find_entry(cfg.scenario);
  Report report;
  report.scenario = entry->info.name;
  report.label = cfg.label.empty() ? entry->info.name : cfg.label;
  report.seed = cfg.seed;
  const auto start = std::chrono::steady_clock::now();
  Context ctx(cfg, report);
  try {
    entry->run(ctx);
  } catch (const Error& e) {
    report.error = e.what();
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!cfg.out_dir.empty()) write_report_files(report, cfg.out_dir, cfg.formats);
  return report;
}

std::vector<Report> run_suite(const SuiteConfig& suite) {
  std::vector<Report> reports(suite.runs.size());
  parallel_for(
      suite.runs.size(), [&](std::size_t i) { reports[i] = run_scenario(suite.runs[i]); },
      suite.parallel ? 0u : 1u);
  return reports;
}

void emit_report(const Report& r, ReportFormat format, std::ostream& out, bool include_timing) {
  if (format == ReportFormat::json) {
    out << report_to_json(r, include_timing).dump(2) << '\n';
    return;
  }
  out << "scenario,name,expected,observed,tolerance,relation,pass,note\n";
  for (const auto& row : r.rows) {
    out << csv_field(r.label) << ',' << csv_field(row.name) << ',' << format_number(row.expected) << ','
        << format_number(row.observed) << ',' << format_number(row.tolerance) << ',' << row.relation << ','
        << (row.pass ? "pass" : "fail") << ',' << csv_field(row.note) << '\n';
  }
}

void write_report_files(const Report& r, const std::string& dir, const std::vector<ReportFormat>& formats,
                        bool include_timing) {
  std::filesystem::create_directories(dir);
  for (ReportFormat f : formats) {
    const auto path = std::filesystem::path(dir) / (r.label + "." + to_string(f));
    std::ofstream out(path);
    if (!out) throw Error("cannot write report " + path.string());
    emit_report(r, f, out, include_timing);
    if (!out) throw Error("write failed for " + path.string());
  }
}

std::string certificate_json(const Certificate& c, int indent) { return certificate_to_json(c).dump(indent); }

std::string suite_summary_json(const std::vector<Report>& reports, int indent) {
  json runs = json::array();
  bool all = true;
  for (const auto& r : reports) {
    std::size_t failed = 0;
    for (const auto& row : r.rows) failed += !row.pass;
    runs.push_back({{"label", r.label},
                    {"scenario", r.scenario},
                    {"checks", r.rows.size()},
                    {"failed", failed},
                    {"error", r.error ? json(*r.error) : json(nullptr)},
                    {"passed", r.passed()}});
    all = all && r.passed();
  }
  return json{{"runs", runs}, {"passed", all}}.dump(indent);
}

}  // namespace univconf
