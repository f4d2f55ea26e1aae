#include "univconf/verification.hpp"

#include <algorithm>
#include <boost/math/distributions/binomial.hpp>
#include <complex>
#include <numbers>
#include <queue>

#include "univconf/orbit.hpp"
#include "univconf/parallel.hpp"
#include "univconf/rng.hpp"

namespace univconf {

std::string to_string(TargetClass t) {
  switch (t) {
    case TargetClass::exch_e: return "exch-e";
    case TargetClass::rand_e: return "rand-e";
    case TargetClass::invariant_rand_e: return "invariant-rand-e";
    case TargetClass::exch_p: return "exch-p";
    case TargetClass::rand_p: return "rand-p";
    case TargetClass::test_cond_exch_e: return "test-cond";
  }
  return "?";
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass_exact: return "pass_exact";
    case Verdict::pass_numeric: return "pass_numeric";
    case Verdict::fail: return "fail";
    case Verdict::indeterminate: return "indeterminate";
  }
  return "?";
}

std::string to_string(CertMethod m) {
  switch (m) {
    case CertMethod::orbit_enumeration: return "orbit_enumeration";
    case CertMethod::simplex_grid: return "simplex_grid";
    case CertMethod::one_dim_maximize: return "one_dim_maximize";
    case CertMethod::roots_of_unity: return "roots_of_unity";
    case CertMethod::monte_carlo: return "monte_carlo";
  }
  return "?";
}

TargetClass parse_target_class(const std::string& s) {
  for (auto t : {TargetClass::exch_e, TargetClass::rand_e, TargetClass::invariant_rand_e,
                 TargetClass::exch_p, TargetClass::rand_p, TargetClass::test_cond_exch_e})
    if (s == to_string(t)) return t;
  if (s == "test-cond-exch-e" || s == "test_cond") return TargetClass::test_cond_exch_e;
  throw DomainError("unknown target class '" + s + "'");
}

namespace {

constexpr double kOrbitTolerance = 1e-12;

double log_multinomial(const std::vector<std::uint32_t>& counts) {
  double total = 0.0;
  double r = 0.0;
  for (auto c : counts) {
    total += c;
    r -= std::lgamma(c + 1.0);
  }
  return r + std::lgamma(total + 1.0);
}

double count_compositions(std::size_t atoms, std::size_t size) {
  return std::round(std::exp(log_binomial(double(size + atoms - 1), double(atoms - 1))));
}

// log(sum exp(x_i)) over a list; -inf for an empty list, +inf if any x is +inf.
double log_sum_exp(const std::vector<double>& xs) {
  if (xs.empty()) return -kInf;
  const double top = *std::max_element(xs.begin(), xs.end());
  if (std::isinf(top)) return top;
  CompensatedSum s;
  for (double x : xs) s.add(std::exp(x - top));
  return top + std::log(s.value());
}

bool atoms_are_labels(const Predictor& p) {
  return p.label_only() || p.space().object_count() == 1;
}

Example atom_example(const ExampleSpace& space, bool over_labels, std::size_t a) {
  return over_labels ? Example{0, static_cast<std::uint32_t>(a)} : space.example_at(a);
}

void append_atoms(const ExampleSpace& space, bool over_labels,
                  const std::vector<std::uint32_t>& counts, Sequence& out) {
  for (std::size_t a = 0; a < counts.size(); ++a)
    for (std::uint32_t j = 0; j < counts[a]; ++j) out.push_back(atom_example(space, over_labels, a));
}

// Visits the sequences of one bag that a predictor can distinguish, with the
// log of the number of sequences each one stands for. Order is deterministic,
// so an entry index can be turned back into a sequence.
void visit_orbit(const Predictor& pred, bool over_labels, const std::vector<std::uint32_t>& counts,
                 const std::function<void(SequenceView, double)>& visit) {
  const ExampleSpace& space = pred.space();
  Sequence seq;
  if (pred.fully_invariant()) {
    append_atoms(space, over_labels, counts, seq);
    visit(seq, log_multinomial(counts));
    return;
  }
  if (pred.train_invariant()) {
    std::vector<std::uint32_t> train = counts;
    for (std::size_t a = 0; a < counts.size(); ++a) {
      if (counts[a] == 0) continue;
      --train[a];
      seq.clear();
      append_atoms(space, over_labels, train, seq);
      seq.push_back(atom_example(space, over_labels, a));
      visit(seq, log_multinomial(train));
      ++train[a];
    }
    return;
  }
  append_atoms(space, over_labels, counts, seq);
  for_each_distinct(
      seq, OrbitScope::all, [&](SequenceView s, std::uint64_t) { visit(s, 0.0); }, kSaturated);
}

Sequence orbit_entry_sequence(const Predictor& pred, bool over_labels,
                              const std::vector<std::uint32_t>& counts, std::size_t index) {
  Sequence found;
  std::size_t i = 0;
  visit_orbit(pred, over_labels, counts, [&](SequenceView s, double) {
    if (i++ == index) found.assign(s.begin(), s.end());
  });
  return found;
}

std::vector<double> example_distribution(const ExampleSpace& space, bool over_labels,
                                         std::span<const double> q) {
  if (!over_labels) return {q.begin(), q.end()};
  std::vector<double> out(space.size(), 0.0);
  for (std::size_t y = 0; y < q.size(); ++y) out[space.index(Example{0, static_cast<std::uint32_t>(y)})] = q[y];
  return out;
}

std::vector<double> uniform(std::size_t d) { return std::vector<double>(d, 1.0 / double(d)); }

void require_flavor(const Predictor& p, Flavor f, const char* what) {
  if (p.flavor() != f)
    throw FlavorError(std::string(what) + " needs a " + to_string(f) + "-flavor predictor");
}

// Objective for the test-count profile hint:
// sum_y q_y sum_k h[y][k] Bin(n, q_y)(k), with each binomial summed outward
// from its mode until the remaining mass is negligible.
double profile_expectation(const TestCountProfile& h, std::size_t n, std::span<const double> q) {
  CompensatedSum total;
  for (std::size_t y = 0; y < q.size(); ++y) {
    const double p = q[y];
    if (p <= 0.0) continue;
    const auto& row = h.values[y];
    if (p >= 1.0) {
      total.add(row[n]);
      continue;
    }
    const auto mode = static_cast<std::size_t>(std::min<double>(double(n), std::floor((n + 1) * p)));
    const double log_mode = log_binomial(double(n), double(mode)) + mode * std::log(p) +
                            (n - mode) * std::log1p(-p);
    const double pmf_mode = std::exp(log_mode);
    const double odds = p / (1.0 - p);
    CompensatedSum s;
    s.add(row[mode] == 0.0 ? 0.0 : row[mode] * pmf_mode);
    double pmf = pmf_mode;
    for (std::size_t k = mode; k < n; ++k) {
      pmf *= double(n - k) / double(k + 1) * odds;
      if (row[k + 1] != 0.0) s.add(row[k + 1] * pmf);
      if (pmf < 1e-40 * pmf_mode) break;
    }
    pmf = pmf_mode;
    for (std::size_t k = mode; k > 0; --k) {
      pmf *= double(k) / double(n - k + 1) / odds;
      if (row[k - 1] != 0.0) s.add(row[k - 1] * pmf);
      if (pmf < 1e-40 * pmf_mode) break;
    }
    total.add(p * s.value());
  }
  return total.value();
}

std::vector<double> dirichlet_point(std::size_t d, CounterRng& rng) {
  std::vector<double> q(d);
  double s = 0.0;
  for (auto& x : q) {
    x = -std::log1p(-rng.uniform());
    s += x;
  }
  for (auto& x : q) x /= s;
  return q;
}

struct LocalResult {
  std::vector<double> q;
  double value;
  bool converged;
  std::uint64_t evaluations;
};

// Pairwise mass transfer q_i -> q_j with a shrinking step.
LocalResult pattern_search(const SimplexObjective& f, std::vector<double> q, double value,
                           double step, std::uint64_t budget) {
  const std::size_t d = q.size();
  std::uint64_t evals = 0;
  std::vector<double> trial(d);
  while (step > 1e-13) {
    bool improved = false;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        if (i == j) continue;
        const double delta = std::min(step, q[i]);
        if (delta <= 0.0) continue;
        trial = q;
        trial[i] -= delta;
        trial[j] += delta;
        const double v = f(trial);
        ++evals;
        if (v > value) {
          value = v;
          q = trial;
          improved = true;
        }
      }
    }
    if (evals > budget) return {q, value, false, evals};
    if (!improved) step *= 0.5;
  }
  return {q, value, true, evals};
}

LocalResult growth_ascent(const NullPolynomial& poly, std::vector<double> q, std::size_t iterations) {
  double value = poly(q);
  std::uint64_t evals = 1;
  for (std::size_t it = 0; it < iterations; ++it) {
    std::vector<double> next = poly.growth_step(q);
    const double v = poly(next);
    ++evals;
    if (!(v >= value)) break;
    const bool small = v - value <= 1e-15 * std::max(1.0, std::abs(value));
    q = std::move(next);
    value = v;
    if (small) break;
  }
  return {q, value, true, evals};
}

}  // namespace

double NullPolynomial::operator()(std::span<const double> q) const {
  std::vector<double> logq(q.size());
  for (std::size_t a = 0; a < q.size(); ++a) logq[a] = q[a] > 0.0 ? std::log(q[a]) : -kInf;
  CompensatedSum s;
  for (const auto& t : terms) {
    double l = t.log_coefficient;
    bool zero = false;
    for (std::size_t a = 0; a < t.counts.size(); ++a) {
      if (t.counts[a] == 0) continue;
      if (q[a] <= 0.0) {
        zero = true;
        break;
      }
      l += t.counts[a] * logq[a];
    }
    if (!zero) s.add(std::exp(l));
  }
  return s.value();
}

std::vector<double> NullPolynomial::growth_step(std::span<const double> q) const {
  std::vector<double> out(q.begin(), q.end());
  if (infinite || terms.empty() || degree == 0) return out;
  std::vector<double> logs(terms.size(), -kInf);
  for (std::size_t t = 0; t < terms.size(); ++t) {
    double l = terms[t].log_coefficient;
    for (std::size_t a = 0; a < atoms && !std::isinf(l); ++a) {
      if (terms[t].counts[a] == 0) continue;
      l = q[a] > 0.0 ? l + terms[t].counts[a] * std::log(q[a]) : -kInf;
    }
    logs[t] = l;
  }
  const double top = *std::max_element(logs.begin(), logs.end());
  if (std::isinf(top)) return out;
  std::vector<double> acc(atoms, 0.0);
  double total = 0.0;
  for (std::size_t t = 0; t < terms.size(); ++t) {
    if (std::isinf(logs[t])) continue;
    const double w = std::exp(logs[t] - top);
    total += w;
    for (std::size_t a = 0; a < atoms; ++a) acc[a] += w * terms[t].counts[a];
  }
  for (std::size_t a = 0; a < atoms; ++a) out[a] = acc[a] / (double(degree) * total);
  return out;
}

BagTable bag_table(const Predictor& pred, std::uint64_t evaluation_cap) {
  BagTable table;
  table.over_labels = atoms_are_labels(pred);
  table.atoms = table.over_labels ? pred.space().label_count() : pred.space().size();
  table.degree = pred.arity();
  const double bags = count_compositions(table.atoms, table.degree);
  double estimate = bags;
  if (!pred.fully_invariant())
    estimate = pred.train_invariant()
                   ? bags * double(std::min(table.atoms, table.degree))
                   : std::pow(double(table.atoms), double(table.degree));
  if (estimate > double(evaluation_cap))
    throw EnumerationCapError("bag table of " + pred.name(),
                              estimate >= 1.8e19 ? kSaturated : std::uint64_t(estimate), evaluation_cap);
  for_each_composition(table.atoms, table.degree, [&](const std::vector<std::uint32_t>& counts) {
    BagTable::Orbit orbit;
    orbit.counts = counts;
    visit_orbit(pred, table.over_labels, counts, [&](SequenceView s, double lw) {
      orbit.entries.push_back({pred.eval(s), lw});
      ++table.evaluations;
    });
    table.orbits.push_back(std::move(orbit));
  });
  return table;
}

NullPolynomial expectation_polynomial(const BagTable& table) {
  NullPolynomial poly;
  poly.atoms = table.atoms;
  poly.degree = table.degree;
  poly.over_labels = table.over_labels;
  std::vector<double> logs;
  for (const auto& orbit : table.orbits) {
    logs.clear();
    for (const auto& e : orbit.entries) {
      if (std::isnan(e.value)) throw DomainError("predictor returned NaN");
      if (e.value > 0.0) logs.push_back(std::log(e.value) + e.log_weight);
    }
    const double lc = log_sum_exp(logs);
    if (std::isinf(lc) && lc < 0) continue;
    if (std::isinf(lc)) poly.infinite = true;
    poly.terms.push_back({orbit.counts, lc});
  }
  return poly;
}

NullPolynomial tail_polynomial(const BagTable& table, double alpha) {
  NullPolynomial poly;
  poly.atoms = table.atoms;
  poly.degree = table.degree;
  poly.over_labels = table.over_labels;
  std::vector<double> logs;
  for (const auto& orbit : table.orbits) {
    logs.clear();
    for (const auto& e : orbit.entries)
      if (e.value <= alpha) logs.push_back(e.log_weight);
    if (logs.empty()) continue;
    poly.terms.push_back({orbit.counts, log_sum_exp(logs)});
  }
  return poly;
}

NullPolynomial null_polynomial(const Predictor& e, std::uint64_t evaluation_cap) {
  if (const auto* lp = std::get_if<LabelPolynomial>(&e.hint())) {
    NullPolynomial poly;
    poly.atoms = e.space().label_count();
    poly.over_labels = true;
    for (const auto& t : lp->terms) {
      if (t.counts.size() != poly.atoms) throw DomainError("label polynomial term has wrong arity");
      std::size_t deg = 0;
      for (auto c : t.counts) deg += c;
      poly.degree = std::max(poly.degree, deg);
      if (t.coefficient <= 0.0) continue;
      if (std::isinf(t.coefficient)) poly.infinite = true;
      poly.terms.push_back({t.counts, std::log(t.coefficient)});
    }
    return poly;
  }
  return expectation_polynomial(bag_table(e, evaluation_cap));
}

double golden_section_maximize(const std::function<double(double)>& f, double lo, double hi,
                               double tolerance) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tolerance) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

SimplexMaximum maximize_on_simplex(std::size_t atoms, const SimplexObjective& f,
                                   const SearchConfig& cfg, const NullPolynomial* polynomial) {
  if (atoms == 0) throw DomainError("simplex needs at least one atom");
  SimplexMaximum best;
  std::uint64_t evals = 0;
  auto eval = [&](std::span<const double> q) {
    ++evals;
    return f(q);
  };
  if (atoms == 1) {
    best.argmax = {1.0};
    best.value = eval(best.argmax);
    best.method = CertMethod::one_dim_maximize;
    best.evaluations = evals;
    return best;
  }
  if (atoms == 2) {
    best.method = CertMethod::one_dim_maximize;
    best.resolution = cfg.golden_tolerance;
    const std::size_t g = std::max<std::size_t>(cfg.theta_grid, 4);
    std::vector<double> profile(g + 1);
    auto at = [&](double theta) {
      const double q[2] = {1.0 - theta, theta};
      return eval(std::span<const double>(q, 2));
    };
    for (std::size_t i = 0; i <= g; ++i) profile[i] = at(double(i) / double(g));
    std::vector<std::size_t> peaks;
    for (std::size_t i = 0; i <= g; ++i) {
      const bool left = i == 0 || profile[i] >= profile[i - 1];
      const bool right = i == g || profile[i] >= profile[i + 1];
      if (left && right) peaks.push_back(i);
    }
    std::sort(peaks.begin(), peaks.end(), [&](auto x, auto y) { return profile[x] > profile[y]; });
    if (peaks.size() > 8) peaks.resize(8);
    double best_theta = 0.0;
    best.value = -kInf;
    for (std::size_t i = 0; i <= g; ++i)
      if (profile[i] > best.value) {
        best.value = profile[i];
        best_theta = double(i) / double(g);
      }
    for (std::size_t i : peaks) {
      const double lo = double(i == 0 ? 0 : i - 1) / double(g);
      const double hi = double(std::min(g, i + 1)) / double(g);
      const double theta = golden_section_maximize(at, lo, hi, cfg.golden_tolerance);
      const double v = at(theta);
      if (v > best.value) {
        best.value = v;
        best_theta = theta;
      }
    }
    best.argmax = {1.0 - best_theta, best_theta};
    best.converged = !std::isnan(best.value);
    best.evaluations = evals;
    return best;
  }

  best.method = CertMethod::simplex_grid;
  std::size_t r = std::max<std::size_t>(cfg.grid_resolution, 1);
  while (r > 1 && count_compositions(atoms, r) > double(cfg.max_grid_points)) --r;
  best.resolution = 1.0 / double(r);

  const std::size_t keep = std::max<std::size_t>(1, cfg.multistarts / 2);
  using Scored = std::pair<double, std::vector<double>>;
  auto worse = [](const Scored& x, const Scored& y) { return x.first > y.first; };
  std::priority_queue<Scored, std::vector<Scored>, decltype(worse)> top(worse);
  std::vector<double> q(atoms);
  bool saw_nan = false;
  for_each_composition(atoms, r, [&](const std::vector<std::uint32_t>& counts) {
    for (std::size_t a = 0; a < atoms; ++a) q[a] = double(counts[a]) / double(r);
    const double v = eval(q);
    if (std::isnan(v)) {
      saw_nan = true;
      return;
    }
    if (top.size() < keep) {
      top.push({v, q});
    } else if (v > top.top().first) {
      top.pop();
      top.push({v, q});
    }
  });

  std::vector<std::vector<double>> starts;
  while (!top.empty()) {
    starts.push_back(top.top().second);
    top.pop();
  }
  starts.push_back(uniform(atoms));
  CounterRng rng(cfg.seed, 0x53494d50, atoms);
  while (starts.size() < std::max<std::size_t>(cfg.multistarts, keep + 1))
    starts.push_back(dirichlet_point(atoms, rng));

  best.value = -kInf;
  bool best_converged = true;
  const std::uint64_t budget = 20000 * atoms * atoms;
  for (auto& start : starts) {
    LocalResult local{start, eval(start), true, 0};
    if (polynomial && !polynomial->infinite) {
      local = growth_ascent(*polynomial, start, cfg.ascent_iterations);
      local.value = eval(local.q);
    }
    local = pattern_search(eval, local.q, local.value, best.resolution, budget);
    if (local.value > best.value) {
      best.value = local.value;
      best.argmax = local.q;
      best_converged = local.converged;
    }
  }
  best.converged = best_converged && !saw_nan && !std::isnan(best.value);
  best.evaluations = evals;
  return best;
}

Certificate certify_exchangeability_e(const Predictor& e, std::uint64_t evaluation_cap) {
  require_flavor(e, Flavor::e, "exch-e certification");
  Certificate cert;
  cert.target = TargetClass::exch_e;
  cert.method = CertMethod::orbit_enumeration;
  cert.tolerance = kOrbitTolerance;
  const BagTable table = bag_table(e, evaluation_cap);
  cert.evaluations = table.evaluations;
  double worst = -kInf;
  std::size_t worst_orbit = 0, worst_entry = 0;
  for (std::size_t o = 0; o < table.orbits.size(); ++o) {
    const auto& orbit = table.orbits[o];
    const double lt = log_multinomial(orbit.counts);
    CompensatedSum mean;
    std::size_t top = 0;
    for (std::size_t i = 0; i < orbit.entries.size(); ++i) {
      const auto& en = orbit.entries[i];
      if (en.value > orbit.entries[top].value) top = i;
      if (en.value > 0.0) mean.add(en.value * std::exp(en.log_weight - lt));
    }
    const double m = mean.value();
    if (std::isnan(m)) throw DomainError("predictor returned NaN");
    if (m > worst) {
      worst = m;
      worst_orbit = o;
      worst_entry = top;
    }
  }
  cert.worst_value = worst;
  cert.margin = 1.0 - worst;
  if (worst <= 1.0 + kOrbitTolerance) {
    cert.verdict = Verdict::pass_exact;
  } else {
    cert.verdict = Verdict::fail;
    Witness w;
    w.sequence = orbit_entry_sequence(e, table.over_labels, table.orbits[worst_orbit].counts, worst_entry);
    cert.witness = w;
  }
  return cert;
}

Certificate certify_randomness_e(const Predictor& e, const SearchConfig& cfg) {
  require_flavor(e, Flavor::e, "rand-e certification");
  Certificate cert;
  cert.target = TargetClass::rand_e;
  cert.seed = cfg.seed;
  const ExampleSpace& space = e.space();

  NullPolynomial poly;
  SimplexObjective objective;
  std::size_t atoms = 0;
  bool over_labels = true;
  if (const auto* h = std::get_if<TestCountProfile>(&e.hint())) {
    if (h->values.size() != space.label_count()) throw DomainError("test-count profile has wrong label count");
    for (const auto& row : h->values)
      if (row.size() != e.n() + 1) throw DomainError("test-count profile row has wrong length");
    atoms = space.label_count();
    const TestCountProfile profile = *h;
    const std::size_t n = e.n();
    objective = [profile, n](std::span<const double> q) { return profile_expectation(profile, n, q); };
    cert.note = "test-count profile";
  } else {
    poly = null_polynomial(e, cfg.evaluation_cap);
    atoms = poly.atoms;
    over_labels = poly.over_labels;
    if (poly.infinite) {
      const auto q = uniform(atoms);
      cert.verdict = Verdict::fail;
      cert.worst_value = kInf;
      cert.margin = -kInf;
      cert.method = atoms == 2 ? CertMethod::one_dim_maximize : CertMethod::simplex_grid;
      cert.tolerance = atoms == 2 ? cfg.exact_tolerance : cfg.search_tolerance;
      Witness w;
      w.distribution = example_distribution(space, over_labels, q);
      cert.witness = w;
      cert.note = "predictor takes the value +inf with positive probability";
      return cert;
    }
    objective = [&poly](std::span<const double> q) { return poly(q); };
  }

  const SimplexMaximum max =
      maximize_on_simplex(atoms, objective, cfg, poly.terms.empty() ? nullptr : &poly);
  cert.method = max.method;
  cert.tolerance = max.method == CertMethod::one_dim_maximize ? cfg.exact_tolerance : cfg.search_tolerance;
  cert.resolution = max.resolution;
  cert.evaluations = max.evaluations;
  cert.worst_value = max.value;
  cert.margin = 1.0 - max.value;
  Witness w;
  w.distribution = example_distribution(space, over_labels, max.argmax);
  if (max.value > 1.0 + cert.tolerance) {
    cert.verdict = Verdict::fail;
    cert.witness = w;
  } else if (!max.converged) {
    cert.verdict = Verdict::indeterminate;
    cert.witness = w;
    cert.note += cert.note.empty() ? "search did not converge" : "; search did not converge";
  } else {
    cert.verdict = Verdict::pass_numeric;
    cert.witness = w;
  }
  return cert;
}

Certificate certify_invariant_randomness_e(const Predictor& e, const SearchConfig& cfg) {
  Certificate cert = certify_randomness_e(e, cfg);
  cert.target = TargetClass::invariant_rand_e;
  const StructureCheck check = check_structure(e, cfg.seed);
  if (!e.fully_invariant() || !check.fully_invariant) {
    cert.verdict = Verdict::fail;
    Witness w = cert.witness.value_or(Witness{});
    if (check.counterexample) w.sequence = check.counterexample;
    cert.witness = w;
    cert.note = "predictor is not fully invariant";
  }
  return cert;
}

double modular_sum_probability(std::span<const double> q, std::size_t power) {
  const std::size_t m = q.size();
  CompensatedSum s;
  for (std::size_t j = 0; j < m; ++j) {
    std::complex<double> phi = 0.0;
    for (std::size_t y = 0; y < m; ++y)
      phi += q[y] * std::polar(1.0, 2.0 * std::numbers::pi * double((j * y) % m) / double(m));
    s.add(std::pow(phi, double(power)).real());
  }
  return std::clamp(s.value() / double(m), 0.0, 1.0);
}

double balance_probability_bound(std::span<const double> q, std::size_t n) {
  const std::size_t m = q.size();
  const double centre = double(n) / double(m);
  const double slack = 0.1 * centre;
  const auto lo = static_cast<long long>(std::ceil(centre - slack - 1e-12));
  const auto hi = static_cast<long long>(std::floor(centre + slack + 1e-12));
  const double trials = double(n + 1);
  double bound = 1.0;
  for (double p : q) {
    double prob;
    if (p <= 0.0) {
      prob = lo <= 0 ? 1.0 : 0.0;
    } else if (p >= 1.0) {
      prob = hi >= static_cast<long long>(n + 1) ? 1.0 : 0.0;
    } else {
      boost::math::binomial_distribution<double> bin(trials, p);
      const double upper = boost::math::cdf(bin, double(std::min<long long>(hi, n + 1)));
      const double lower = lo > 0 ? boost::math::cdf(bin, double(lo - 1)) : 0.0;
      prob = std::max(0.0, upper - lower);
    }
    bound = std::min(bound, prob);
  }
  return bound;
}

Certificate certify_randomness_e_modular(const ModularParams& params, const SearchConfig& cfg) {
  if (params.m < 2) throw DomainError("modular certificate needs m >= 2");
  Certificate cert;
  cert.target = TargetClass::rand_e;
  cert.method = CertMethod::roots_of_unity;
  cert.tolerance = 1e-6;
  cert.seed = cfg.seed;
  const double scale = params.c * double(params.m);
  double best_seen = 0.0;
  SimplexObjective f = [&](std::span<const double> q) {
    const double mod = scale * modular_sum_probability(q, params.n + 1);
    // The balance tail only matters when it could beat the current best.
    if (mod <= best_seen) return mod;
    const double v = std::min(mod, scale * balance_probability_bound(q, params.n));
    best_seen = std::max(best_seen, v);
    return v;
  };
  const SimplexMaximum max = maximize_on_simplex(params.m, f, cfg);
  cert.resolution = max.resolution;
  cert.evaluations = max.evaluations;
  cert.worst_value = max.value;
  cert.margin = 1.0 - max.value;
  Witness w;
  w.distribution = max.argmax;
  cert.witness = w;
  if (max.value > 1.0 + cert.tolerance)
    cert.verdict = Verdict::fail;
  else
    cert.verdict = max.converged ? Verdict::pass_numeric : Verdict::indeterminate;
  cert.note = "bound c m min(P(S=0 mod m), balance) over label distributions";
  return cert;
}

std::vector<double> default_alpha_grid() {
  std::vector<double> g;
  for (int k = 1; k < 100; ++k) g.push_back(0.01 * k);
  return g;
}

namespace {

std::vector<double> alpha_breakpoints(const BagTable& table, std::span<const double> alphas) {
  std::vector<double> out;
  if (alphas.empty()) {
    out = default_alpha_grid();
  } else {
    out.assign(alphas.begin(), alphas.end());
  }
  for (const auto& o : table.orbits)
    for (const auto& e : o.entries)
      if (e.value >= 0.0 && e.value < 1.0) out.push_back(e.value);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  out.erase(std::remove_if(out.begin(), out.end(), [](double a) { return !(a >= 0.0 && a < 1.0); }),
            out.end());
  return out;
}

}  // namespace

Certificate certify_exchangeability_p(const Predictor& p, std::span<const double> alphas,
                                      std::uint64_t evaluation_cap) {
  require_flavor(p, Flavor::p, "exch-p certification");
  Certificate cert;
  cert.target = TargetClass::exch_p;
  cert.method = CertMethod::orbit_enumeration;
  cert.tolerance = kOrbitTolerance;
  const BagTable table = bag_table(p, evaluation_cap);
  cert.evaluations = table.evaluations;
  const std::vector<double> grid = alpha_breakpoints(table, alphas);
  double worst = -kInf;
  double worst_alpha = 0.0;
  std::size_t worst_orbit = 0, worst_entry = 0;
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t o = 0; o < table.orbits.size(); ++o) {
    const auto& orbit = table.orbits[o];
    const double lt = log_multinomial(orbit.counts);
    order.clear();
    for (std::size_t i = 0; i < orbit.entries.size(); ++i) order.push_back({orbit.entries[i].value, i});
    std::sort(order.begin(), order.end());
    CompensatedSum fraction;
    std::size_t next = 0;
    for (double alpha : grid) {
      while (next < order.size() && order[next].first <= alpha) {
        fraction.add(std::exp(orbit.entries[order[next].second].log_weight - lt));
        ++next;
      }
      if (next == 0) continue;
      const double excess = fraction.value() - alpha;
      if (excess > worst) {
        worst = excess;
        worst_alpha = alpha;
        worst_orbit = o;
        worst_entry = order[next - 1].second;
      }
    }
  }
  if (std::isinf(worst)) worst = -1.0;  // no sublevel mass at any level
  cert.worst_value = worst;
  cert.margin = -worst;
  if (worst <= kOrbitTolerance) {
    cert.verdict = Verdict::pass_exact;
  } else {
    cert.verdict = Verdict::fail;
    Witness w;
    w.sequence = orbit_entry_sequence(p, table.over_labels, table.orbits[worst_orbit].counts, worst_entry);
    w.alpha = worst_alpha;
    cert.witness = w;
  }
  return cert;
}

Certificate certify_randomness_p(const Predictor& p, std::span<const double> alphas,
                                 const SearchConfig& cfg) {
  require_flavor(p, Flavor::p, "rand-p certification");
  Certificate cert;
  cert.target = TargetClass::rand_p;
  cert.seed = cfg.seed;
  const BagTable table = bag_table(p, cfg.evaluation_cap);
  cert.evaluations = table.evaluations;
  const std::vector<double> grid = alpha_breakpoints(table, alphas);
  double worst = -1.0;
  double worst_alpha = 0.0;
  std::vector<double> worst_q = uniform(table.atoms);
  bool converged = true;
  cert.method = table.atoms == 2 ? CertMethod::one_dim_maximize : CertMethod::simplex_grid;
  cert.tolerance = table.atoms == 2 ? cfg.exact_tolerance : cfg.search_tolerance;
  for (double alpha : grid) {
    const NullPolynomial tail = tail_polynomial(table, alpha);
    if (tail.terms.empty()) continue;
    const SimplexMaximum max = maximize_on_simplex(
        table.atoms, [&tail](std::span<const double> q) { return tail(q); }, cfg, &tail);
    cert.evaluations += max.evaluations;
    cert.resolution = max.resolution;
    converged = converged && max.converged;
    if (max.value - alpha > worst) {
      worst = max.value - alpha;
      worst_alpha = alpha;
      worst_q = max.argmax;
    }
  }
  cert.worst_value = worst;
  cert.margin = -worst;
  Witness w;
  w.distribution = example_distribution(p.space(), table.over_labels, worst_q);
  w.alpha = worst_alpha;
  cert.witness = w;
  if (worst > cert.tolerance)
    cert.verdict = Verdict::fail;
  else
    cert.verdict = converged ? Verdict::pass_numeric : Verdict::indeterminate;
  return cert;
}

Certificate certify_test_conditional(const Predictor& g, std::uint64_t evaluation_cap) {
  require_flavor(g, Flavor::e, "test-conditional certification");
  Certificate cert;
  cert.target = TargetClass::test_cond_exch_e;
  cert.method = CertMethod::orbit_enumeration;
  cert.tolerance = kOrbitTolerance;
  const ExampleSpace& space = g.space();
  const bool over_labels = atoms_are_labels(g);
  const std::size_t atoms = over_labels ? space.label_count() : space.size();
  const std::size_t n = g.n();
  const double bags = count_compositions(atoms, n) * double(atoms);
  const double estimate = g.train_invariant() ? bags : std::pow(double(atoms), double(n + 1));
  if (estimate > double(evaluation_cap))
    throw EnumerationCapError("test-conditional orbits of " + g.name(),
                              estimate >= 1.8e19 ? kSaturated : std::uint64_t(estimate), evaluation_cap);
  double worst = -kInf;
  Sequence worst_seq;
  std::uint64_t evals = 0;
  Sequence seq;
  for_each_composition(atoms, n, [&](const std::vector<std::uint32_t>& train) {
    for (std::size_t a = 0; a < atoms; ++a) {
      seq.clear();
      append_atoms(space, over_labels, train, seq);
      seq.push_back(atom_example(space, over_labels, a));
      double mean;
      Sequence top = seq;
      if (g.train_invariant()) {
        mean = g.eval(seq);
        ++evals;
      } else {
        CompensatedSum s;
        double total = 0.0, best = -kInf;
        for_each_distinct(
            seq, OrbitScope::train_only,
            [&](SequenceView v, std::uint64_t w) {
              const double x = g.eval(v);
              ++evals;
              if (x > best) {
                best = x;
                top.assign(v.begin(), v.end());
              }
              if (x > 0.0) s.add(x * double(w));
              total += double(w);
            },
            kSaturated);
        mean = s.value() / total;
      }
      if (std::isnan(mean)) throw DomainError("predictor returned NaN");
      if (mean > worst) {
        worst = mean;
        worst_seq = top;
      }
    }
  });
  cert.evaluations = evals;
  cert.worst_value = worst;
  cert.margin = 1.0 - worst;
  if (worst <= 1.0 + kOrbitTolerance) {
    cert.verdict = Verdict::pass_exact;
  } else {
    cert.verdict = Verdict::fail;
    Witness w;
    w.sequence = worst_seq;
    cert.witness = w;
  }
  return cert;
}

std::vector<double> mc_samples(const Predictor& e, const ProductModel& model, std::size_t trials,
                               std::uint64_t seed, unsigned threads) {
  if (model.power() != e.arity()) throw ArityError("product model power differs from predictor arity");
  if (!(model.space() == e.space())) throw DomainError("product model and predictor use different spaces");
  std::vector<double> out(trials);
  parallel_for(
      trials,
      [&](std::size_t i) {
        CounterRng rng(seed, 0x4d43, i);
        Sequence seq;
        model.sample(rng, seq);
        out[i] = e.eval(seq);
      },
      threads);
  return out;
}

MonteCarloEstimate mc_expectation(const Predictor& e, const ProductModel& model, std::size_t trials,
                                  std::uint64_t seed, unsigned threads) {
  if (trials < 2) throw DomainError("Monte Carlo needs at least two trials");
  const std::vector<double> xs = mc_samples(e, model, trials, seed, threads);
  MonteCarloEstimate est;
  est.trials = trials;
  est.mean = compensated_sum(xs) / double(trials);
  if (std::isinf(est.mean)) {
    est.standard_error = kInf;
    return est;
  }
  CompensatedSum sq;
  for (double x : xs) sq.add((x - est.mean) * (x - est.mean));
  est.standard_error = std::sqrt(sq.value() / double(trials - 1) / double(trials));
  return est;
}

MarkovReport markov_guarantee(std::span<const double> samples, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in (0,1)");
  MarkovReport r;
  r.epsilon = epsilon;
  r.samples = samples.size();
  if (samples.empty()) return r;
  const double threshold = 1.0 / epsilon;
  std::size_t hits = 0;
  for (double g : samples)
    if (g >= threshold) ++hits;
  r.frequency = double(hits) / double(samples.size());
  r.standard_error = std::sqrt(epsilon * (1.0 - epsilon) / double(samples.size()));
  r.within_bound = r.frequency <= epsilon + 3.0 * r.standard_error;
  return r;
}

}  // namespace univconf
