#include "univconf/constructions.hpp"

#include <algorithm>
#include <numbers>

#include "univconf/orbit.hpp"
#include "univconf/parallel.hpp"
#include "univconf/rng.hpp"

namespace univconf {

namespace {

constexpr double kPi = std::numbers::pi;

void require_e(const Predictor& e, const char* what) {
  if (e.flavor() != Flavor::e) throw FlavorError(std::string(what) + " needs an e-flavor predictor");
}

void require_p(const Predictor& p, const char* what) {
  if (p.flavor() != Flavor::p) throw FlavorError(std::string(what) + " needs a p-flavor predictor");
}

void require_same_space(const Predictor& e, const MarkovKernel& b) {
  if (!(e.space() == b.space())) throw DomainError("predictor and kernel use different spaces");
}

std::size_t count_label(SequenceView seq, std::uint32_t label, std::size_t upto) {
  std::size_t k = 0;
  for (std::size_t i = 0; i < upto; ++i)
    if (seq[i].label == label) ++k;
  return k;
}

SpacePtr or_binary(SpacePtr space) {
  if (!space) return binary_space();
  if (space->label_count() != 2) throw DomainError("binary construction needs two labels");
  return space;
}

// sum_y B(y | z_{n+1}) term(seq with test label y).
template <typename Term>
double integrate_test_label(const MarkovKernel& b, SequenceView seq, Term&& term) {
  Sequence s(seq.begin(), seq.end());
  const Example test = seq.back();
  const auto row = b.row(test);
  CompensatedSum sum;
  for (std::uint32_t y = 0; y < row.size(); ++y) {
    if (row[y] == 0.0) continue;
    s.back().label = y;
    const double t = term(SequenceView(s));
    if (t == 0.0) continue;
    sum.add(row[y] * t);
  }
  return sum.value();
}

Structure kernel_structure(const Predictor& e, const MarkovKernel& b, bool train_invariant) {
  return {train_invariant, false, e.label_only() && b.label_only()};
}

}  // namespace

void ExperimentConstants::validate() const {
  if (!(a > 0.0 && a < 1.0)) throw DomainError("a must lie in (0,1)");
  if (!(b > 1.0)) throw DomainError("b must exceed 1");
  if (!(c > 0.0)) throw DomainError("c must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
  for (double eps : {epsilon, epsilon1, epsilon2})
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("epsilon constants must lie in (0,1)");
  if (k < 1) throw DomainError("k must be a positive integer");
}

SpacePtr binary_space() { return ExampleSpace::labels_only({"0", "1"}); }

double eq13_value(std::size_t n) {
  return std::exp(-double(n) * std::log1p(-1.0 / double(n + 1)));
}

Predictor eq13_predictor(std::size_t n, SpacePtr space) {
  if (n < 1) throw DomainError("n must be at least 1");
  space = or_binary(std::move(space));
  const double v = eq13_value(n);
  EvalFn f = [v](SequenceView seq) { return count_label(seq, 1, seq.size()) == 1 ? v : 0.0; };
  LabelPolynomial hint;
  hint.terms.push_back({{static_cast<std::uint32_t>(n), 1u}, v * double(n + 1)});
  return Predictor(space, n, Flavor::e, {true, true, true}, std::move(f),
                   "eq13(n=" + std::to_string(n) + ")")
      .with_hint(hint);
}

Predictor laplace_predictor(std::size_t n, SpacePtr space) {
  if (n < 1) throw DomainError("n must be at least 1");
  space = or_binary(std::move(space));
  const double v = double(n + 1) * eq13_value(n);
  EvalFn f = [v](SequenceView seq) {
    if (seq.back().label != 1) return 0.0;
    return count_label(seq, 1, seq.size() - 1) == 0 ? v : 0.0;
  };
  LabelPolynomial hint;
  hint.terms.push_back({{static_cast<std::uint32_t>(n), 1u}, v});
  return Predictor(space, n, Flavor::e, {true, false, true}, std::move(f),
                   "laplace(n=" + std::to_string(n) + ")")
      .with_hint(hint);
}

Predictor theorem1_G(const Predictor& e, const MarkovKernel& b, double scale,
                     const OperatorOptions& options) {
  require_e(e, "theorem1_G");
  require_same_space(e, b);
  const Predictor ex = relative_deviation(e, options).predictor;
  const Predictor base = e;
  EvalFn f = [base, ex, b, scale](SequenceView seq) {
    return scale * integrate_test_label(b, seq, [&](SequenceView s) {
             return ratio_or(base.eval(s), ex.eval(s), 0.0);
           });
  };
  return Predictor(e.space_ptr(), e.n(), Flavor::e, kernel_structure(e, b, e.train_invariant()),
                   std::move(f), "G1(" + e.name() + ")");
}

double exactly_one_resample_probability(std::size_t n) {
  return std::exp(double(n) * std::log(double(n) / double(n + 1)));
}

ProofParts theorem1_proof_parts(const Predictor& e, const MarkovKernel& b,
                                const OperatorOptions& options, std::uint64_t pattern_cap,
                                std::size_t mc_trials, std::uint64_t seed) {
  require_e(e, "theorem1_proof_parts");
  require_same_space(e, b);
  Predictor ei = avg_all(e, options).predictor;
  if (tabulable(e.space(), e.n(), options.memo_cap)) ei = tabulate(ei, options.memo_cap);
  const std::size_t len = e.arity();
  const Structure inv{true, true, e.label_only() && b.label_only()};

  EvalFn g1 = [ei, b, len](SequenceView seq) {
    Sequence s(seq.begin(), seq.end());
    CompensatedSum sum;
    for (std::size_t i = 0; i < len; ++i) {
      const auto row = b.row(seq[i]);
      for (std::uint32_t y = 0; y < row.size(); ++y) {
        if (row[y] == 0.0) continue;
        s[i].label = y;
        sum.add(row[y] * ei.eval(s));
      }
      s[i] = seq[i];
    }
    return sum.value() / double(len);
  };

  // Per-position label distribution after resampling with probability 1/(n+1).
  auto position_law = [b, len](Example z) {
    const auto row = b.row(z);
    std::vector<double> law(row.size());
    const double r = 1.0 / double(len);
    for (std::size_t y = 0; y < row.size(); ++y) law[y] = r * row[y];
    law[z.label] += 1.0 - r;
    return law;
  };

  std::uint64_t patterns = 1;
  for (std::size_t i = 0; i < len; ++i) {
    std::uint64_t support = 0;
    // Worst case over examples of the number of reachable labels.
    for (std::size_t zi = 0; zi < e.space().size(); ++zi) {
      const auto law = position_law(e.space().example_at(zi));
      support = std::max<std::uint64_t>(
          support, std::count_if(law.begin(), law.end(), [](double p) { return p > 0.0; }));
    }
    patterns = saturating_mul(patterns, support);
  }

  ProofParts parts{Predictor(e.space_ptr(), e.n(), Flavor::e, inv, g1, "G1(" + e.name() + ")"),
                   Predictor(e.space_ptr(), e.n(), Flavor::e, inv, g1, ""),
                   Predictor(e.space_ptr(), e.n(), Flavor::e, inv, g1, ""), true};

  EvalFn g2;
  if (patterns <= pattern_cap) {
    g2 = [ei, position_law, len](SequenceView seq) {
      std::vector<std::vector<double>> laws(len);
      for (std::size_t i = 0; i < len; ++i) laws[i] = position_law(seq[i]);
      Sequence s(seq.begin(), seq.end());
      CompensatedSum sum;
      std::function<void(std::size_t, double)> rec = [&](std::size_t i, double w) {
        if (i == len) {
          sum.add(w * ei.eval(s));
          return;
        }
        for (std::uint32_t y = 0; y < laws[i].size(); ++y) {
          if (laws[i][y] == 0.0) continue;
          s[i].label = y;
          rec(i + 1, w * laws[i][y]);
        }
        s[i] = seq[i];
      };
      rec(0, 1.0);
      return sum.value();
    };
  } else {
    parts.g2_exact = false;
    const SpacePtr space = e.space_ptr();
    g2 = [ei, position_law, len, mc_trials, seed, space](SequenceView seq) {
      std::vector<std::vector<double>> cdfs(len);
      for (std::size_t i = 0; i < len; ++i) {
        auto law = position_law(seq[i]);
        for (std::size_t y = 1; y < law.size(); ++y) law[y] += law[y - 1];
        cdfs[i] = std::move(law);
      }
      // Seeded by the sequence so the estimate is a deterministic function.
      const std::uint64_t key = derive_seed(seed, 0x4732, sequence_code(*space, seq));
      Sequence s(seq.begin(), seq.end());
      CompensatedSum sum;
      for (std::size_t t = 0; t < mc_trials; ++t) {
        CounterRng rng(key, 0, t);
        for (std::size_t i = 0; i < len; ++i) {
          const double u = rng.uniform() * cdfs[i].back();
          const auto it = std::upper_bound(cdfs[i].begin(), cdfs[i].end(), u);
          s[i].label = static_cast<std::uint32_t>(std::min<std::size_t>(it - cdfs[i].begin(), cdfs[i].size() - 1));
        }
        sum.add(ei.eval(s));
      }
      return sum.value() / double(mc_trials);
    };
  }
  parts.g2 = Predictor(e.space_ptr(), e.n(), Flavor::e, inv, std::move(g2), "G2(" + e.name() + ")");

  const Predictor g1p = parts.g1;
  EvalFn g3 = [ei, b, g1p](SequenceView seq) {
    const double num = integrate_test_label(b, seq, [&](SequenceView s) { return ei.eval(s); });
    return ratio_or(num, g1p.eval(seq), 0.0);
  };
  parts.g3 = Predictor(e.space_ptr(), e.n(), Flavor::e, kernel_structure(e, b, true), std::move(g3),
                       "G3(" + e.name() + ")");
  return parts;
}

Theorem2Report theorem2_counterexample(std::size_t n, double c, const SearchConfig& cfg) {
  if (n < 1) throw DomainError("n must be at least 1");
  const SpacePtr space = binary_space();
  const Predictor e = eq13_predictor(n, space);
  // Keep the constant-scaled G as a table so certification is cheap.
  Predictor g = tabulate(theorem1_G(e, MarkovKernel::flip(space), c));
  Theorem2Report r;
  r.n = n;
  r.c = c;
  const Sequence zeros(n + 1, Example{0, 0});
  r.value_at_zero = g(zeros);
  r.closed_form = c * eq13_value(n);
  r.certificate = certify_randomness_e(g, cfg);
  return r;
}

PPair corollary1_G(const Predictor& p, const MarkovKernel& b, double delta,
                   const OperatorOptions& options) {
  require_p(p, "corollary1_G");
  require_same_space(p, b);
  const Predictor e = calibrate_predictor(Calibrator::power(delta), p);
  const Predictor ex = relative_deviation(e, options).predictor;
  const Predictor p_prime =
      calibrate_predictor(Calibrator::e_to_p(), ex).with_name("P'(" + p.name() + ")");
  const Predictor base = p;
  EvalFn f = [base, p_prime, b, delta](SequenceView seq) {
    return delta / kE * integrate_test_label(b, seq, [&](SequenceView s) {
             return ratio_or(p_prime.eval(s), std::pow(base.eval(s), 1.0 - delta), 0.0);
           });
  };
  Predictor g(p.space_ptr(), p.n(), Flavor::e, kernel_structure(p, b, p.train_invariant()),
              std::move(f), "Gcor1(" + p.name() + ")");
  return {p_prime, g};
}

std::string to_string(MulticlassVariant v) {
  switch (v) {
    case MulticlassVariant::exclude_true: return "exclude_true";
    case MulticlassVariant::crude: return "crude";
    case MulticlassVariant::uniform_all: return "uniform_all";
  }
  return "?";
}

MulticlassVariant parse_multiclass_variant(const std::string& s) {
  for (auto v : {MulticlassVariant::exclude_true, MulticlassVariant::crude, MulticlassVariant::uniform_all})
    if (s == to_string(v)) return v;
  throw DomainError("unknown multiclass variant '" + s + "'");
}

Predictor multiclass_G(const Predictor& e, MulticlassVariant variant, const OperatorOptions& options) {
  require_e(e, "multiclass_G");
  const std::size_t labels = e.space().label_count();
  const Predictor ex = relative_deviation(e, options).predictor;
  const Predictor base = e;
  EvalFn f = [base, ex, variant, labels](SequenceView seq) {
    Sequence s(seq.begin(), seq.end());
    const std::uint32_t truth = seq.back().label;
    CompensatedSum sum;
    double top = 0.0;
    for (std::uint32_t y = 0; y < labels; ++y) {
      if (y == truth && variant != MulticlassVariant::uniform_all) continue;
      s.back().label = y;
      const double r = ratio_or(base.eval(s), ex.eval(s), 0.0);
      sum.add(r);
      top = std::max(top, r);
    }
    switch (variant) {
      case MulticlassVariant::exclude_true: return sum.value() / (kE * double(labels - 1));
      case MulticlassVariant::crude: return top / (kE * double(labels - 1));
      case MulticlassVariant::uniform_all: return sum.value() / (kE * double(labels));
    }
    return 0.0;
  };
  return Predictor(e.space_ptr(), e.n(), Flavor::e,
                   {e.train_invariant(), false, e.label_only()}, std::move(f),
                   "multiclass-" + to_string(variant) + "(" + e.name() + ")");
}

SpacePtr theorem3_space(int k) {
  if (k < 1) throw DomainError("k must be positive");
  std::vector<std::string> labels = {"0'", "1'"};
  for (int y = -k; y <= k; ++y) labels.push_back(std::to_string(y));
  return ExampleSpace::labels_only(std::move(labels));
}

int theorem3_label_value(std::uint32_t label, int k) {
  if (label < 2) return static_cast<int>(label);
  return static_cast<int>(label) - 2 - k;
}

bool theorem3_is_primed(std::uint32_t label) { return label < 2; }

double theorem3_value(std::size_t n, double a) {
  return a * kE * std::sqrt(kPi / 2.0) * std::pow(double(n), 1.5);
}

Predictor theorem3_E(std::size_t n, int k, double a) {
  if (n % 2 != 0) throw DomainError("theorem3_E needs even n");
  if (k < 2 || double(n) < 16.0 * k * k) throw DomainError("theorem3_E needs k >= 2 and n >= 16 k^2");
  if (!(a > 0.0 && a < 1.0)) throw DomainError("a must lie in (0,1)");
  const SpacePtr space = theorem3_space(k);
  const double v = theorem3_value(n, a);
  EvalFn f = [v, k, n](SequenceView seq) {
    const std::uint32_t test = seq.back().label;
    if (theorem3_is_primed(test)) return 0.0;
    long long sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!theorem3_is_primed(seq[i].label)) return 0.0;
      sum += seq[i].label;
    }
    return sum - static_cast<long long>(n / 2) == theorem3_label_value(test, k) ? v : 0.0;
  };
  LabelPolynomial hint;
  const std::size_t labels = space->label_count();
  for (int y = -k; y <= k; ++y) {
    std::vector<std::uint32_t> counts(labels, 0);
    counts[0] = static_cast<std::uint32_t>(static_cast<long long>(n / 2) - y);
    counts[1] = static_cast<std::uint32_t>(static_cast<long long>(n / 2) + y);
    counts[static_cast<std::size_t>(2 + y + k)] = 1;
    hint.terms.push_back({counts, v * binomial_coefficient(unsigned(n), unsigned(n / 2 + y))});
  }
  return Predictor(space, n, Flavor::e, {true, false, true}, std::move(f),
                   "thm3E(n=" + std::to_string(n) + ",k=" + std::to_string(k) + ")")
      .with_hint(hint);
}

Theorem3Chain theorem3_chain(std::size_t n, int k, double a, double b, double c) {
  Theorem3Chain r;
  const double nd = double(n);
  const double labels = 2.0 * k + 3.0;
  r.value = theorem3_value(n, a);
  r.ratio_bound = b * std::sqrt(kPi * nd) * (nd + 1.0) /
                  (2.0 * std::sqrt(2.0) * k * a * kE * std::sqrt(kPi / 2.0) * std::pow(nd, 1.5));
  r.target = c / (kE * labels);
  r.holds = r.ratio_bound < r.target;
  r.c_threshold = r.ratio_bound * kE * labels;
  CompensatedSum p;
  for (int y = -k; y <= k; ++y) p.add(binomial_pmf(unsigned(n), unsigned(n / 2 + y), 0.5));
  r.condition_probability = p.value();
  r.exact_ratio_bound = (nd + 1.0) / (r.condition_probability * r.value);
  r.exact_holds = r.exact_ratio_bound < r.target;
  return r;
}

SimplexMaximum theorem3_profile_maximum(std::size_t n, int k, double a, const SearchConfig& cfg) {
  const double v = theorem3_value(n, a);
  const double s = 1.0 / double(n + 1);
  const double test_mass = s * std::pow(1.0 - s, double(n));
  SimplexMaximum best;
  best.method = CertMethod::one_dim_maximize;
  best.resolution = cfg.golden_tolerance;
  best.value = -kInf;
  for (int y = -k; y <= k; ++y) {
    const unsigned ones = unsigned(long(n / 2) + y);
    auto profile = [&](double theta) { return v * test_mass * binomial_pmf(unsigned(n), ones, theta); };
    const double theta = golden_section_maximize(profile, 0.0, 1.0, cfg.golden_tolerance);
    const double val = profile(theta);
    best.evaluations += 1;
    if (val > best.value) {
      best.value = val;
      const std::size_t labels = 2 * std::size_t(k) + 3;
      best.argmax.assign(labels, 0.0);
      best.argmax[0] = (1.0 - s) * (1.0 - theta);
      best.argmax[1] = (1.0 - s) * theta;
      best.argmax[std::size_t(2 + y + k)] = s;
    }
  }
  return best;
}

Predictor theorem4_E(std::size_t n, std::size_t m, double c) {
  if (m < 2) throw DomainError("theorem4_E needs m >= 2");
  if (!(c > 0.0)) throw DomainError("c must be positive");
  const SpacePtr space = ExampleSpace::numbered_labels(m);
  const double centre = double(n) / double(m);
  EvalFn f = [m, c, centre](SequenceView seq) {
    std::vector<std::size_t> counts(m, 0);
    std::size_t sum = 0;
    for (const auto& z : seq) {
      ++counts[z.label];
      sum += z.label;
    }
    if (sum % m != 0) return 0.0;
    for (auto k : counts)
      if (std::abs(double(k) - centre) > 0.1 * centre + 1e-12) return 0.0;
    return c * double(m);
  };
  return Predictor(space, n, Flavor::e, {true, true, true}, std::move(f),
                   "thm4E(n=" + std::to_string(n) + ",m=" + std::to_string(m) + ")");
}

Predictor rare_label_E(std::size_t n, std::size_t m) {
  const SpacePtr space = ExampleSpace::numbered_labels(m);
  EvalFn f = [n, m](SequenceView seq) {
    const std::size_t k = count_label(seq, seq.back().label, seq.size() - 1);
    return double(n + 1) / (double(m) * double(k + 1));
  };
  TestCountProfile hint;
  hint.values.assign(m, std::vector<double>(n + 1));
  for (std::size_t y = 0; y < m; ++y)
    for (std::size_t k = 0; k <= n; ++k) hint.values[y][k] = double(n + 1) / (double(m) * double(k + 1));
  return Predictor(space, n, Flavor::e, {true, false, true}, std::move(f),
                   "rare-label(n=" + std::to_string(n) + ")")
      .with_hint(hint);
}

Predictor rare_label_EX(std::size_t n, std::size_t m) {
  const SpacePtr space = ExampleSpace::numbered_labels(m);
  EvalFn f = [n, m](SequenceView seq) {
    std::vector<std::size_t> counts(m, 0);
    for (const auto& z : seq) ++counts[z.label];
    const auto distinct = std::count_if(counts.begin(), counts.end(), [](auto k) { return k > 0; });
    return double(n + 1) / (double(counts[seq.back().label]) * double(distinct));
  };
  return Predictor(space, n, Flavor::e, {true, false, true}, std::move(f),
                   "rare-label^X(n=" + std::to_string(n) + ")");
}

Theorem4Events theorem4_events(std::size_t n, std::size_t m, double c, std::size_t trials,
                               std::uint64_t seed, const Predictor* g, const Predictor* e_prime,
                               unsigned threads) {
  if (trials < 1) throw DomainError("trials must be at least 1");
  const Predictor e = theorem4_E(n, m, c);
  for (const Predictor* p : {g, e_prime})
    if (p && (p->n() != n || p->space().label_count() != m))
      throw DomainError("theorem4_events predictors must share n and the label space");
  std::vector<unsigned char> sum_zero(trials), e_hit(trials), g_hit(trials), ep_hit(trials);
  const double threshold = c * double(m) * (1.0 - 1e-12);
  parallel_for(
      trials,
      [&](std::size_t t) {
        CounterRng rng(seed, 0x5434, t);
        Sequence iid(n + 1);
        for (auto& z : iid) z = Example{0, static_cast<std::uint32_t>(rng.below(m))};
        Sequence constructed(iid.begin(), iid.end());
        std::size_t s = 0;
        for (std::size_t i = 0; i < n; ++i) s += iid[i].label;
        constructed.back().label = static_cast<std::uint32_t>((m - s % m) % m);
        std::size_t total = s + constructed.back().label;
        sum_zero[t] = total % m == 0;
        e_hit[t] = e.eval(constructed) >= threshold;
        if (g) g_hit[t] = g->eval(iid) <= 2.0;
        if (e_prime) ep_hit[t] = e_prime->eval(constructed) <= 2.01;
      },
      threads);
  auto freq = [&](const std::vector<unsigned char>& v) {
    std::size_t k = 0;
    for (auto x : v) k += x;
    return double(k) / double(trials);
  };
  auto se = [&](double f) { return std::sqrt(std::max(f * (1.0 - f), 0.0) / double(trials)); };
  Theorem4Events r;
  r.n = n;
  r.m = m;
  r.c = c;
  r.trials = trials;
  r.sum_zero_frequency = freq(sum_zero);
  r.e_frequency = freq(e_hit);
  r.e_standard_error = se(r.e_frequency);
  if (g) {
    r.g_frequency = freq(g_hit);
    r.g_standard_error = se(*r.g_frequency);
  }
  if (e_prime) {
    r.eprime_frequency = freq(ep_hit);
    r.eprime_standard_error = se(*r.eprime_frequency);
  }
  return r;
}

Predictor theorem5_G(const Predictor& e, const MarkovKernel& b, const OperatorOptions& options) {
  require_e(e, "theorem5_G");
  require_same_space(e, b);
  const Predictor et = avg_train(e, options).predictor;
  const Predictor base = e;
  EvalFn f = [base, et, b](SequenceView seq) {
    return integrate_test_label(b, seq, [&](SequenceView s) { return ratio_or(base.eval(s), et.eval(s), 0.0); });
  };
  return Predictor(e.space_ptr(), e.n(), Flavor::e, kernel_structure(e, b, e.train_invariant()),
                   std::move(f), "Gthm5(" + e.name() + ")");
}

Predictor corollary2_G(const Predictor& e, const MarkovKernel& b, const OperatorOptions& options) {
  require_e(e, "corollary2_G");
  require_same_space(e, b);
  const Predictor etx = conformalize(e, options).predictor;
  const Predictor base = e;
  EvalFn f = [base, etx, b](SequenceView seq) {
    return std::exp(-0.5) * integrate_test_label(b, seq, [&](SequenceView s) {
             return std::sqrt(ratio_or(base.eval(s), etx.eval(s), 0.0));
           });
  };
  return Predictor(e.space_ptr(), e.n(), Flavor::e, kernel_structure(e, b, e.train_invariant()),
                   std::move(f), "Gcor2(" + e.name() + ")");
}

Predictor corollary2_bound(const Predictor& e, const MarkovKernel& b, const OperatorOptions& options) {
  require_e(e, "corollary2_bound");
  require_same_space(e, b);
  const Predictor ex = relative_deviation(e, options).predictor;
  const Predictor etx = conformalize(e, options).predictor;
  const Predictor base = e;
  EvalFn f = [base, ex, etx, b](SequenceView seq) {
    const double g1 = integrate_test_label(b, seq, [&](SequenceView s) {
                        return ratio_or(base.eval(s), ex.eval(s), 0.0);
                      }) / kE;
    const double g2 = integrate_test_label(b, seq, [&](SequenceView s) {
      return ratio_or(ex.eval(s), etx.eval(s), 0.0);
    });
    return 0.5 * (g1 + g2);
  };
  return Predictor(e.space_ptr(), e.n(), Flavor::e, kernel_structure(e, b, e.train_invariant()),
                   std::move(f), "Gcor2bound(" + e.name() + ")");
}

PPair corollary3_G(const Predictor& p, const MarkovKernel& b, double delta,
                   const OperatorOptions& options) {
  require_p(p, "corollary3_G");
  require_same_space(p, b);
  const Predictor e = calibrate_predictor(Calibrator::power(delta), p);
  const Predictor etx = conformalize(e, options).predictor;
  const Predictor p_prime =
      calibrate_predictor(Calibrator::e_to_p(), etx).with_name("P'tx(" + p.name() + ")");
  const Predictor base = p;
  EvalFn f = [base, p_prime, b, delta](SequenceView seq) {
    return std::sqrt(delta / kE) * integrate_test_label(b, seq, [&](SequenceView s) {
             return std::sqrt(ratio_or(p_prime.eval(s), std::pow(base.eval(s), 1.0 - delta), 0.0));
           });
  };
  Predictor g(p.space_ptr(), p.n(), Flavor::e, kernel_structure(p, b, p.train_invariant()),
              std::move(f), "Gcor3(" + p.name() + ")");
  return {p_prime, g};
}

Predictor conformal_p_from_scores(SpacePtr space, std::size_t n, Scorer score, bool label_only,
                                  std::string name) {
  EvalFn f = [score](SequenceView seq) {
    const Bag bag(seq);
    const double test = score(bag, seq.back());
    std::size_t at_least = 0;
    for (const auto& z : seq)
      if (score(bag, z) >= test) ++at_least;
    return double(at_least) / double(seq.size());
  };
  return Predictor(std::move(space), n, Flavor::p, {true, false, label_only}, std::move(f),
                   std::move(name));
}

Scorer remark1_scorer(const Predictor& p) {
  require_p(p, "remark1_scorer");
  if (!p.train_invariant()) throw DomainError("remark1_scorer needs a train-invariant predictor");
  return [p](const Bag& bag, Example z) {
    Sequence seq = bag.without(z).arrangement();
    seq.push_back(z);
    const double v = p.eval(seq);
    return v == 0.0 ? kInf : 1.0 / v;
  };
}

}  // namespace univconf
