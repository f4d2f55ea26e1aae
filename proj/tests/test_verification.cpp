#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "univconf/calibration.hpp"
#include "univconf/constructions.hpp"
#include "univconf/generators.hpp"
#include "univconf/operators.hpp"

using namespace univconf;

namespace {

SpacePtr ab_space() { return ExampleSpace::labels_only({"a", "b"}); }

// Fully invariant binary predictor given by its value per count of label 1.
Predictor count_predictor(const std::vector<double>& v) {
  const std::size_t n = v.size() - 2;
  EvalFn f = [v](SequenceView s) {
    std::size_t k = 0;
    for (const auto& z : s) k += z.label;
    return v[k];
  };
  return Predictor(binary_space(), n, Flavor::e, {true, true, true}, f, "count");
}

}  // namespace

TEST_CASE("exchangeability e examples") {
  const Predictor e = make_table_predictor(ab_space(), 1, Flavor::e, {}, {1.0, 0.0, 3.0, 1.0});
  // Only the (a,b)/(b,a) orbit sits at 1.5.
  const Predictor bad = make_table_predictor(ab_space(), 1, Flavor::e, {}, {0.0, 0.0, 3.0, 0.0});
  const Certificate c = certify_exchangeability_e(bad);
  CHECK(c.verdict == Verdict::fail);
  CHECK(c.worst_value == doctest::Approx(1.5));
  REQUIRE(c.witness);
  REQUIRE(c.witness->sequence);
  CHECK(bad(*c.witness->sequence) + bad(Sequence{c.witness->sequence->at(1), c.witness->sequence->at(0)}) == 3.0);
  CHECK(certify_exchangeability_e(constant_predictor(ab_space(), 3, Flavor::e, 1.0)).verdict == Verdict::pass_exact);
  CHECK_FALSE(certify_exchangeability_e(e).passed());
  CHECK(certify_exchangeability_e(relative_deviation(e).predictor).passed());
}

TEST_CASE("exchangeability e agrees with the brute-force oracle on 200 tables") {
  CounterRng rng(31);
  int passes = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + t % 4;
    const SpacePtr space = t % 3 == 0 ? ExampleSpace::numbered_labels(3)
                                      : std::make_shared<const ExampleSpace>(std::vector<std::string>{"u", "v"},
                                                                             std::vector<std::string>{"0", "1"});
    if (!tabulable(*space, n, 20000)) continue;
    // Mix admissible, scaled-down and raw tables so both verdicts occur.
    Predictor e = random_table(space, n, Flavor::e, rng, 0.3, 1.0);
    if (t % 4 == 1) e = tabulate(relative_deviation(e).predictor);
    if (t % 4 == 2) e = scale_predictor(tabulate(relative_deviation(e).predictor), 1.001);
    const bool expected = oracle::naive_exchangeability_e(e);
    const Certificate c = certify_exchangeability_e(e);
    CHECK(c.passed() == expected);
    if (!c.passed()) {
      REQUIRE(c.witness);
      CHECK(oracle::naive_all_mean(e, *c.witness->sequence) > 1.0);
    }
    passes += expected;
  }
  CHECK(passes > 20);
  CHECK(passes < 180);
}

TEST_CASE("randomness e examples") {
  const Certificate eq = certify_randomness_e(eq13_predictor(2));
  CHECK(eq.passed());
  CHECK(eq.worst_value == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(eq.method == CertMethod::one_dim_maximize);
  const Certificate lap = certify_randomness_e(laplace_predictor(2));
  CHECK(lap.passed());
  CHECK(lap.worst_value == doctest::Approx(1.0).epsilon(1e-9));
  CHECK((*lap.witness->distribution)[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
  const Theorem2Report r = theorem2_counterexample(9, 0.4);
  CHECK_FALSE(r.certificate.passed());
  CHECK(r.certificate.worst_value == doctest::Approx(0.4 * std::pow(10.0 / 9.0, 9)).epsilon(1e-9));
  CHECK((*r.certificate.witness->distribution)[0] == doctest::Approx(1.0));
}

TEST_CASE("randomness e against exhaustive expectation on small spaces") {
  CounterRng rng(32);
  const SpacePtr space = ExampleSpace::numbered_labels(3);
  for (int t = 0; t < 10; ++t) {
    const Predictor e = random_table(space, 2, Flavor::e, rng);
    const Certificate c = certify_randomness_e(e);
    REQUIRE(c.witness);
    // The witness value is what the certificate reports.
    CHECK(oracle::naive_expectation(e, *c.witness->distribution) == doctest::Approx(c.worst_value).epsilon(1e-9));
    // No vertex or uniform distribution beats it.
    for (std::size_t a = 0; a < 3; ++a) {
      std::vector<double> q(3, 0.0);
      q[a] = 1.0;
      CHECK(oracle::naive_expectation(e, q) <= c.worst_value + 1e-9);
    }
    CHECK(oracle::naive_expectation(e, {1 / 3.0, 1 / 3.0, 1 / 3.0}) <= c.worst_value + 1e-9);
  }
}

TEST_CASE("one-dimensional maximizer matches grid search on 50 instances") {
  CounterRng rng(33);
  const auto pair = std::make_shared<const ExampleSpace>(std::vector<std::string>{"u", "v"},
                                                         std::vector<std::string>{"0", "1"});
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 1 + t % 6;
    std::vector<double> v(n + 2);
    for (auto& x : v) x = rng.uniform() < 0.3 ? 0.0 : 3.0 * rng.uniform();
    const Predictor e = count_predictor(v);
    const Certificate c = certify_randomness_e(e);
    CHECK(c.method == CertMethod::one_dim_maximize);
    const auto [best, arg] = oracle::grid_maximize([&](double th) { return oracle::count_expectation(v, th); });
    CHECK(std::abs(c.worst_value - best) < 1e-6);
    if (n > 3) continue;
    // Same values over two objects without the label-only flag: the simplex
    // path over four examples must find the same optimum.
    EvalFn f = [v](SequenceView s) {
      std::size_t k = 0;
      for (const auto& z : s) k += z.label;
      return v[k];
    };
    const Predictor wide(pair, n, Flavor::e, {true, true, false}, f, "wide");
    const Certificate w = certify_randomness_e(wide);
    CHECK(w.method == CertMethod::simplex_grid);
    CHECK(std::abs(w.worst_value - best) < 1e-6);
  }
}

TEST_CASE("modular certificate pieces") {
  CHECK(modular_sum_probability(std::vector<double>{0.5, 0.5}, 7) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::abs(modular_sum_probability(std::vector<double>(5, 0.2), 2001) - 0.2) < 1e-12);
  const std::vector<double> q{0.1, 0.25, 0.3, 0.05, 0.3};
  CHECK(modular_sum_probability(q, 37) == doctest::Approx(oracle::residue_zero_probability(q, 37)).epsilon(1e-12));
  CHECK(modular_sum_probability(std::vector<double>{1.0, 0.0, 0.0}, 50) == doctest::Approx(1.0));
  CHECK(balance_probability_bound(std::vector<double>{1.0, 0.0, 0.0}, 60) == 0.0);
  const Certificate c = certify_randomness_e_modular({200, 3, 0.9});
  CHECK(c.passed());
  CHECK(c.method == CertMethod::roots_of_unity);
  CHECK(c.worst_value <= 1.0 + 1e-6);
}

TEST_CASE("exchangeability p examples") {
  const SpacePtr space = binary_space();
  CHECK_FALSE(certify_exchangeability_p(constant_predictor(space, 3, Flavor::p, 0.0)).passed());
  CHECK(certify_exchangeability_p(constant_predictor(space, 3, Flavor::p, 1.0)).passed());
  const Certificate half = certify_exchangeability_p(constant_predictor(space, 2, Flavor::p, 0.5));
  CHECK_FALSE(half.passed());
  CHECK(half.witness->alpha == doctest::Approx(0.5));
  const Scorer score = [](const Bag& bag, Example z) { return double(bag.count(z)); };
  for (std::size_t n = 1; n <= 5; ++n) {
    const Predictor conf = tabulate(conformal_p_from_scores(space, n, score, true));
    CHECK(certify_exchangeability_p(conf).verdict == Verdict::pass_exact);
  }
  CHECK(certify_randomness_p(tabulate(conformal_p_from_scores(space, 3, score, true))).passed());
  CHECK_FALSE(certify_randomness_p(constant_predictor(space, 2, Flavor::p, 0.5)).passed());
}

TEST_CASE("exchangeability p implies randomness p on 20 tables") {
  CounterRng rng(34);
  for (int t = 0; t < 20; ++t) {
    const Predictor e = random_train_invariant_table(binary_space(), 1 + t % 4, Flavor::e, rng);
    const Predictor p = tabulate(calibrate_predictor(Calibrator::e_to_p(), relative_deviation(e).predictor));
    REQUIRE(certify_exchangeability_p(p).passed());
    CHECK(certify_randomness_p(p).passed());
  }
}

TEST_CASE("test-conditional examples") {
  const SpacePtr space = ab_space();
  CHECK(certify_test_conditional(constant_predictor(space, 2, Flavor::e, 1.0)).passed());
  std::vector<double> v(8);
  for (std::uint64_t c = 0; c < 8; ++c) v[c] = sequence_from_code(*space, 3, c)[0].label == 0 ? 2.0 : 0.0;
  const Predictor g = make_table_predictor(space, 2, Flavor::e, {}, v);
  const Certificate c = certify_test_conditional(g);
  CHECK_FALSE(c.passed());
  CHECK(c.worst_value == doctest::Approx(2.0));
  REQUIRE(c.witness->sequence);
  CHECK((*c.witness->sequence)[0].label == 0);
  CHECK((*c.witness->sequence)[1].label == 0);
}

TEST_CASE("class inclusions on random tables") {
  CounterRng rng(35);
  const MarkovKernel flip = MarkovKernel::flip(binary_space());
  for (int t = 0; t < 10; ++t) {
    const Predictor e = random_table(binary_space(), 1 + t % 3, Flavor::e, rng);
    const Predictor g = tabulate(theorem5_G(e, flip));
    const bool tc = certify_test_conditional(g).passed();
    const bool ex = certify_exchangeability_e(g).passed();
    const bool rr = certify_randomness_e(g).passed();
    CHECK(tc);
    CHECK(ex);
    CHECK(rr);
    const Predictor x = tabulate(relative_deviation(e).predictor);
    CHECK(certify_exchangeability_e(x).passed());
    CHECK(certify_randomness_e(x).passed());
    const Predictor xt = tabulate(avg_train(x).predictor);
    CHECK(certify_exchangeability_e(xt).passed());
    const Predictor r = tabulate(normalize_randomness(e));
    REQUIRE(certify_randomness_e(r).passed());
    const Predictor ri = tabulate(avg_all(r).predictor);
    CHECK(ri.fully_invariant());
    CHECK(certify_randomness_e(ri).passed());
    CHECK(certify_invariant_randomness_e(ri).passed());
    CHECK(certify_randomness_e(tabulate(avg_train(r).predictor)).passed());
  }
}

TEST_CASE("Monte Carlo expectation") {
  const SpacePtr space = binary_space();
  const MonteCarloEstimate one =
      mc_expectation(constant_predictor(space, 3, Flavor::e, 1.0), ProductModel::bernoulli(space, 0.3, 4), 1000, 1);
  CHECK(one.mean == 1.0);
  CHECK(one.standard_error == 0.0);
  const std::size_t n = 6;
  const MonteCarloEstimate eq = mc_expectation(eq13_predictor(n), ProductModel::bernoulli(space, 1.0 / 7.0, n + 1), 100000, 2);
  CHECK(std::abs(eq.mean - 1.0) <= 3.0 * eq.standard_error);
  CHECK_FALSE(eq.violation());
  // Earlier draws do not depend on the number of trials.
  const auto a = mc_samples(eq13_predictor(n), ProductModel::bernoulli(space, 0.2, n + 1), 500, 9);
  const auto b = mc_samples(eq13_predictor(n), ProductModel::bernoulli(space, 0.2, n + 1), 800, 9);
  CHECK(std::equal(a.begin(), a.end(), b.begin()));
}

TEST_CASE("Markov report") {
  const std::vector<double> ones(100, 1.0);
  const MarkovReport r = markov_guarantee(ones, 0.1);
  CHECK(r.frequency == 0.0);
  CHECK(r.within_bound);
  const std::vector<double> tens(100, 10.0);
  CHECK_FALSE(markov_guarantee(tens, 0.1).within_bound);
  CHECK_THROWS_AS(markov_guarantee(ones, 1.0), DomainError);
}
