#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "univconf/constructions.hpp"
#include "univconf/generators.hpp"
#include "univconf/operators.hpp"

using namespace univconf;

namespace {

Sequence labels(std::vector<std::uint32_t> y) { return label_sequence(y); }

double max_gap(const Predictor& a, const Predictor& b) {
  double g = 0.0;
  for_each_sequence(a.space(), a.arity(), [&](SequenceView s) { g = std::max(g, std::abs(a.eval(s) - b.eval(s))); });
  return g;
}

}  // namespace

TEST_CASE("eq13 and Laplace values") {
  CHECK(eq13_value(2) == doctest::Approx(2.25));
  CHECK(eq13_predictor(2)(labels({0, 1, 0})) == doctest::Approx(2.25));
  CHECK(eq13_predictor(2)(labels({1, 1, 0})) == 0.0);
  CHECK(laplace_predictor(2)(labels({0, 0, 1})) == doctest::Approx(6.75));
  CHECK(laplace_predictor(2)(labels({0, 1, 0})) == 0.0);
  CHECK(check_structure(laplace_predictor(4)).train_invariant);
  CHECK_FALSE(check_structure(laplace_predictor(4)).fully_invariant);
}

TEST_CASE("theorem 1 G examples") {
  const SpacePtr space = binary_space();
  const MarkovKernel flip = MarkovKernel::flip(space);
  // E/E^X = E^i, so a constant c gives G = c/e.
  for (double c : {1.0, 2.0}) {
    const Predictor g = theorem1_G(constant_predictor(space, 3, Flavor::e, c).with_structure({true, true, true}), flip);
    for_each_sequence(*space, 4, [&](SequenceView s) { CHECK(g.eval(s) == doctest::Approx(c / kE)); });
  }
  for (std::size_t n : {1, 3, 7}) {
    const Predictor lg = theorem1_G(laplace_predictor(n), flip);
    const double v = lg(labels(std::vector<std::uint32_t>(n + 1, 0)));
    CHECK(v == doctest::Approx(std::pow(1.0 + 1.0 / double(n), double(n)) / kE));
    CHECK(v < 1.0);
  }
}

TEST_CASE("proof parts") {
  CHECK(exactly_one_resample_probability(1) == doctest::Approx(0.5));
  for (std::size_t n = 1; n <= 50; ++n) CHECK(exactly_one_resample_probability(n) >= 1.0 / kE);
  const SpacePtr space = binary_space();
  const MarkovKernel flip = MarkovKernel::flip(space);
  const Predictor c = constant_predictor(space, 3, Flavor::e, 0.7).with_structure({true, true, true});
  const ProofParts parts = theorem1_proof_parts(c, flip);
  CHECK(parts.g2_exact);
  for_each_sequence(*space, 4, [&](SequenceView s) {
    CHECK(parts.g1.eval(s) == doctest::Approx(0.7));
    CHECK(parts.g2.eval(s) == doctest::Approx(0.7));
  });
}

TEST_CASE("theorem 2 closed form") {
  const Theorem2Report r = theorem2_counterexample(2, 1.0 / kE);
  CHECK(r.value_at_zero == doctest::Approx(2.25 / kE));
  CHECK(r.certificate.passed());
  CHECK(theorem2_counterexample(9, 0.4).value_at_zero == doctest::Approx(0.4 * std::pow(10.0 / 9.0, 9)));
}

TEST_CASE("corollary 1 on constant input") {
  const SpacePtr space = binary_space();
  const MarkovKernel flip = MarkovKernel::flip(space);
  const PPair pair = corollary1_G(constant_predictor(space, 3, Flavor::p, 1.0), flip, 0.5);
  for_each_sequence(*space, 4, [&](SequenceView s) {
    CHECK(pair.p_prime.eval(s) == doctest::Approx(1.0));
    CHECK(pair.g.eval(s) == doctest::Approx(0.5 / kE));
  });
  CHECK_THROWS_AS(corollary1_G(constant_predictor(space, 3, Flavor::e, 1.0), flip, 0.5), FlavorError);
}

TEST_CASE("multiclass variants") {
  CounterRng rng(41);
  const SpacePtr bin = binary_space();
  const Predictor e = random_table(bin, 3, Flavor::e, rng);
  CHECK(max_gap(tabulate(multiclass_G(e, MulticlassVariant::exclude_true)),
                tabulate(theorem1_G(e, MarkovKernel::flip(bin)))) < 1e-12);
  const SpacePtr tri = ExampleSpace::numbered_labels(3);
  const Predictor c = constant_predictor(tri, 2, Flavor::e, 1.0).with_structure({true, true, true});
  for (auto v : {MulticlassVariant::exclude_true, MulticlassVariant::uniform_all}) {
    const Predictor g = multiclass_G(c, v);
    for_each_sequence(*tri, 3, [&](SequenceView s) { CHECK(g.eval(s) == doctest::Approx(1.0 / kE)); });
  }
  const Predictor r = random_table(tri, 2, Flavor::e, rng);
  const Predictor crude = tabulate(multiclass_G(r, MulticlassVariant::crude));
  const Predictor fine = tabulate(multiclass_G(r, MulticlassVariant::exclude_true));
  // The max over false labels is dominated by their sum, so it is an e-variable too.
  for_each_sequence(*tri, 3, [&](SequenceView s) { CHECK(crude.eval(s) <= fine.eval(s) + 1e-12); });
  CHECK(certify_randomness_e(crude).passed());
  CHECK(parse_multiclass_variant(to_string(MulticlassVariant::crude)) == MulticlassVariant::crude);
}

TEST_CASE("theorem 3 encoder") {
  CHECK(theorem3_value(4, 0.99) == doctest::Approx(0.99 * kE * std::sqrt(std::numbers::pi / 2.0) * 8.0));
  const int k = 2;
  const std::size_t n = 64;
  const Predictor e = theorem3_E(n, k, 0.99);
  CHECK(e.space().label_count() == 2 * k + 3);
  // Labels: 0' -> 0, 1' -> 1, then -k..k at 2..2k+2.
  std::vector<std::uint32_t> y(n + 1);
  for (std::size_t i = 0; i < n; ++i) y[i] = i % 2;
  y[n] = 2 + k;  // test label 0
  CHECK(e(labels(y)) == doctest::Approx(theorem3_value(n, 0.99)));
  y[0] = 1;  // sum - n/2 = 1
  CHECK(e(labels(y)) == 0.0);
  y[n] = 2 + k + 1;
  CHECK(e(labels(y)) == doctest::Approx(theorem3_value(n, 0.99)));
  y[n] = 0;  // primed test label
  CHECK(e(labels(y)) == 0.0);
  y[n] = 2 + k + 1;
  y[3] = 2;  // training label from {-k..k}
  CHECK(e(labels(y)) == 0.0);
  CHECK_THROWS_AS(theorem3_E(63, k, 0.99), DomainError);
  CHECK_THROWS_AS(theorem3_E(32, k, 0.99), DomainError);
  CHECK(theorem3_label_value(2, k) == -k);
  CHECK(theorem3_label_value(1, k) == 1);
  CHECK(theorem3_is_primed(0));
}

TEST_CASE("theorem 3 chain arithmetic") {
  const Theorem3Chain c = theorem3_chain(64, 2, 0.99, 1.01, 2.0);
  const double bound = 1.01 * std::sqrt(std::numbers::pi * 64) * 65 / (2 * std::sqrt(2.0) * 2 * theorem3_value(64, 0.99));
  CHECK(c.ratio_bound == doctest::Approx(bound));
  CHECK(c.target == doctest::Approx(2.0 / (kE * 7)));
  CHECK(c.holds == (bound < c.target));
  CHECK(c.c_threshold == doctest::Approx(bound * kE * 7));
  double p = 0.0;
  for (int y = -2; y <= 2; ++y) p += oracle::binom(64, unsigned(32 + y)) * std::pow(0.5, 64);
  CHECK(c.condition_probability == doctest::Approx(p));
}

TEST_CASE("theorem 4 predictor") {
  const Predictor e = theorem4_E(19, 2, 0.9);
  std::vector<std::uint32_t> y(20, 0);
  for (int i = 0; i < 10; ++i) y[i] = 1;
  CHECK(e(labels(y)) == doctest::Approx(1.8));
  CHECK(theorem4_E(3, 2, 0.9)(labels({0, 1, 1, 0})) == 0.0);
  CHECK(theorem4_E(40, 3, 0.9)(labels(std::vector<std::uint32_t>(41, 0))) == 0.0);
  const Theorem4Events ev = theorem4_events(200, 3, 0.9, 500, 3);
  CHECK(ev.sum_zero_frequency == 1.0);
  CHECK_FALSE(ev.g_frequency);
  const Predictor one = constant_predictor(ExampleSpace::numbered_labels(3), 200, Flavor::e, 1.0);
  CHECK(*theorem4_events(200, 3, 0.9, 200, 3, &one).g_frequency == 1.0);
}

TEST_CASE("rare-label predictor expectation") {
  const std::size_t n = 5, m = 3;
  const Predictor e = rare_label_E(n, m);
  const std::vector<double> q{0.2, 0.5, 0.3};
  double closed = 0.0;
  for (double qy : q) closed += (1.0 - std::pow(1.0 - qy, double(n + 1))) / double(m);
  CHECK(oracle::naive_expectation(e, q) == doctest::Approx(closed).epsilon(1e-12));
}

TEST_CASE("appendix B constructions") {
  const SpacePtr space = binary_space();
  const MarkovKernel flip = MarkovKernel::flip(space);
  CounterRng rng(42);
  const Predictor ti = random_train_invariant_table(space, 3, Flavor::e, rng, 0.0);
  const Predictor g5 = theorem5_G(ti, flip);
  for_each_sequence(*space, 4, [&](SequenceView s) { CHECK(g5.eval(s) == doctest::Approx(1.0)); });
  const Predictor z = theorem5_G(constant_predictor(space, 2, Flavor::e, 0.0), flip);
  for_each_sequence(*space, 3, [&](SequenceView s) { CHECK(z.eval(s) == 0.0); });
  const Predictor e = random_table(space, 2, Flavor::e, rng, 0.0);
  const Predictor g = tabulate(theorem5_G(e, flip));
  for_each_sequence(*space, 3, [&](SequenceView s) {
    CHECK(oracle::naive_train_mean(g, Sequence(s.begin(), s.end())) == doctest::Approx(1.0).epsilon(1e-12));
  });
  const Predictor c2 = corollary2_G(constant_predictor(space, 3, Flavor::e, 1.0), flip);
  for_each_sequence(*space, 4, [&](SequenceView s) { CHECK(std::abs(c2.eval(s) - std::exp(-0.5)) < 1e-12); });
  const PPair c3 = corollary3_G(constant_predictor(space, 3, Flavor::p, 0.04), flip, 0.5);
  for_each_sequence(*space, 4, [&](SequenceView s) {
    CHECK(c3.p_prime.eval(s) == doctest::Approx(1.0));
    CHECK(c3.g.eval(s) == doctest::Approx(std::sqrt(0.5 / kE) * std::sqrt(1.0 / std::sqrt(0.04))));
  });
  const PPair c31 = corollary3_G(constant_predictor(space, 3, Flavor::p, 1.0), flip, 0.5);
  CHECK(c31.g(labels({0, 1, 0, 1})) == doctest::Approx(std::sqrt(0.5 / kE)));
  const Predictor r = random_train_invariant_table(space, 3, Flavor::e, rng);
  const Predictor bound = tabulate(corollary2_bound(r, flip));
  const Predictor cg = tabulate(corollary2_G(r, flip));
  for_each_sequence(*space, 4, [&](SequenceView s) { CHECK(cg.eval(s) <= bound.eval(s) + 1e-12); });
}

TEST_CASE("conformal p from scores") {
  const SpacePtr space = binary_space();
  const Scorer flat = [](const Bag&, Example) { return 1.0; };
  const Predictor all = conformal_p_from_scores(space, 3, flat, true);
  for_each_sequence(*space, 4, [&](SequenceView s) { CHECK(all.eval(s) == 1.0); });
  const Scorer label = [](const Bag&, Example z) { return double(z.label); };
  const Predictor p = conformal_p_from_scores(space, 3, label, true);
  CHECK(p(labels({0, 0, 0, 1})) == doctest::Approx(0.25));
  CHECK(p(labels({0, 1, 0, 0})) == 1.0);
  CHECK(check_structure(tabulate(p)).train_invariant);
}
