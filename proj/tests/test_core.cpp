#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "univconf/constructions.hpp"
#include "univconf/generators.hpp"
#include "univconf/orbit.hpp"
#include "univconf/predictor_io.hpp"
#include "univconf/rng.hpp"

using namespace univconf;

TEST_CASE("example space invariants") {
  CHECK_THROWS_AS(ExampleSpace({"x"}, {"0"}), DomainError);
  CHECK_THROWS_AS(ExampleSpace({}, {"0", "1"}), DomainError);
  CHECK_THROWS_AS(ExampleSpace({"x", "x"}, {"0", "1"}), DomainError);
  CHECK_THROWS_AS(ExampleSpace({"x"}, {"0", "0"}), DomainError);
  const ExampleSpace s({"a", "b"}, {"0", "1", "2"});
  CHECK(s.size() == 6);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(s.index(s.example_at(i)) == i);
  CHECK(s.find_label("2") == 2u);
  CHECK_FALSE(s.find_object("c"));
}

TEST_CASE("data sequences need a training example") {
  const auto space = binary_space();
  CHECK_THROWS_AS(DataSequence(*space, {Example{0, 0}}), DomainError);
  const DataSequence d(*space, {Example{0, 0}, Example{0, 1}});
  CHECK(d.n() == 1);
  CHECK(d.test().label == 1);
}

TEST_CASE("sequence codes round trip") {
  const auto space = std::make_shared<const ExampleSpace>(std::vector<std::string>{"a", "b"},
                                                          std::vector<std::string>{"0", "1", "2"});
  std::uint64_t expected = 0;
  for_each_sequence(*space, 3, [&](SequenceView s) {
    CHECK(sequence_code(*space, s) == expected);
    CHECK(sequence_from_code(*space, 3, expected) == Sequence(s.begin(), s.end()));
    ++expected;
  });
  CHECK(expected == sequence_count(*space, 3));
}

TEST_CASE("bags identify permutations") {
  const Sequence a = label_sequence(std::vector<std::uint32_t>{0, 1, 1, 2});
  const Sequence b = label_sequence(std::vector<std::uint32_t>{1, 2, 0, 1});
  CHECK(Bag(a) == Bag(b));
  CHECK(Bag(a).total() == 4);
  CHECK(Bag(a).count(Example{0, 1}) == 2);
  CHECK(Bag(a).without(Example{0, 1}).count(Example{0, 1}) == 1);
  CHECK_THROWS_AS(Bag(a).without(Example{0, 3}), DomainError);
  CHECK(Bag(Bag(a).arrangement()) == Bag(a));
}

TEST_CASE("predictor range and arity checks") {
  const auto space = binary_space();
  CHECK_THROWS_AS(constant_predictor(space, 2, Flavor::p, 1.5), DomainError);
  CHECK_THROWS_AS(make_table_predictor(space, 1, Flavor::e, {}, {1.0, 2.0}), DomainError);
  const Predictor e = constant_predictor(space, 2, Flavor::e, kInf);
  CHECK(std::isinf(e(label_sequence(std::vector<std::uint32_t>{0, 1, 0}))));
  CHECK_THROWS_AS(e(label_sequence(std::vector<std::uint32_t>{0, 1})), ArityError);
}

TEST_CASE("structure check finds violations") {
  const auto space = binary_space();
  std::vector<double> v(8);
  for (std::uint64_t c = 0; c < 8; ++c) v[c] = double(c);  // depends on order
  const Predictor e = make_table_predictor(space, 2, Flavor::e, {}, v);
  const StructureCheck s = check_structure(e);
  CHECK(s.exact);
  CHECK_FALSE(s.train_invariant);
  CHECK_FALSE(s.fully_invariant);
  CHECK(s.label_only);
  CHECK(s.counterexample);
  const StructureCheck f = check_structure(eq13_predictor(4));
  CHECK(f.fully_invariant);
  CHECK(f.train_invariant);
}

TEST_CASE("prediction sets") {
  PredictionFunction p{Flavor::p, {0.04, 0.5, 0.2}};
  CHECK(prediction_set(p, 0.1) == std::vector<std::uint32_t>{1, 2});
  PredictionFunction e{Flavor::e, {30.0, 0.5, 20.0}};
  CHECK(prediction_set(e, 20.0) == std::vector<std::uint32_t>{1});
  CHECK_THROWS_AS(prediction_set(p, 1.0), DomainError);
  const Predictor lap = laplace_predictor(2);
  const PredictionFunction f = prediction_function(lap, label_sequence(std::vector<std::uint32_t>{0, 0}), 0);
  CHECK(f.values[1] == doctest::Approx(3 * 2.25));
  CHECK(f.values[0] == 0.0);
}

TEST_CASE("markov kernels") {
  const auto space = ExampleSpace::numbered_labels(3);
  CHECK_THROWS_AS(MarkovKernel::flip(space), DomainError);
  const MarkovKernel u = MarkovKernel::uniform_other(space);
  CHECK(u(0, Example{0, 0}) == 0.0);
  CHECK(u(1, Example{0, 0}) == doctest::Approx(0.5));
  CHECK(u.label_only());
  CHECK_THROWS_AS(MarkovKernel(space, {{0.5, 0.6, 0.0}, {1, 0, 0}, {1, 0, 0}}), DomainError);
}

TEST_CASE("product model sampling frequencies") {
  const auto space = ExampleSpace::numbered_labels(3);
  const ProductModel m = ProductModel::from_labels(space, {0.2, 0.3, 0.5}, 4);
  CounterRng rng(11);
  std::vector<double> freq(3, 0.0);
  Sequence s;
  const int draws = 50000;
  for (int i = 0; i < draws; ++i) {
    m.sample(rng, s);
    for (const auto& z : s) freq[z.label] += 1.0 / (4.0 * draws);
  }
  CHECK(freq[0] == doctest::Approx(0.2).epsilon(0.02));
  CHECK(freq[2] == doctest::Approx(0.5).epsilon(0.02));
  CHECK_THROWS_AS(ProductModel::from_labels(space, {0.2, 0.3, 0.6}, 4), DomainError);
}

TEST_CASE("counter rng streams are independent of trial count") {
  CounterRng a(5, 1, 7), b(5, 1, 7), c(5, 1, 8);
  for (int i = 0; i < 10; ++i) {
    const auto x = a();
    CHECK(x == b());
    CHECK(x != c());
  }
  CounterRng r(3);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.below(7) < 7);
  }
}

TEST_CASE("orbit enumeration counts") {
  const Sequence s = label_sequence(std::vector<std::uint32_t>{0, 0, 1, 2});
  CHECK(naive_orbit_size(4, OrbitScope::all) == 24);
  CHECK(distinct_orbit_size(s, OrbitScope::all) == 12);
  CHECK(distinct_orbit_size(s, OrbitScope::train_only) == 3);
  std::uint64_t total = 0, distinct = 0;
  for_each_distinct(s, OrbitScope::all, [&](SequenceView, std::uint64_t w) {
    total += w;
    ++distinct;
  });
  CHECK(total == 24);
  CHECK(distinct == 12);
  CHECK_THROWS_AS(for_each_permutation(label_sequence(std::vector<std::uint32_t>(12, 0)), OrbitScope::all,
                                       [](SequenceView) {}, 1000),
                  EnumerationCapError);
  std::size_t bags = 0;
  for_each_composition(3, 4, [&](const std::vector<std::uint32_t>&) { ++bags; });
  CHECK(bags == 15);
}

TEST_CASE("predictor files round trip") {
  const auto space = std::make_shared<const ExampleSpace>(std::vector<std::string>{"u", "v"},
                                                          std::vector<std::string>{"0", "1"});
  CounterRng rng(9);
  const Predictor e = random_train_invariant_table(space, 2, Flavor::e, rng);
  std::stringstream io;
  write_predictor(io, e);
  const Predictor back = read_predictor(io);
  CHECK(back.train_invariant());
  for_each_sequence(*space, 3, [&](SequenceView s) { CHECK(back.eval(s) == e.eval(s)); });
}

TEST_CASE("predictor file grammar") {
  std::istringstream ok(
      "labels 0 1\nn 1\nflavor e\nflags train_invariant label_only\ndefault 0\nrows\n"
      "0 1 2.5   # test label 1\n1 1 inf\n");
  const Predictor e = read_predictor(ok);
  CHECK(e(label_sequence(std::vector<std::uint32_t>{0, 1})) == 2.5);
  CHECK(std::isinf(e(label_sequence(std::vector<std::uint32_t>{1, 1}))));
  CHECK(e(label_sequence(std::vector<std::uint32_t>{1, 0})) == 0.0);

  std::istringstream lying("labels 0 1\nn 1\nflavor e\nflags fully_invariant\nrows\n0 0 1\n0 1 2\n1 0 0\n1 1 1\n");
  CHECK_THROWS_AS(read_predictor(lying), Error);
  std::istringstream missing("labels 0 1\nn 1\nflavor p\nflags none\nrows\n0 0 1\n");
  CHECK_THROWS_AS(read_predictor(missing), Error);
  std::istringstream range("labels 0 1\nn 1\nflavor p\nflags none\ndefault 1\nrows\n0 0 1.5\n");
  CHECK_THROWS_AS(read_predictor(range), Error);
  std::istringstream objects(
      "objects a b\nlabels 0 1\nn 1\nflavor p\nflags none\ndefault 1\nrows\n0 1 , a b 0.25\n");
  const Predictor p = read_predictor(objects);
  CHECK(p(Sequence{Example{0, 0}, Example{1, 1}}) == 0.25);
  CHECK(p(Sequence{Example{1, 0}, Example{1, 1}}) == 1.0);
}
