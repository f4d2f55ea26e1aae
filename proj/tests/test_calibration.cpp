#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "univconf/calibration.hpp"
#include "univconf/constructions.hpp"

using namespace univconf;

TEST_CASE("power calibrator integrates to one") {
  for (double d : {0.1, 0.25, 0.5, 0.75, 0.9}) CHECK(std::abs(Calibrator::power(d).integral() - 1.0) < 1e-6);
  const Calibrator c = Calibrator::power(0.5);
  CHECK(c(0.25) == doctest::Approx(1.0));  // 0.5 * 0.25^(-0.5)
  CHECK(std::isinf(c(0.0)));
  CHECK(c(1.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(Calibrator::power(1.0), DomainError);
  CHECK_THROWS_AS(c(1.5), DomainError);
}

TEST_CASE("density calibrator") {
  const Calibrator c = Calibrator::density({2.0, 0.0});
  CHECK(c(0.1) == 2.0);
  CHECK(c(0.7) == 0.0);
  CHECK(c.integral() == doctest::Approx(1.0));
  CHECK_THROWS_AS(Calibrator::density({1.0, 2.0}), DomainError);
  CHECK_THROWS_AS(Calibrator::density({2.0, -0.5, 0.5}), DomainError);
}

TEST_CASE("e to p calibrator") {
  const Calibrator c = Calibrator::e_to_p();
  CHECK(c(0.0) == 1.0);
  CHECK(c(0.5) == 1.0);
  CHECK(c(4.0) == 0.25);
  CHECK(c(kInf) == 0.0);
  CHECK_THROWS_AS(c.integral(), DomainError);
}

TEST_CASE("calibrating predictors switches flavor") {
  const Predictor p = constant_predictor(binary_space(), 2, Flavor::p, 0.04);
  const Predictor e = calibrate_predictor(Calibrator::power(0.5), p);
  CHECK(e.flavor() == Flavor::e);
  CHECK(e(label_sequence(std::vector<std::uint32_t>{0, 0, 1})) == doctest::Approx(2.5));
  CHECK_THROWS_AS(calibrate_predictor(Calibrator::e_to_p(), p), FlavorError);
  const Predictor back = calibrate_predictor(Calibrator::e_to_p(), e);
  CHECK(back(label_sequence(std::vector<std::uint32_t>{0, 0, 1})) == doctest::Approx(0.4));
}

TEST_CASE("density file") {
  const char* path = "density_test.txt";
  {
    std::ofstream out(path);
    out << "# two bins\n1.5 0.5\n";
  }
  const Calibrator c = Calibrator::density(read_density_file(path));
  CHECK(c.integral() == doctest::Approx(1.0));
  std::remove(path);
  CHECK_THROWS_AS(read_density_file("no_such_density_file"), Error);
}
