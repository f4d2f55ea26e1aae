#pragma once

#include <string>
#include <vector>

#include "univconf/core.hpp"

namespace univconf {

// p-to-e maps (power p -> delta p^(delta-1), or any unit-integral density on
// [0,1]) and the e-to-p map e -> min(1/e, 1).
class Calibrator {
 public:
  enum class Kind { p_to_e_power, p_to_e_density, e_to_p };

  static Calibrator power(double delta);
  // Piecewise-constant density: heights[j] on [j/m, (j+1)/m).
  static Calibrator density(std::vector<double> heights);
  static Calibrator e_to_p();

  Kind kind() const { return kind_; }
  double delta() const { return delta_; }
  const std::vector<double>& heights() const { return heights_; }
  Flavor source() const { return kind_ == Kind::e_to_p ? Flavor::e : Flavor::p; }
  Flavor target() const { return kind_ == Kind::e_to_p ? Flavor::p : Flavor::e; }

  double operator()(double v) const;

  // Integral over [0,1] of a p-to-e map; quadrature for the power family
  // (tanh-sinh handles the endpoint singularity), bin sums for densities.
  double integral() const;

 private:
  Calibrator(Kind kind, double delta, std::vector<double> heights)
      : kind_(kind), delta_(delta), heights_(std::move(heights)) {}

  Kind kind_;
  double delta_ = 0.0;
  std::vector<double> heights_;
};

double calibrate_value(const Calibrator& c, double v);
Predictor calibrate_predictor(const Calibrator& c, const Predictor& pred);

// Reads whitespace-separated density heights ('#' comments allowed).
std::vector<double> read_density_file(const std::string& path);

}  // namespace univconf
