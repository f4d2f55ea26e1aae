#include "univconf/calibration.hpp"

#include <algorithm>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <fstream>
#include <sstream>

namespace univconf {

namespace {
constexpr double kDensityTolerance = 1e-6;
}

Calibrator Calibrator::power(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("power calibrator needs delta in (0,1)");
  return Calibrator(Kind::p_to_e_power, delta, {});
}

Calibrator Calibrator::density(std::vector<double> heights) {
  if (heights.empty()) throw DomainError("density calibrator needs at least one bin");
  for (double h : heights)
    if (!(h >= 0.0)) throw DomainError("density heights must be nonnegative");
  Calibrator c(Kind::p_to_e_density, 0.0, std::move(heights));
  const double total = c.integral();
  if (std::abs(total - 1.0) > kDensityTolerance)
    throw DomainError("density integrates to " + std::to_string(total) + ", expected 1");
  return c;
}

Calibrator Calibrator::e_to_p() { return Calibrator(Kind::e_to_p, 0.0, {}); }

double Calibrator::operator()(double v) const {
  switch (kind_) {
    case Kind::p_to_e_power:
      if (!(v >= 0.0 && v <= 1.0)) throw DomainError("p-value outside [0,1]");
      if (v == 0.0) return kInf;
      return delta_ * std::pow(v, delta_ - 1.0);
    case Kind::p_to_e_density: {
      if (!(v >= 0.0 && v <= 1.0)) throw DomainError("p-value outside [0,1]");
      const std::size_t m = heights_.size();
      const std::size_t bin = std::min(m - 1, static_cast<std::size_t>(v * static_cast<double>(m)));
      return heights_[bin];
    }
    case Kind::e_to_p:
      if (!(v >= 0.0)) throw DomainError("e-value must be nonnegative");
      if (v == 0.0) return 1.0;
      return std::min(1.0 / v, 1.0);
  }
  return 0.0;
}

double Calibrator::integral() const {
  switch (kind_) {
    case Kind::p_to_e_power: {
      boost::math::quadrature::tanh_sinh<double> integrator;
      const double d = delta_;
      return integrator.integrate([d](double p) { return d * std::pow(p, d - 1.0); }, 0.0, 1.0);
    }
    case Kind::p_to_e_density: {
      // On each bin the integrand is constant, so the trapezoid rule per bin is exact.
      CompensatedSum s;
      for (double h : heights_) s.add(h);
      return s.value() / static_cast<double>(heights_.size());
    }
    case Kind::e_to_p:
      throw DomainError("integral is only defined for p-to-e calibrators");
  }
  return 0.0;
}

double calibrate_value(const Calibrator& c, double v) { return c(v); }

Predictor calibrate_predictor(const Calibrator& c, const Predictor& pred) {
  if (pred.flavor() != c.source())
    throw FlavorError("calibrator expects a " + to_string(c.source()) + "-flavor predictor");
  const Predictor base = pred;
  EvalFn f = [c, base](SequenceView seq) {
    const double v = c(base.eval(seq));
    return c.kind() == Calibrator::Kind::e_to_p ? std::clamp(v, 0.0, 1.0) : v;
  };
  return Predictor(pred.space_ptr(), pred.n(), c.target(), pred.structure(), std::move(f),
                   "cal(" + pred.name() + ")");
}

std::vector<double> read_density_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open density file " + path);
  std::vector<double> heights;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double h;
    while (ls >> h) heights.push_back(h);
    if (!ls.eof()) throw Error("malformed density file " + path);
  }
  return heights;
}

}  // namespace univconf
