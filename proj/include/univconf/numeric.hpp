#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

namespace univconf {

inline constexpr double kTolerance = 1e-12;
inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kE = 2.718281828459045235360287471352662498;

// Neumaier compensated sum. Infinite terms are counted separately so that
// a single +inf does not poison the running compensation with NaN.
class CompensatedSum {
 public:
  void add(double x) {
    if (std::isinf(x)) {
      ++infinities_;
      return;
    }
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return infinities_ > 0 ? kInf : sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
  std::uint64_t infinities_ = 0;
};

inline double compensated_sum(std::span<const double> xs) {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

inline constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();

// n! saturated at the uint64 maximum.
inline std::uint64_t factorial_u64(std::uint64_t n) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 2; i <= n; ++i) {
    if (r > kSaturated / i) return kSaturated;
    r *= i;
  }
  return r;
}

inline std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > kSaturated / a) return kSaturated;
  return a * b;
}

inline std::uint64_t saturating_pow(std::uint64_t base, std::uint64_t exp) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < exp; ++i) r = saturating_mul(r, base);
  return r;
}

// Multinomial coefficient (sum counts)! / prod(counts!), saturating.
template <typename Range>
std::uint64_t multinomial_u64(const Range& counts) {
  std::uint64_t result = 1;
  std::uint64_t running = 0;
  for (auto c : counts) {
    for (std::uint64_t j = 1; j <= static_cast<std::uint64_t>(c); ++j) {
      ++running;
      // result * running / j stays integral at every step.
      const std::uint64_t g = running;
      if (result > kSaturated / g) return kSaturated;
      result = result * g / j;
    }
  }
  return result;
}

inline double log_binomial(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

inline double binomial_coefficient(unsigned n, unsigned k) {
  if (k > n) return 0.0;
  return std::round(std::exp(log_binomial(n, k)));
}

// Binomial pmf computed in log space; exact zeros at the degenerate ends.
inline double binomial_pmf(unsigned n, unsigned k, double p) {
  if (k > n) return 0.0;
  if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return k == n ? 1.0 : 0.0;
  return std::exp(log_binomial(n, k) + k * std::log(p) + (n - k) * std::log1p(-p));
}

}  // namespace univconf
