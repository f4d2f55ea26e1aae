#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "univconf/core.hpp"

namespace univconf {

enum class TargetClass { exch_e, rand_e, invariant_rand_e, exch_p, rand_p, test_cond_exch_e };
enum class Verdict { pass_exact, pass_numeric, fail, indeterminate };
enum class CertMethod { orbit_enumeration, simplex_grid, one_dim_maximize, roots_of_unity, monte_carlo };

std::string to_string(TargetClass t);
std::string to_string(Verdict v);
std::string to_string(CertMethod m);
TargetClass parse_target_class(const std::string& s);

struct Witness {
  std::optional<Sequence> sequence;
  std::optional<std::vector<double>> distribution;  // Q over examples
  std::optional<double> alpha;
};

struct Certificate {
  TargetClass target = TargetClass::rand_e;
  Verdict verdict = Verdict::indeterminate;
  // Largest expectation / orbit mean / (tail - alpha) found.
  double worst_value = 0.0;
  // Slack left under the bound: 1 - worst for e-classes, alpha - tail for p-classes.
  double margin = 0.0;
  CertMethod method = CertMethod::orbit_enumeration;
  std::optional<Witness> witness;
  // Search resolution for numeric verdicts (grid step or golden-section tolerance).
  std::optional<double> resolution;
  double tolerance = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t evaluations = 0;
  std::string note;

  bool passed() const { return verdict == Verdict::pass_exact || verdict == Verdict::pass_numeric; }
};

struct SearchConfig {
  std::size_t grid_resolution = 64;        // per simplex coordinate
  std::size_t max_grid_points = 250000;    // resolution is lowered to fit
  std::size_t multistarts = 32;
  std::size_t ascent_iterations = 4000;
  std::size_t theta_grid = 4096;           // one-dimensional profile grid
  double golden_tolerance = 1e-10;
  double exact_tolerance = 1e-9;           // one-dimensional path
  double search_tolerance = 1e-6;          // simplex path
  std::uint64_t seed = 0;
  std::uint64_t evaluation_cap = kDefaultTableCap;
};

// Homogeneous polynomial in Q over `atoms` (labels or examples):
// f(q) = sum_t exp(log_coefficient_t) prod_a q_a^{counts_t[a]}.
struct NullPolynomial {
  struct Term {
    std::vector<std::uint32_t> counts;
    double log_coefficient = 0.0;
  };
  std::size_t atoms = 0;
  std::size_t degree = 0;
  bool over_labels = false;
  bool infinite = false;  // some orbit carries +inf
  std::vector<Term> terms;

  double operator()(std::span<const double> q) const;
  // One Baum-Eagon growth step; never decreases f.
  std::vector<double> growth_step(std::span<const double> q) const;
};

// Per-bag value lists of a predictor, from which expectation and tail
// polynomials are formed.
struct BagTable {
  struct Entry {
    double value = 0.0;
    double log_weight = 0.0;  // log of the number of sequences carrying the value
  };
  struct Orbit {
    std::vector<std::uint32_t> counts;
    std::vector<Entry> entries;
  };
  std::size_t atoms = 0;
  std::size_t degree = 0;
  bool over_labels = false;
  std::vector<Orbit> orbits;
  std::uint64_t evaluations = 0;
};

BagTable bag_table(const Predictor& pred, std::uint64_t evaluation_cap = kDefaultTableCap);
NullPolynomial expectation_polynomial(const BagTable& table);
NullPolynomial tail_polynomial(const BagTable& table, double alpha);
// Uses the predictor hint when present, otherwise the bag table.
NullPolynomial null_polynomial(const Predictor& e, std::uint64_t evaluation_cap = kDefaultTableCap);

struct SimplexMaximum {
  double value = 0.0;
  std::vector<double> argmax;
  CertMethod method = CertMethod::simplex_grid;
  double resolution = 0.0;
  bool converged = true;
  std::uint64_t evaluations = 0;
};

using SimplexObjective = std::function<double(std::span<const double>)>;

// Grid plus golden section for two atoms; simplex grid plus multistart local
// ascent otherwise. `polynomial` (optional) enables growth-transform steps.
SimplexMaximum maximize_on_simplex(std::size_t atoms, const SimplexObjective& f,
                                   const SearchConfig& cfg,
                                   const NullPolynomial* polynomial = nullptr);

// Golden-section maximization of a unimodal function on [lo, hi].
double golden_section_maximize(const std::function<double(double)>& f, double lo, double hi,
                               double tolerance);

Certificate certify_exchangeability_e(const Predictor& e,
                                      std::uint64_t evaluation_cap = kDefaultTableCap);
Certificate certify_randomness_e(const Predictor& e, const SearchConfig& cfg = {});
// Fully invariant (checked) and rand-e.
Certificate certify_invariant_randomness_e(const Predictor& e, const SearchConfig& cfg = {});

struct ModularParams {
  std::size_t n = 2000;
  std::size_t m = 5;
  double c = 0.9;
};
// Bounds Q^{n+1}(E > 0) for the modular-sum predictor by
// min(P(S = 0 mod m), min_y P(k_y balanced)) and maximizes c m bound over Q.
Certificate certify_randomness_e_modular(const ModularParams& params, const SearchConfig& cfg = {});
// P(S = 0 mod m) under Q^{power}: (1/m) sum_j phi_Q(j)^power.
double modular_sum_probability(std::span<const double> q, std::size_t power);
// min over labels of P(|k_y - n/m| <= 0.1 n/m), k_y ~ Bin(n+1, q_y).
double balance_probability_bound(std::span<const double> q, std::size_t n);

// Default alpha grid {0.01 k}; breakpoints at the predictor's values are
// always added.
std::vector<double> default_alpha_grid();
Certificate certify_exchangeability_p(const Predictor& p, std::span<const double> alphas = {},
                                      std::uint64_t evaluation_cap = kDefaultTableCap);
Certificate certify_randomness_p(const Predictor& p, std::span<const double> alphas = {},
                                 const SearchConfig& cfg = {});
Certificate certify_test_conditional(const Predictor& g,
                                     std::uint64_t evaluation_cap = kDefaultTableCap);

struct MonteCarloEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t trials = 0;
  bool violation() const { return mean - 3.0 * standard_error > 1.0; }
};

MonteCarloEstimate mc_expectation(const Predictor& e, const ProductModel& model, std::size_t trials,
                                  std::uint64_t seed, unsigned threads = 0);
// Draws of E under Q^{n+1}, trial i from a seed derived from (seed, i).
std::vector<double> mc_samples(const Predictor& e, const ProductModel& model, std::size_t trials,
                               std::uint64_t seed, unsigned threads = 0);

struct MarkovReport {
  double epsilon = 0.0;
  double frequency = 0.0;  // fraction of samples with G >= 1/epsilon
  double standard_error = 0.0;
  std::size_t samples = 0;
  bool within_bound = true;  // frequency <= epsilon + 3 SE
};
MarkovReport markov_guarantee(std::span<const double> samples, double epsilon);

}  // namespace univconf
