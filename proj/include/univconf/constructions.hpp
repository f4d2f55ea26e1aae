#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "univconf/calibration.hpp"
#include "univconf/core.hpp"
#include "univconf/operators.hpp"
#include "univconf/verification.hpp"

namespace univconf {

struct ExperimentConstants {
  double a = 0.99;
  double b = 1.01;
  double c = 0.9;
  double delta = 0.5;
  double epsilon = 0.05;
  double epsilon1 = 0.05;
  double epsilon2 = 0.05;
  int k = 2;

  // Throws DomainError when a constant is outside its range.
  void validate() const;
};

// Labels "0" and "1" with one object.
SpacePtr binary_space();

// (1 - 1/(n+1))^{-n} = (1 + 1/n)^n.
double eq13_value(std::size_t n);
// eq13_value(n) when exactly one label is 1, else 0. Fully invariant.
Predictor eq13_predictor(std::size_t n, SpacePtr space = nullptr);
// (n+1) eq13_value(n) on (0, ..., 0, 1), else 0. Train-invariant.
Predictor laplace_predictor(std::size_t n, SpacePtr space = nullptr);

// scale * sum_y B(y | z_{n+1}) E(train, x_{n+1}, y) / E^X(train, x_{n+1}, y), 0/0 := 0.
// scale = 1/e gives the guarantee; other scales are used to probe optimality.
Predictor theorem1_G(const Predictor& e, const MarkovKernel& b, double scale = 1.0 / kE,
                     const OperatorOptions& options = {});

struct ProofParts {
  Predictor g1;  // mean over i of E^i with label i resampled from B
  Predictor g2;  // E^i with every label resampled with probability 1/(n+1)
  Predictor g3;  // int E^i(train, x_{n+1}, y) B(dy | z_{n+1}) / G1, 0/0 := 0
  bool g2_exact = true;
};

// G2 enumerates every resampling pattern when their number is within
// `pattern_cap`; otherwise it averages `mc_trials` seeded resamplings.
ProofParts theorem1_proof_parts(const Predictor& e, const MarkovKernel& b,
                                const OperatorOptions& options = {},
                                std::uint64_t pattern_cap = std::uint64_t{1} << 13,
                                std::size_t mc_trials = 20000, std::uint64_t seed = 0);

// Probability that exactly one of n+1 labels is resampled: (n/(n+1))^n.
double exactly_one_resample_probability(std::size_t n);

struct Theorem2Report {
  std::size_t n = 0;
  double c = 0.0;
  double value_at_zero = 0.0;  // G(0, ..., 0) from the predictor
  double closed_form = 0.0;    // c (1 + 1/n)^n
  Certificate certificate;
};
Theorem2Report theorem2_counterexample(std::size_t n, double c, const SearchConfig& cfg = {});

struct PPair {
  Predictor p_prime;
  Predictor g;
};
// P' = min(1/E^X, 1) with E = delta P^{delta-1};
// G = (delta/e) sum_y B(y | z_{n+1}) P'(., y) / P^{1-delta}(., y).
PPair corollary1_G(const Predictor& p, const MarkovKernel& b, double delta,
                   const OperatorOptions& options = {});

enum class MulticlassVariant { exclude_true, crude, uniform_all };
std::string to_string(MulticlassVariant v);
MulticlassVariant parse_multiclass_variant(const std::string& s);
Predictor multiclass_G(const Predictor& e, MulticlassVariant variant,
                       const OperatorOptions& options = {});

// Label layout 0', 1', -k, ..., k (indices 0, 1, 2, ..., 2k+2).
SpacePtr theorem3_space(int k);
// Numeric payload of a label in the layout above.
int theorem3_label_value(std::uint32_t label, int k);
bool theorem3_is_primed(std::uint32_t label);
double theorem3_value(std::size_t n, double a);
Predictor theorem3_E(std::size_t n, int k, double a);

struct Theorem3Chain {
  double value = 0.0;             // a e sqrt(pi/2) n^{3/2}
  double ratio_bound = 0.0;       // b sqrt(pi n)(n+1) / (2 sqrt2 k a e sqrt(pi/2) n^{3/2})
  double target = 0.0;            // c / (e |Y|)
  bool holds = false;             // ratio_bound < target
  double c_threshold = 0.0;       // smallest c for which the chain holds
  double condition_probability = 0.0;  // exact P(|sum - n/2| <= k) at theta = 1/2
  double exact_ratio_bound = 0.0;      // (n+1) / (condition_probability * value)
  bool exact_holds = false;
};
Theorem3Chain theorem3_chain(std::size_t n, int k, double a, double b, double c);

// Exact worst-case expectation: for a fixed test label y the optimum puts
// mass 1/(n+1) on the test labels and splits the rest between 0' and 1';
// each y is then a one-dimensional golden-section problem.
SimplexMaximum theorem3_profile_maximum(std::size_t n, int k, double a, const SearchConfig& cfg);

// c m when S = 0 (mod m) and every |k_y - n/m| <= 0.1 n/m (counts over all
// n+1 labels), else 0. Labels 0..m-1.
Predictor theorem4_E(std::size_t n, std::size_t m, double c);

// (n+1) / (m (k + 1)) with k the training count of the test label: a
// train-invariant randomness e-predictor with expectation
// (1/m) sum_y (1 - (1 - q_y)^{n+1}).
Predictor rare_label_E(std::size_t n, std::size_t m);
// Its relative deviation in closed form: (n+1) / (k_y D), with k_y the full
// count of the test label and D the number of distinct labels.
Predictor rare_label_EX(std::size_t n, std::size_t m);

struct Theorem4Events {
  std::size_t n = 0, m = 0, trials = 0;
  double c = 0.0;
  double sum_zero_frequency = 0.0;
  double e_frequency = 0.0;  // E(Y_1..Y_n, Y) >= c m
  double e_standard_error = 0.0;
  std::optional<double> g_frequency;       // G(Y_1..Y_{n+1}) <= 2
  std::optional<double> g_standard_error;
  std::optional<double> eprime_frequency;  // E'(Y_1..Y_n, Y) <= 2.01
  std::optional<double> eprime_standard_error;
};
Theorem4Events theorem4_events(std::size_t n, std::size_t m, double c, std::size_t trials,
                               std::uint64_t seed, const Predictor* g = nullptr,
                               const Predictor* e_prime = nullptr, unsigned threads = 0);

// int E / E^t B(dy | z_{n+1}), 0/0 := 0.
Predictor theorem5_G(const Predictor& e, const MarkovKernel& b, const OperatorOptions& options = {});
// e^{-1/2} int sqrt(E / E^tX) B(dy | z_{n+1}), 0/0 := 0.
Predictor corollary2_G(const Predictor& e, const MarkovKernel& b, const OperatorOptions& options = {});
// (G1 + G2)/2 with G1 = e^{-1} int E/E^X B and G2 = int E^X/E^tX B; dominates corollary2_G.
Predictor corollary2_bound(const Predictor& e, const MarkovKernel& b,
                           const OperatorOptions& options = {});
// P' = min(1/E^tX, 1) with E = delta P^{delta-1};
// G = sqrt(delta/e) int sqrt(P' / P^{1-delta}) B.
PPair corollary3_G(const Predictor& p, const MarkovKernel& b, double delta,
                   const OperatorOptions& options = {});

// Nonconformity score A(bag, z) of an example within the full bag.
using Scorer = std::function<double(const Bag&, Example)>;
// |{i : A(bag, z_i) >= A(bag, z_{n+1})}| / (n+1).
Predictor conformal_p_from_scores(SpacePtr space, std::size_t n, Scorer score,
                                  bool label_only = false, std::string name = "conformal");
// A(bag, z) = 1 / P(arrangement of bag minus z, z) for train-invariant P.
Scorer remark1_scorer(const Predictor& p);

}  // namespace univconf
