#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "univconf/core.hpp"

namespace univconf {

// Symmetrization operators on e-predictors:
//   avg_all            E^i  = mean of E over all (n+1)! permutations
//   relative_deviation E^X  = E / E^i, with 0/0 := 1
//   avg_train          E^t  = mean of E over the n! training permutations
//   conformalize       E^tX = (E^t)^X = (E^X)^t

enum class OperatorMethod { exact_enumeration, cyclic_fast_path };

std::string to_string(OperatorMethod m);

struct OperatorOptions {
  std::uint64_t enumeration_cap = kDefaultEnumerationCap;
  // Use the n+1 rotations instead of all permutations for train-invariant input.
  bool allow_fast_path = true;
  // Inputs with |Z|^{n+1} up to this size are tabulated once before use.
  std::uint64_t memo_cap = std::uint64_t{1} << 16;
};

struct OperatorResult {
  Predictor predictor;
  OperatorMethod method = OperatorMethod::exact_enumeration;
  // Worst-case number of base evaluations per evaluation of the result.
  std::uint64_t cost = 0;
};

// Mean of E over all permutations of seq (distinct rearrangements weighted).
double permutation_mean(const Predictor& e, SequenceView seq,
                        std::uint64_t cap = kDefaultEnumerationCap);
// (1/(n+1)) sum over the n+1 cyclic rotations; equals permutation_mean for
// train-invariant E.
double rotation_mean(const Predictor& e, SequenceView seq);
// Mean of E over permutations of the first n items.
double training_mean(const Predictor& e, SequenceView seq,
                     std::uint64_t cap = kDefaultEnumerationCap);

// x / mean with the stated value for 0/0; inf/inf is treated like 0/0.
double ratio_or(double x, double mean, double zero_over_zero);

OperatorResult avg_all(const Predictor& e, const OperatorOptions& options = {});
OperatorResult relative_deviation(const Predictor& e, const OperatorOptions& options = {});
OperatorResult avg_train(const Predictor& e, const OperatorOptions& options = {});
OperatorResult conformalize(const Predictor& e, const OperatorOptions& options = {});

// Applies a comma-separated chain such as "t,x" left to right; tokens are
// i, x, t and tx.
Predictor apply_operators(const Predictor& e, std::string_view chain,
                          const OperatorOptions& options = {});
std::vector<std::string> parse_operator_chain(std::string_view chain);

}  // namespace univconf
