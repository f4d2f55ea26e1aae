#pragma once

#include <cstdint>

#include "univconf/core.hpp"
#include "univconf/rng.hpp"
#include "univconf/verification.hpp"

namespace univconf {

// Table predictor with IID values: 0 with probability `zero_fraction`,
// otherwise uniform on (0, scale) (e-flavor) or (0, 1] (p-flavor).
Predictor random_table(SpacePtr space, std::size_t n, Flavor flavor, CounterRng& rng,
                       double zero_fraction = 0.2, double scale = 2.0);

// As random_table, but one value per (training bag, test example).
Predictor random_train_invariant_table(SpacePtr space, std::size_t n, Flavor flavor,
                                       CounterRng& rng, double zero_fraction = 0.2,
                                       double scale = 2.0);

// Pointwise c * E.
Predictor scale_predictor(const Predictor& e, double c);

// E divided by its worst-case expectation over product measures, so that it
// certifies as a randomness e-variable. `worst` receives the divisor.
Predictor normalize_randomness(const Predictor& e, const SearchConfig& cfg = {},
                               double* worst = nullptr);

}  // namespace univconf
