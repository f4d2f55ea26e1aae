#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "univconf/core.hpp"

namespace univconf {

enum class OrbitScope { train_only, all };

struct WeightedSequence {
  Sequence items;
  std::uint64_t weight = 1;
};

// n! for train_only, (n+1)! for all.
std::uint64_t naive_orbit_size(std::size_t length, OrbitScope scope);
// Number of distinct rearrangements (a multinomial coefficient).
std::uint64_t distinct_orbit_size(SequenceView seq, OrbitScope scope);

// Every permutation of the scope, one item per permutation (duplicates
// included). Throws EnumerationCapError when the naive size exceeds `cap`.
void for_each_permutation(SequenceView seq, OrbitScope scope,
                          const std::function<void(SequenceView)>& visit,
                          std::uint64_t cap = kDefaultEnumerationCap);

// Each distinct rearrangement once, with the number of permutations that
// produce it. Weighted sums equal the naive sums exactly. The cap applies to
// the number of distinct rearrangements.
void for_each_distinct(SequenceView seq, OrbitScope scope,
                       const std::function<void(SequenceView, std::uint64_t)>& visit,
                       std::uint64_t cap = kDefaultEnumerationCap);

std::vector<Sequence> orbit(SequenceView seq, OrbitScope scope,
                            std::uint64_t cap = kDefaultEnumerationCap);
std::vector<WeightedSequence> orbit_distinct(SequenceView seq, OrbitScope scope,
                                             std::uint64_t cap = kDefaultEnumerationCap);

// The rotation (z_{i+1}, ..., z_{n+1}, z_1, ..., z_i) for i = 1..n+1; its last
// item is z_i.
void rotation(SequenceView seq, std::size_t i, Sequence& out);

// Visits bags of `size` items over `atoms` atoms as count vectors.
void for_each_composition(std::size_t atoms, std::size_t size,
                          const std::function<void(const std::vector<std::uint32_t>&)>& visit);

}  // namespace univconf
