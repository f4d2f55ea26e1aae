#include "univconf/orbit.hpp"

#include <algorithm>
#include <numeric>

namespace univconf {

std::uint64_t naive_orbit_size(std::size_t length, OrbitScope scope) {
  return factorial_u64(scope == OrbitScope::all ? length : length - 1);
}

std::uint64_t distinct_orbit_size(SequenceView seq, OrbitScope scope) {
  const auto span = scope == OrbitScope::all ? seq : seq.first(seq.size() - 1);
  Bag bag(span);
  std::vector<std::size_t> counts;
  for (const auto& [z, c] : bag.counts()) counts.push_back(c);
  return multinomial_u64(counts);
}

void for_each_permutation(SequenceView seq, OrbitScope scope,
                          const std::function<void(SequenceView)>& visit, std::uint64_t cap) {
  const std::uint64_t size = naive_orbit_size(seq.size(), scope);
  if (size > cap) throw EnumerationCapError("naive orbit enumeration", size, cap);
  const std::size_t m = scope == OrbitScope::all ? seq.size() : seq.size() - 1;
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  Sequence out(seq.begin(), seq.end());
  do {
    for (std::size_t i = 0; i < m; ++i) out[i] = seq[idx[i]];
    visit(out);
  } while (std::next_permutation(idx.begin(), idx.end()));
}

void for_each_distinct(SequenceView seq, OrbitScope scope,
                       const std::function<void(SequenceView, std::uint64_t)>& visit,
                       std::uint64_t cap) {
  const std::size_t m = scope == OrbitScope::all ? seq.size() : seq.size() - 1;
  Sequence out(seq.begin(), seq.end());
  std::sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(m));
  // Every distinct arrangement is hit by prod(run!) permutations.
  std::uint64_t weight = 1;
  for (std::size_t i = 1, run = 1; i < m; ++i) {
    run = out[i] == out[i - 1] ? run + 1 : 1;
    weight = saturating_mul(weight, run);
  }
  const std::uint64_t count = distinct_orbit_size(seq, scope);
  if (count > cap) throw EnumerationCapError("distinct orbit enumeration", count, cap);
  do {
    visit(out, weight);
  } while (std::next_permutation(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(m)));
}

std::vector<Sequence> orbit(SequenceView seq, OrbitScope scope, std::uint64_t cap) {
  std::vector<Sequence> out;
  for_each_permutation(seq, scope, [&](SequenceView s) { out.emplace_back(s.begin(), s.end()); },
                       cap);
  return out;
}

std::vector<WeightedSequence> orbit_distinct(SequenceView seq, OrbitScope scope,
                                             std::uint64_t cap) {
  std::vector<WeightedSequence> out;
  for_each_distinct(
      seq, scope,
      [&](SequenceView s, std::uint64_t w) { out.push_back({Sequence(s.begin(), s.end()), w}); },
      cap);
  return out;
}

void rotation(SequenceView seq, std::size_t i, Sequence& out) {
  const std::size_t m = seq.size();
  out.resize(m);
  for (std::size_t j = 0; j < m; ++j) out[j] = seq[(i + j) % m];
}

void for_each_composition(std::size_t atoms, std::size_t size,
                          const std::function<void(const std::vector<std::uint32_t>&)>& visit) {
  std::vector<std::uint32_t> counts(atoms, 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t a, std::size_t left) {
    if (a + 1 == atoms) {
      counts[a] = static_cast<std::uint32_t>(left);
      visit(counts);
      return;
    }
    for (std::size_t c = 0; c <= left; ++c) {
      counts[a] = static_cast<std::uint32_t>(c);
      rec(a + 1, left - c);
    }
  };
  rec(0, size);
}

}  // namespace univconf
