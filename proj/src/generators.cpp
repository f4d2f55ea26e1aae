#include "univconf/generators.hpp"

#include <algorithm>

namespace univconf {

namespace {

double draw(Flavor flavor, CounterRng& rng, double zero_fraction, double scale) {
  if (rng.uniform() < zero_fraction) return 0.0;
  const double u = 1.0 - rng.uniform();  // (0, 1]
  return flavor == Flavor::e ? scale * u : u;
}

}  // namespace

Predictor random_table(SpacePtr space, std::size_t n, Flavor flavor, CounterRng& rng,
                       double zero_fraction, double scale) {
  const std::uint64_t size = sequence_count(*space, n + 1);
  if (size > kDefaultTableCap) throw EnumerationCapError("random table", size, kDefaultTableCap);
  std::vector<double> values(size);
  for (auto& v : values) v = draw(flavor, rng, zero_fraction, scale);
  const bool label_only = space->object_count() == 1;
  return make_table_predictor(space, n, flavor, {false, false, label_only}, std::move(values),
                              "random");
}

Predictor random_train_invariant_table(SpacePtr space, std::size_t n, Flavor flavor,
                                       CounterRng& rng, double zero_fraction, double scale) {
  const std::uint64_t size = sequence_count(*space, n + 1);
  if (size > kDefaultTableCap) throw EnumerationCapError("random table", size, kDefaultTableCap);
  std::vector<double> values(size, -1.0);
  std::vector<std::uint64_t> canonical(size);
  Sequence sorted;
  std::uint64_t code = 0;
  // Values are drawn in code order for the canonical (sorted-training)
  // representative, then copied to the rest of each training orbit.
  for_each_sequence(*space, n + 1, [&](SequenceView seq) {
    sorted.assign(seq.begin(), seq.end());
    std::sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n));
    canonical[code] = sequence_code(*space, sorted);
    ++code;
  });
  for (std::uint64_t c = 0; c < size; ++c)
    if (canonical[c] == c) values[c] = draw(flavor, rng, zero_fraction, scale);
  for (std::uint64_t c = 0; c < size; ++c) values[c] = values[canonical[c]];
  const bool label_only = space->object_count() == 1;
  return make_table_predictor(space, n, flavor, {true, false, label_only}, std::move(values),
                              "random-ti");
}

Predictor scale_predictor(const Predictor& e, double c) {
  if (e.flavor() != Flavor::e) throw FlavorError("scale_predictor needs an e-flavor predictor");
  if (!(c >= 0.0)) throw DomainError("scale must be nonnegative");
  if (const auto* t = e.table()) {
    std::vector<double> values(*t);
    for (auto& v : values) v *= c;
    return make_table_predictor(e.space_ptr(), e.n(), Flavor::e, e.structure(), std::move(values),
                                e.name());
  }
  const Predictor base = e;
  return Predictor(e.space_ptr(), e.n(), Flavor::e, e.structure(),
                   [base, c](SequenceView s) { return c * base.eval(s); }, e.name());
}

Predictor normalize_randomness(const Predictor& e, const SearchConfig& cfg, double* worst) {
  const Certificate cert = certify_randomness_e(e, cfg);
  if (std::isinf(cert.worst_value)) throw DomainError("cannot normalize an unbounded expectation");
  if (worst) *worst = cert.worst_value;
  if (cert.worst_value <= 0.0) return e;
  return scale_predictor(e, 1.0 / cert.worst_value).with_name(e.name() + "/max");
}

}  // namespace univconf
