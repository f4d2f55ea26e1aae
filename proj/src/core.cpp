#include "univconf/core.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "univconf/rng.hpp"

namespace univconf {

namespace {

template <typename T>
bool has_duplicates(const std::vector<T>& v) {
  std::set<T> seen(v.begin(), v.end());
  return seen.size() != v.size();
}

}  // namespace

ExampleSpace::ExampleSpace(std::vector<std::string> objects, std::vector<std::string> labels)
    : objects_(std::move(objects)), labels_(std::move(labels)) {
  if (objects_.empty()) throw DomainError("example space needs at least one object");
  if (labels_.size() < 2) throw DomainError("example space needs at least two labels");
  if (has_duplicates(objects_)) throw DomainError("duplicate object identifier");
  if (has_duplicates(labels_)) throw DomainError("duplicate label identifier");
}

SpacePtr ExampleSpace::labels_only(std::vector<std::string> labels) {
  return std::make_shared<const ExampleSpace>(std::vector<std::string>{"x"}, std::move(labels));
}

SpacePtr ExampleSpace::numbered_labels(std::size_t count) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < count; ++i) labels.push_back(std::to_string(i));
  return labels_only(std::move(labels));
}

std::optional<std::uint32_t> ExampleSpace::find_object(const std::string& name) const {
  auto it = std::find(objects_.begin(), objects_.end(), name);
  if (it == objects_.end()) return std::nullopt;
  return static_cast<std::uint32_t>(it - objects_.begin());
}

std::optional<std::uint32_t> ExampleSpace::find_label(const std::string& name) const {
  auto it = std::find(labels_.begin(), labels_.end(), name);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<std::uint32_t>(it - labels_.begin());
}

Example ExampleSpace::example(std::size_t object, std::size_t label) const {
  if (object >= objects_.size() || label >= labels_.size())
    throw DomainError("example index out of range");
  return {static_cast<std::uint32_t>(object), static_cast<std::uint32_t>(label)};
}

DataSequence::DataSequence(const ExampleSpace& space, Sequence items) : items_(std::move(items)) {
  if (items_.size() < 2) throw DomainError("a data sequence needs n >= 1 training examples");
  for (auto z : items_)
    if (!space.contains(z)) throw DomainError("example outside the space");
}

Sequence label_sequence(std::span<const std::uint32_t> labels, std::uint32_t object) {
  Sequence seq;
  seq.reserve(labels.size());
  for (auto y : labels) seq.push_back({object, y});
  return seq;
}

Bag::Bag(SequenceView seq) : total_(seq.size()) {
  for (auto z : seq) ++counts_[z];
}

std::size_t Bag::count(Example z) const {
  auto it = counts_.find(z);
  return it == counts_.end() ? 0 : it->second;
}

Sequence Bag::arrangement() const {
  Sequence seq;
  seq.reserve(total_);
  for (const auto& [z, c] : counts_) seq.insert(seq.end(), c, z);
  return seq;
}

Bag Bag::without(Example z) const {
  Bag b = *this;
  auto it = b.counts_.find(z);
  if (it == b.counts_.end()) throw DomainError("example not in bag");
  if (--it->second == 0) b.counts_.erase(it);
  --b.total_;
  return b;
}

std::string to_string(Flavor f) { return f == Flavor::e ? "e" : "p"; }

Flavor parse_flavor(const std::string& s) {
  if (s == "e") return Flavor::e;
  if (s == "p") return Flavor::p;
  throw DomainError("unknown flavor '" + s + "'");
}

Predictor::Predictor(SpacePtr space, std::size_t n, Flavor flavor, Structure structure,
                     EvalFn eval, std::string name)
    : space_(std::move(space)),
      n_(n),
      flavor_(flavor),
      structure_(structure),
      eval_(std::move(eval)),
      name_(std::move(name)),
      hint_(std::make_shared<const NullHint>()) {
  if (!space_) throw DomainError("predictor needs an example space");
  if (n_ < 1) throw DomainError("predictor needs n >= 1");
  if (structure_.fully_invariant) structure_.train_invariant = true;
}

double Predictor::operator()(SequenceView seq) const {
  if (seq.size() != arity())
    throw ArityError("predictor expects " + std::to_string(arity()) + " examples, got " +
                     std::to_string(seq.size()));
  for (auto z : seq)
    if (!space_->contains(z)) throw DomainError("example outside the space");
  return eval_(seq);
}

Predictor Predictor::with_hint(NullHint hint) const {
  Predictor p = *this;
  p.hint_ = std::make_shared<const NullHint>(std::move(hint));
  return p;
}

Predictor Predictor::with_name(std::string name) const {
  Predictor p = *this;
  p.name_ = std::move(name);
  return p;
}

Predictor Predictor::with_structure(Structure s) const {
  Predictor p = *this;
  if (s.fully_invariant) s.train_invariant = true;
  p.structure_ = s;
  return p;
}

std::uint64_t sequence_code(const ExampleSpace& space, SequenceView seq) {
  std::uint64_t code = 0;
  std::uint64_t radix = 1;
  for (auto z : seq) {
    code += space.index(z) * radix;
    radix *= space.size();
  }
  return code;
}

Sequence sequence_from_code(const ExampleSpace& space, std::size_t length, std::uint64_t code) {
  Sequence seq(length);
  for (auto& z : seq) {
    z = space.example_at(code % space.size());
    code /= space.size();
  }
  return seq;
}

std::uint64_t sequence_count(const ExampleSpace& space, std::size_t length) {
  return saturating_pow(space.size(), length);
}

void for_each_sequence(const ExampleSpace& space, std::size_t length,
                       const std::function<void(SequenceView)>& visit) {
  const std::size_t base = space.size();
  std::vector<std::size_t> digits(length, 0);
  Sequence seq(length, space.example_at(0));
  while (true) {
    visit(seq);
    std::size_t i = 0;
    while (i < length) {
      if (++digits[i] < base) {
        seq[i] = space.example_at(digits[i]);
        break;
      }
      digits[i] = 0;
      seq[i] = space.example_at(0);
      ++i;
    }
    if (i == length) return;
  }
}

bool tabulable(const ExampleSpace& space, std::size_t n, std::uint64_t table_cap) {
  return sequence_count(space, n + 1) <= table_cap;
}

Predictor make_table_predictor(SpacePtr space, std::size_t n, Flavor flavor, Structure structure,
                               std::vector<double> values, std::string name) {
  const std::uint64_t expected = sequence_count(*space, n + 1);
  if (values.size() != expected)
    throw DomainError("table has " + std::to_string(values.size()) + " entries, expected " +
                      std::to_string(expected));
  for (double v : values)
    if (!value_in_range(flavor, v))
      throw DomainError("table value " + std::to_string(v) + " outside the " + to_string(flavor) +
                        "-flavor range");
  auto table = std::make_shared<const std::vector<double>>(std::move(values));
  const ExampleSpace* raw = space.get();
  EvalFn eval = [table, raw](SequenceView seq) { return (*table)[sequence_code(*raw, seq)]; };
  Predictor p(std::move(space), n, flavor, structure, std::move(eval), std::move(name));
  p.table_ = std::move(table);
  return p;
}

Predictor constant_predictor(SpacePtr space, std::size_t n, Flavor flavor, double value) {
  if (!value_in_range(flavor, value)) throw DomainError("constant outside the flavor range");
  return Predictor(std::move(space), n, flavor, {true, true, true},
                   [value](SequenceView) { return value; }, "constant");
}

Predictor tabulate(const Predictor& pred, std::uint64_t table_cap) {
  if (pred.table()) return pred;
  const std::uint64_t count = sequence_count(pred.space(), pred.arity());
  if (count > table_cap) throw EnumerationCapError("tabulation of Z^{n+1}", count, table_cap);
  std::vector<double> values;
  values.reserve(count);
  for_each_sequence(pred.space(), pred.arity(),
                    [&](SequenceView seq) { values.push_back(pred.eval(seq)); });
  Predictor t = make_table_predictor(pred.space_ptr(), pred.n(), pred.flavor(), pred.structure(),
                                     std::move(values), pred.name());
  return t.with_hint(pred.hint());
}

bool value_in_range(Flavor flavor, double v) {
  if (std::isnan(v)) return false;
  if (flavor == Flavor::e) return v >= 0.0;
  return v >= 0.0 && v <= 1.0;
}

namespace {

bool same_value(double a, double b) {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::abs(a - b) <= kTolerance * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

void check_one(const Predictor& pred, SequenceView seq, CounterRng& rng, StructureCheck& out) {
  const double v = pred.eval(seq);
  Sequence alt(seq.begin(), seq.end());
  const std::size_t n = pred.n();
  auto record = [&](bool& flag) {
    flag = false;
    if (!out.counterexample) out.counterexample = Sequence(seq.begin(), seq.end());
  };
  if (out.train_invariant && n >= 2) {
    // A random transposition of two training positions.
    const auto i = rng.below(n);
    auto j = rng.below(n - 1);
    if (j >= i) ++j;
    std::swap(alt[i], alt[j]);
    if (!same_value(v, pred.eval(alt))) record(out.train_invariant);
    std::swap(alt[i], alt[j]);
  }
  if (out.fully_invariant) {
    const auto i = rng.below(n + 1);
    std::swap(alt[i], alt[n]);
    if (!same_value(v, pred.eval(alt))) record(out.fully_invariant);
    std::swap(alt[i], alt[n]);
  }
  if (out.label_only && pred.space().object_count() > 1) {
    for (auto& z : alt) z.object = static_cast<std::uint32_t>(rng.below(pred.space().object_count()));
    if (!same_value(v, pred.eval(alt))) record(out.label_only);
  }
}

}  // namespace

StructureCheck check_structure(const Predictor& pred, std::uint64_t seed, std::size_t samples,
                               std::uint64_t table_cap) {
  StructureCheck out;
  CounterRng rng(seed, 0x5757, 0);
  if (tabulable(pred.space(), pred.n(), table_cap)) {
    out.exact = true;
    // Transpositions (and single object changes) generate the relevant groups,
    // so checking each of them exhaustively is exact.
    const std::size_t n = pred.n();
    for_each_sequence(pred.space(), pred.arity(), [&](SequenceView seq) {
      const double v = pred.eval(seq);
      Sequence alt(seq.begin(), seq.end());
      auto record = [&](bool& flag) {
        flag = false;
        if (!out.counterexample) out.counterexample = alt;
      };
      if (out.train_invariant)
        for (std::size_t i = 0; i + 1 < n; ++i) {
          std::swap(alt[i], alt[i + 1]);
          if (!same_value(v, pred.eval(alt))) record(out.train_invariant);
          std::swap(alt[i], alt[i + 1]);
        }
      if (out.fully_invariant) {
        std::swap(alt[n - 1], alt[n]);
        if (!same_value(v, pred.eval(alt)) || !out.train_invariant) record(out.fully_invariant);
        std::swap(alt[n - 1], alt[n]);
      }
      if (out.label_only)
        for (std::size_t i = 0; i <= n; ++i) {
          const auto original = alt[i].object;
          for (std::uint32_t o = 0; o < pred.space().object_count(); ++o) {
            alt[i].object = o;
            if (!same_value(v, pred.eval(alt))) record(out.label_only);
          }
          alt[i].object = original;
        }
    });
    if (!out.train_invariant) out.fully_invariant = false;
    return out;
  }
  Sequence seq(pred.arity());
  for (std::size_t s = 0; s < samples; ++s) {
    for (auto& z : seq) z = pred.space().example_at(rng.below(pred.space().size()));
    check_one(pred, seq, rng, out);
  }
  if (!out.train_invariant) out.fully_invariant = false;
  return out;
}

PredictionFunction prediction_function(const Predictor& pred, SequenceView training,
                                       std::uint32_t test_object) {
  if (training.size() != pred.n())
    throw ArityError("training sequence has " + std::to_string(training.size()) +
                     " examples, predictor expects " + std::to_string(pred.n()));
  if (test_object >= pred.space().object_count()) throw DomainError("test object out of range");
  PredictionFunction f;
  f.flavor = pred.flavor();
  Sequence seq(training.begin(), training.end());
  seq.push_back({test_object, 0});
  for (std::uint32_t y = 0; y < pred.space().label_count(); ++y) {
    seq.back().label = y;
    f.values.push_back(pred(seq));
  }
  return f;
}

std::vector<std::uint32_t> prediction_set(const PredictionFunction& f, double alpha) {
  std::vector<std::uint32_t> out;
  if (f.flavor == Flavor::p) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("p-flavor alpha must lie in (0,1)");
    for (std::uint32_t y = 0; y < f.values.size(); ++y)
      if (f.values[y] > alpha) out.push_back(y);
  } else {
    if (!(alpha > 0.0 && std::isfinite(alpha)))
      throw DomainError("e-flavor alpha must lie in (0,inf)");
    for (std::uint32_t y = 0; y < f.values.size(); ++y)
      if (f.values[y] < alpha) out.push_back(y);
  }
  return out;
}

void check_distribution(std::span<const double> q, const char* what) {
  CompensatedSum s;
  for (double x : q) {
    if (!(x >= 0.0) || std::isinf(x)) throw DomainError(std::string(what) + ": negative or invalid mass");
    s.add(x);
  }
  if (std::abs(s.value() - 1.0) > kTolerance)
    throw DomainError(std::string(what) + ": masses sum to " + std::to_string(s.value()));
}

MarkovKernel::MarkovKernel(SpacePtr space, std::vector<std::vector<double>> rows)
    : space_(std::move(space)), rows_(std::move(rows)) {
  if (rows_.size() != space_->size()) throw DomainError("kernel needs one row per example");
  for (const auto& r : rows_) {
    if (r.size() != space_->label_count()) throw DomainError("kernel row has wrong length");
    check_distribution(r, "kernel row");
  }
}

MarkovKernel MarkovKernel::flip(SpacePtr space) {
  if (space->label_count() != 2) throw DomainError("flip kernel needs exactly two labels");
  std::vector<std::vector<double>> rows(space->size(), std::vector<double>(2, 0.0));
  for (std::size_t i = 0; i < space->size(); ++i) rows[i][1 - space->example_at(i).label] = 1.0;
  return MarkovKernel(std::move(space), std::move(rows));
}

MarkovKernel MarkovKernel::uniform_other(SpacePtr space) {
  const std::size_t L = space->label_count();
  std::vector<std::vector<double>> rows(space->size(), std::vector<double>(L, 1.0 / (L - 1)));
  for (std::size_t i = 0; i < space->size(); ++i) rows[i][space->example_at(i).label] = 0.0;
  return MarkovKernel(std::move(space), std::move(rows));
}

MarkovKernel MarkovKernel::uniform_all(SpacePtr space) {
  const std::size_t L = space->label_count();
  std::vector<std::vector<double>> rows(space->size(), std::vector<double>(L, 1.0 / L));
  return MarkovKernel(std::move(space), std::move(rows));
}

bool MarkovKernel::label_only() const {
  const std::size_t L = space_->label_count();
  for (std::size_t i = L; i < rows_.size(); ++i)
    if (rows_[i] != rows_[i % L]) return false;
  return true;
}

ProductModel::ProductModel(SpacePtr space, std::vector<double> q, std::size_t power)
    : space_(std::move(space)), q_(std::move(q)), power_(power) {
  if (q_.size() != space_->size()) throw DomainError("product model needs one mass per example");
  check_distribution(q_, "product model");
  cdf_.resize(q_.size());
  std::partial_sum(q_.begin(), q_.end(), cdf_.begin());
}

ProductModel ProductModel::bernoulli(SpacePtr space, double theta, std::size_t power) {
  if (space->label_count() != 2 || space->object_count() != 1)
    throw DomainError("Bernoulli model needs a single-object binary space");
  if (!(theta >= 0.0 && theta <= 1.0)) throw DomainError("theta must lie in [0,1]");
  return ProductModel(std::move(space), {1.0 - theta, theta}, power);
}

ProductModel ProductModel::from_labels(SpacePtr space, std::vector<double> label_q,
                                       std::size_t power) {
  if (label_q.size() != space->label_count()) throw DomainError("label distribution size mismatch");
  std::vector<double> q(space->size(), 0.0);
  std::copy(label_q.begin(), label_q.end(), q.begin());
  return ProductModel(std::move(space), std::move(q), power);
}

std::vector<double> ProductModel::label_marginal() const {
  std::vector<double> m(space_->label_count(), 0.0);
  for (std::size_t i = 0; i < q_.size(); ++i) m[space_->example_at(i).label] += q_[i];
  return m;
}

Example ProductModel::sample_example(double u) const {
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  std::size_t i = static_cast<std::size_t>(it - cdf_.begin());
  if (i >= q_.size()) i = q_.size() - 1;
  // Never return a zero-mass atom because of rounding at the top of the cdf.
  while (q_[i] == 0.0 && i > 0) --i;
  return space_->example_at(i);
}

}  // namespace univconf
