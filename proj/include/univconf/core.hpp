#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "univconf/numeric.hpp"

namespace univconf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the documented domain (alpha range, probability table, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class ArityError : public Error {
 public:
  using Error::Error;
};

class FlavorError : public Error {
 public:
  using Error::Error;
};

// An exact enumeration would exceed the configured cap. `required()` is the
// smallest cap under which the same request would have been accepted.
class EnumerationCapError : public Error {
 public:
  EnumerationCapError(const std::string& what, std::uint64_t required, std::uint64_t cap)
      : Error(what + " (requires cap " + std::to_string(required) + ", configured " +
              std::to_string(cap) + ")"),
        required_(required),
        cap_(cap) {}
  std::uint64_t required() const { return required_; }
  std::uint64_t cap() const { return cap_; }

 private:
  std::uint64_t required_;
  std::uint64_t cap_;
};

inline constexpr std::uint64_t kDefaultEnumerationCap = 3628800;  // 10!
inline constexpr std::uint64_t kDefaultTableCap = std::uint64_t{1} << 22;

struct Example {
  std::uint32_t object = 0;
  std::uint32_t label = 0;
  auto operator<=>(const Example&) const = default;
};

using Sequence = std::vector<Example>;
using SequenceView = std::span<const Example>;

class ExampleSpace {
 public:
  ExampleSpace(std::vector<std::string> objects, std::vector<std::string> labels);

  // Single uninformative object "x".
  static std::shared_ptr<const ExampleSpace> labels_only(std::vector<std::string> labels);
  // Labels "0", "1", ..., "count-1" with a single object.
  static std::shared_ptr<const ExampleSpace> numbered_labels(std::size_t count);

  std::size_t object_count() const { return objects_.size(); }
  std::size_t label_count() const { return labels_.size(); }
  // |Z| = |X| * |Y|.
  std::size_t size() const { return objects_.size() * labels_.size(); }

  const std::vector<std::string>& objects() const { return objects_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<std::uint32_t> find_object(const std::string& name) const;
  std::optional<std::uint32_t> find_label(const std::string& name) const;

  Example example(std::size_t object, std::size_t label) const;
  std::size_t index(Example z) const { return z.object * labels_.size() + z.label; }
  Example example_at(std::size_t index) const {
    return {static_cast<std::uint32_t>(index / labels_.size()),
            static_cast<std::uint32_t>(index % labels_.size())};
  }
  bool contains(Example z) const {
    return z.object < objects_.size() && z.label < labels_.size();
  }

  bool operator==(const ExampleSpace& other) const = default;

 private:
  std::vector<std::string> objects_;
  std::vector<std::string> labels_;
};

using SpacePtr = std::shared_ptr<const ExampleSpace>;

// A checked sequence (z_1, ..., z_{n+1}); the last item is the test example.
class DataSequence {
 public:
  DataSequence(const ExampleSpace& space, Sequence items);

  std::size_t n() const { return items_.size() - 1; }
  std::size_t size() const { return items_.size(); }
  SequenceView view() const { return items_; }
  SequenceView training() const { return SequenceView(items_).first(n()); }
  Example test() const { return items_.back(); }
  const Sequence& items() const { return items_; }

 private:
  Sequence items_;
};

Sequence label_sequence(std::span<const std::uint32_t> labels, std::uint32_t object = 0);

// Multiset of examples.
class Bag {
 public:
  Bag() = default;
  explicit Bag(SequenceView seq);

  std::size_t total() const { return total_; }
  std::size_t count(Example z) const;
  const std::map<Example, std::size_t>& counts() const { return counts_; }
  // Some arrangement of the bag (sorted order).
  Sequence arrangement() const;
  Bag without(Example z) const;

  bool operator==(const Bag& other) const = default;

 private:
  std::map<Example, std::size_t> counts_;
  std::size_t total_ = 0;
};

enum class Flavor { e, p };

std::string to_string(Flavor f);
Flavor parse_flavor(const std::string& s);

struct Structure {
  bool train_invariant = false;
  bool fully_invariant = false;
  bool label_only = false;
  bool operator==(const Structure&) const = default;
};

// Closed-form expectation data a construction can attach to its predictor so
// that randomness certification does not need to enumerate Z^{n+1}.

// E_Q[E] = sum_t coefficient_t * prod_l q_l^{counts_t[l]} with q the label
// marginal of Q. Only meaningful for label-only predictors.
struct LabelPolynomial {
  struct Term {
    std::vector<std::uint32_t> counts;
    double coefficient = 0.0;
  };
  std::vector<Term> terms;
};

// Label-only, train-invariant predictor whose value depends only on the test
// label y and on how often y occurs in the training sequence:
// E = values[y][k_y(training)].
struct TestCountProfile {
  std::vector<std::vector<double>> values;
};

using NullHint = std::variant<std::monostate, LabelPolynomial, TestCountProfile>;

using EvalFn = std::function<double(SequenceView)>;

// Total scoring function on Z^{n+1}, tagged with its flavor and structure.
// Immutable; copies share the evaluation closure.
class Predictor {
 public:
  Predictor(SpacePtr space, std::size_t n, Flavor flavor, Structure structure, EvalFn eval,
            std::string name = {});

  const ExampleSpace& space() const { return *space_; }
  const SpacePtr& space_ptr() const { return space_; }
  std::size_t n() const { return n_; }
  std::size_t arity() const { return n_ + 1; }
  Flavor flavor() const { return flavor_; }
  const Structure& structure() const { return structure_; }
  bool train_invariant() const { return structure_.train_invariant; }
  bool fully_invariant() const { return structure_.fully_invariant; }
  bool label_only() const { return structure_.label_only; }
  const std::string& name() const { return name_; }

  // Checks arity and example ranges.
  double operator()(SequenceView seq) const;
  double eval(SequenceView seq) const { return eval_(seq); }

  const NullHint& hint() const { return *hint_; }
  bool has_hint() const { return !std::holds_alternative<std::monostate>(*hint_); }
  // Dense table when the predictor is table-backed, else nullptr.
  const std::vector<double>* table() const { return table_.get(); }

  Predictor with_hint(NullHint hint) const;
  Predictor with_name(std::string name) const;
  Predictor with_structure(Structure s) const;

 private:
  friend Predictor make_table_predictor(SpacePtr, std::size_t, Flavor, Structure,
                                        std::vector<double>, std::string);
  SpacePtr space_;
  std::size_t n_;
  Flavor flavor_;
  Structure structure_;
  EvalFn eval_;
  std::string name_;
  std::shared_ptr<const NullHint> hint_;
  std::shared_ptr<const std::vector<double>> table_;
};

// Mixed-radix code sum_i index(z_i) |Z|^i.
std::uint64_t sequence_code(const ExampleSpace& space, SequenceView seq);
Sequence sequence_from_code(const ExampleSpace& space, std::size_t length, std::uint64_t code);
// |Z|^{n+1}, saturating.
std::uint64_t sequence_count(const ExampleSpace& space, std::size_t length);
// Visits every sequence of the given length in code order.
void for_each_sequence(const ExampleSpace& space, std::size_t length,
                       const std::function<void(SequenceView)>& visit);

Predictor make_table_predictor(SpacePtr space, std::size_t n, Flavor flavor, Structure structure,
                               std::vector<double> values, std::string name = {});
Predictor constant_predictor(SpacePtr space, std::size_t n, Flavor flavor, double value);
// Evaluates `pred` on all of Z^{n+1} and returns a table-backed copy
// (flags and hint kept). Throws EnumerationCapError above `table_cap`.
Predictor tabulate(const Predictor& pred, std::uint64_t table_cap = kDefaultTableCap);
bool tabulable(const ExampleSpace& space, std::size_t n, std::uint64_t table_cap = kDefaultTableCap);

// Checks the range invariant of the flavor for one value.
bool value_in_range(Flavor flavor, double v);

struct StructureCheck {
  bool train_invariant = true;
  bool fully_invariant = true;
  bool label_only = true;
  bool exact = false;  // true when every sequence was checked
  std::optional<Sequence> counterexample;
};

// Empirically checks the flags: exhaustively when |Z|^{n+1} <= table_cap,
// otherwise on `samples` random sequences and permutations.
StructureCheck check_structure(const Predictor& pred, std::uint64_t seed = 0,
                               std::size_t samples = 2000,
                               std::uint64_t table_cap = kDefaultTableCap);

struct PredictionFunction {
  Flavor flavor = Flavor::e;
  std::vector<double> values;  // indexed by label
};

PredictionFunction prediction_function(const Predictor& pred, SequenceView training,
                                       std::uint32_t test_object);
// p-flavor: {y : f(y) > alpha}, alpha in (0,1); e-flavor: {y : f(y) < alpha}, alpha > 0.
std::vector<std::uint32_t> prediction_set(const PredictionFunction& f, double alpha);

// B(. | z): one distribution over labels per example.
class MarkovKernel {
 public:
  MarkovKernel(SpacePtr space, std::vector<std::vector<double>> rows);

  // Binary label spaces only: B({-y} | (x, y)) = 1.
  static MarkovKernel flip(SpacePtr space);
  // Uniform on Y \ {y}.
  static MarkovKernel uniform_other(SpacePtr space);
  // Uniform on Y.
  static MarkovKernel uniform_all(SpacePtr space);

  const ExampleSpace& space() const { return *space_; }
  std::span<const double> row(Example z) const { return rows_[space_->index(z)]; }
  double operator()(std::uint32_t label, Example z) const { return rows_[space_->index(z)][label]; }
  // Rows depend only on the label of z.
  bool label_only() const;

 private:
  SpacePtr space_;
  std::vector<std::vector<double>> rows_;
};

// Q on Z raised to the power n+1.
class ProductModel {
 public:
  ProductModel(SpacePtr space, std::vector<double> q, std::size_t power);
  // Single-object binary space with Q({label 1}) = theta.
  static ProductModel bernoulli(SpacePtr space, double theta, std::size_t power);
  // Label distribution placed on object 0.
  static ProductModel from_labels(SpacePtr space, std::vector<double> label_q, std::size_t power);

  const ExampleSpace& space() const { return *space_; }
  const std::vector<double>& q() const { return q_; }
  std::size_t power() const { return power_; }
  std::vector<double> label_marginal() const;

  Example sample_example(double u) const;
  // Fills `out` with power() IID draws; u-values come from `uniform`.
  template <typename Rng>
  void sample(Rng& rng, Sequence& out) const {
    out.resize(power_);
    for (auto& z : out) z = sample_example(rng.uniform());
  }

 private:
  SpacePtr space_;
  std::vector<double> q_;
  std::vector<double> cdf_;
  std::size_t power_;
};

void check_distribution(std::span<const double> q, const char* what);

}  // namespace univconf
