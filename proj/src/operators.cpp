#include "univconf/operators.hpp"

#include <algorithm>
#include <sstream>

#include "univconf/orbit.hpp"

namespace univconf {

std::string to_string(OperatorMethod m) {
  return m == OperatorMethod::cyclic_fast_path ? "cyclic_fast_path" : "exact_enumeration";
}

namespace {

// Mean kept as scale * scaled so that ratios against very small means
// (below ~1e-300) are formed without underflow.
struct ScaledMean {
  double scale = 0.0;
  double scaled = 0.0;
  bool infinite = false;

  double value() const { return infinite ? kInf : scale * scaled; }

  double ratio(double x, double zero_over_zero) const {
    if (infinite) return std::isinf(x) ? zero_over_zero : 0.0;
    if (scale == 0.0 || scaled == 0.0) return x == 0.0 ? zero_over_zero : kInf;
    if (std::isinf(x)) return kInf;
    return (x / scale) / scaled;
  }
};

class MeanAccumulator {
 public:
  void add(double v, double w) {
    if (std::isinf(v)) infinite_ = true;
    values_.push_back(v);
    weights_.push_back(w);
    total_ += w;
  }

  ScaledMean finish() const {
    ScaledMean m;
    if (infinite_) {
      m.infinite = true;
      return m;
    }
    double top = 0.0;
    for (double v : values_) top = std::max(top, v);
    if (top == 0.0) return m;
    CompensatedSum s;
    for (std::size_t i = 0; i < values_.size(); ++i) s.add(values_[i] / top * weights_[i]);
    m.scale = top;
    m.scaled = s.value() / total_;
    return m;
  }

 private:
  std::vector<double> values_;
  std::vector<double> weights_;
  double total_ = 0.0;
  bool infinite_ = false;
};

ScaledMean scaled_permutation_mean(const Predictor& e, SequenceView seq, std::uint64_t cap) {
  MeanAccumulator acc;
  for_each_distinct(
      seq, OrbitScope::all,
      [&](SequenceView s, std::uint64_t w) { acc.add(e.eval(s), static_cast<double>(w)); }, cap);
  return acc.finish();
}

ScaledMean scaled_rotation_mean(const Predictor& e, SequenceView seq) {
  MeanAccumulator acc;
  Sequence rot;
  for (std::size_t i = 1; i <= seq.size(); ++i) {
    rotation(seq, i, rot);
    acc.add(e.eval(rot), 1.0);
  }
  return acc.finish();
}

ScaledMean scaled_training_mean(const Predictor& e, SequenceView seq, std::uint64_t cap) {
  MeanAccumulator acc;
  for_each_distinct(
      seq, OrbitScope::train_only,
      [&](SequenceView s, std::uint64_t w) { acc.add(e.eval(s), static_cast<double>(w)); }, cap);
  return acc.finish();
}

Predictor memoized(const Predictor& e, const OperatorOptions& options) {
  if (e.table() || !tabulable(e.space(), e.n(), options.memo_cap)) return e;
  return tabulate(e, options.memo_cap);
}

void require_e(const Predictor& e, const char* op) {
  if (e.flavor() != Flavor::e) throw FlavorError(std::string(op) + " needs an e-flavor predictor");
}

void require_cap(std::uint64_t size, std::uint64_t cap, const char* what) {
  if (size > cap) throw EnumerationCapError(what, size, cap);
}

bool use_fast_path(const Predictor& e, const OperatorOptions& options) {
  return options.allow_fast_path && e.train_invariant();
}

}  // namespace

double permutation_mean(const Predictor& e, SequenceView seq, std::uint64_t cap) {
  return scaled_permutation_mean(e, seq, cap).value();
}

double rotation_mean(const Predictor& e, SequenceView seq) {
  return scaled_rotation_mean(e, seq).value();
}

double training_mean(const Predictor& e, SequenceView seq, std::uint64_t cap) {
  return scaled_training_mean(e, seq, cap).value();
}

double ratio_or(double x, double mean, double zero_over_zero) {
  if (std::isinf(mean)) return std::isinf(x) ? zero_over_zero : 0.0;
  if (mean == 0.0) return x == 0.0 ? zero_over_zero : kInf;
  return x / mean;
}

OperatorResult avg_all(const Predictor& e, const OperatorOptions& options) {
  require_e(e, "avg_all");
  const Predictor base = memoized(e, options);
  Structure s{true, true, e.label_only()};
  if (use_fast_path(e, options)) {
    EvalFn f = [base](SequenceView seq) { return scaled_rotation_mean(base, seq).value(); };
    return {Predictor(e.space_ptr(), e.n(), Flavor::e, s, std::move(f), e.name() + "^i"),
            OperatorMethod::cyclic_fast_path, e.arity()};
  }
  const std::uint64_t size = factorial_u64(e.arity());
  require_cap(size, options.enumeration_cap, "avg_all over (n+1)! permutations");
  const std::uint64_t cap = options.enumeration_cap;
  EvalFn f = [base, cap](SequenceView seq) { return scaled_permutation_mean(base, seq, cap).value(); };
  return {Predictor(e.space_ptr(), e.n(), Flavor::e, s, std::move(f), e.name() + "^i"),
          OperatorMethod::exact_enumeration, size};
}

OperatorResult relative_deviation(const Predictor& e, const OperatorOptions& options) {
  require_e(e, "relative_deviation");
  const Predictor base = memoized(e, options);
  Structure s{e.train_invariant(), e.fully_invariant(), e.label_only()};
  if (use_fast_path(e, options)) {
    // Denominator from the n+1 rotations; 0/0 := 1.
    EvalFn f = [base](SequenceView seq) {
      return scaled_rotation_mean(base, seq).ratio(base.eval(seq), 1.0);
    };
    return {Predictor(e.space_ptr(), e.n(), Flavor::e, s, std::move(f), e.name() + "^X"),
            OperatorMethod::cyclic_fast_path, e.arity() + 1};
  }
  const std::uint64_t size = factorial_u64(e.arity());
  require_cap(size, options.enumeration_cap, "relative_deviation over (n+1)! permutations");
  const std::uint64_t cap = options.enumeration_cap;
  EvalFn f = [base, cap](SequenceView seq) {
    return scaled_permutation_mean(base, seq, cap).ratio(base.eval(seq), 1.0);
  };
  return {Predictor(e.space_ptr(), e.n(), Flavor::e, s, std::move(f), e.name() + "^X"),
          OperatorMethod::exact_enumeration, size == kSaturated ? size : size + 1};
}

OperatorResult avg_train(const Predictor& e, const OperatorOptions& options) {
  require_e(e, "avg_train");
  Structure s{true, e.fully_invariant(), e.label_only()};
  if (use_fast_path(e, options)) {
    // Averaging a constant training orbit.
    return {e.with_structure(s).with_name(e.name() + "^t"), OperatorMethod::exact_enumeration, 1};
  }
  const std::uint64_t size = factorial_u64(e.n());
  require_cap(size, options.enumeration_cap, "avg_train over n! permutations");
  const Predictor base = memoized(e, options);
  const std::uint64_t cap = options.enumeration_cap;
  EvalFn f = [base, cap](SequenceView seq) { return scaled_training_mean(base, seq, cap).value(); };
  return {Predictor(e.space_ptr(), e.n(), Flavor::e, s, std::move(f), e.name() + "^t"),
          OperatorMethod::exact_enumeration, size};
}

OperatorResult conformalize(const Predictor& e, const OperatorOptions& options) {
  require_e(e, "conformalize");
  OperatorResult t = avg_train(e, options);
  OperatorResult x = relative_deviation(t.predictor, options);
  x.predictor = x.predictor.with_name(e.name() + "^tX");
  x.cost = saturating_mul(t.cost, x.cost);
  // The fast path is only reported for input that was itself train-invariant.
  if (!e.train_invariant()) x.method = OperatorMethod::exact_enumeration;
  return x;
}

std::vector<std::string> parse_operator_chain(std::string_view chain) {
  std::vector<std::string> ops;
  std::stringstream ss{std::string(chain)};
  std::string token;
  while (std::getline(ss, token, ',')) {
    token.erase(std::remove_if(token.begin(), token.end(), [](unsigned char c) { return std::isspace(c); }),
                token.end());
    if (token.empty()) continue;
    if (token != "i" && token != "x" && token != "t" && token != "tx")
      throw DomainError("unknown operator '" + token + "' (expected i, x, t or tx)");
    ops.push_back(token);
  }
  if (ops.empty()) throw DomainError("empty operator chain");
  return ops;
}

Predictor apply_operators(const Predictor& e, std::string_view chain,
                          const OperatorOptions& options) {
  Predictor current = e;
  for (const auto& op : parse_operator_chain(chain)) {
    if (op == "i")
      current = avg_all(current, options).predictor;
    else if (op == "x")
      current = relative_deviation(current, options).predictor;
    else if (op == "t")
      current = avg_train(current, options).predictor;
    else
      current = conformalize(current, options).predictor;
  }
  return current;
}

}  // namespace univconf
