#include "univconf/predictor_io.hpp"

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

namespace univconf {

namespace {

[[noreturn]] void fail(const std::string& origin, std::size_t line, const std::string& msg) {
  throw Error(origin + ":" + std::to_string(line) + ": " + msg);
}

double parse_value(const std::string& tok, const std::string& origin, std::size_t line) {
  if (tok == "inf" || tok == "+inf" || tok == "Inf") return kInf;
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    fail(origin, line, "bad value '" + tok + "'");
  }
}

std::string format_value(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Predictor read_predictor(std::istream& in, const std::string& origin) {
  std::vector<std::string> objects, labels;
  std::optional<std::size_t> n;
  std::optional<Flavor> flavor;
  std::optional<Structure> flags;
  std::optional<double> fallback;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  bool in_rows = false;

  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::vector<std::string> toks;
    for (std::string t; ls >> t;) toks.push_back(t);
    if (toks.empty()) continue;
    if (in_rows) {
      rows.emplace_back(lineno, std::move(toks));
      continue;
    }
    const std::string key = toks[0];
    std::vector<std::string> rest(toks.begin() + 1, toks.end());
    if (key == "objects") {
      objects = rest;
    } else if (key == "labels") {
      labels = rest;
    } else if (key == "n") {
      if (rest.size() != 1) fail(origin, lineno, "n takes one value");
      n = static_cast<std::size_t>(std::stoul(rest[0]));
    } else if (key == "flavor") {
      if (rest.size() != 1) fail(origin, lineno, "flavor takes one value");
      flavor = parse_flavor(rest[0]);
    } else if (key == "flags") {
      Structure s;
      for (const auto& f : rest) {
        if (f == "train_invariant") s.train_invariant = true;
        else if (f == "fully_invariant") s.fully_invariant = s.train_invariant = true;
        else if (f == "label_only") s.label_only = true;
        else if (f != "none") fail(origin, lineno, "unknown flag '" + f + "'");
      }
      flags = s;
    } else if (key == "default") {
      if (rest.size() != 1) fail(origin, lineno, "default takes one value");
      fallback = parse_value(rest[0], origin, lineno);
    } else if (key == "rows") {
      in_rows = true;
    } else {
      fail(origin, lineno, "unknown header key '" + key + "'");
    }
  }
  if (objects.empty()) objects = {"x"};
  if (labels.size() < 2) throw Error(origin + ": need at least two labels");
  if (!n || *n < 1) throw Error(origin + ": missing or invalid n");
  if (!flavor) throw Error(origin + ": missing flavor");
  if (!flags) throw Error(origin + ": missing flags");

  const auto space = std::make_shared<const ExampleSpace>(objects, labels);
  const std::size_t len = *n + 1;
  const std::uint64_t size = sequence_count(*space, len);
  if (size > kDefaultTableCap) throw EnumerationCapError(origin + ": table", size, kDefaultTableCap);
  std::vector<double> values(size, fallback.value_or(std::numeric_limits<double>::quiet_NaN()));

  for (const auto& [line, toks] : rows) {
    const auto comma = std::find(toks.begin(), toks.end(), std::string(","));
    const bool has_objects = comma != toks.end();
    const std::size_t label_tokens = has_objects ? std::size_t(comma - toks.begin()) : toks.size() - 1;
    if (label_tokens != len) fail(origin, line, "expected " + std::to_string(len) + " labels");
    if (has_objects && std::size_t(toks.end() - comma) != len + 2)
      fail(origin, line, "expected " + std::to_string(len) + " objects after ','");
    const double v = parse_value(toks.back(), origin, line);
    if (!value_in_range(*flavor, v)) fail(origin, line, "value out of range for the flavor");
    Sequence seq(len);
    for (std::size_t i = 0; i < len; ++i) {
      const auto y = space->find_label(toks[i]);
      if (!y) fail(origin, line, "unknown label '" + toks[i] + "'");
      seq[i].label = *y;
      if (has_objects) {
        const auto x = space->find_object(toks[label_tokens + 1 + i]);
        if (!x) fail(origin, line, "unknown object '" + toks[label_tokens + 1 + i] + "'");
        seq[i].object = *x;
      }
    }
    if (has_objects || space->object_count() == 1) {
      values[sequence_code(*space, seq)] = v;
      continue;
    }
    // Every object assignment.
    const std::uint64_t assignments = saturating_pow(space->object_count(), len);
    for (std::uint64_t a = 0; a < assignments; ++a) {
      std::uint64_t r = a;
      for (std::size_t i = 0; i < len; ++i) {
        seq[i].object = static_cast<std::uint32_t>(r % space->object_count());
        r /= space->object_count();
      }
      values[sequence_code(*space, seq)] = v;
    }
  }
  for (std::uint64_t c = 0; c < size; ++c)
    if (std::isnan(values[c])) throw Error(origin + ": no row for sequence code " + std::to_string(c));

  Predictor pred = make_table_predictor(space, *n, *flavor, *flags, std::move(values), origin);
  const StructureCheck check = check_structure(pred);
  const Structure& s = *flags;
  if ((s.train_invariant && !check.train_invariant) || (s.fully_invariant && !check.fully_invariant) ||
      (s.label_only && !check.label_only))
    throw Error(origin + ": declared flags do not hold");
  return pred;
}

Predictor load_predictor(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open predictor file " + path);
  return read_predictor(in, path);
}

void write_predictor(std::ostream& out, const Predictor& pred) {
  const ExampleSpace& space = pred.space();
  out << "# " << pred.name() << "\n";
  out << "objects";
  for (const auto& o : space.objects()) out << ' ' << o;
  out << "\nlabels";
  for (const auto& l : space.labels()) out << ' ' << l;
  out << "\nn " << pred.n() << "\nflavor " << to_string(pred.flavor()) << "\nflags";
  const Structure& s = pred.structure();
  if (s.fully_invariant) out << " fully_invariant";
  else if (s.train_invariant) out << " train_invariant";
  if (s.label_only) out << " label_only";
  if (!s.train_invariant && !s.fully_invariant && !s.label_only) out << " none";
  out << "\ndefault 0\nrows\n";
  const bool with_objects = space.object_count() > 1 && !s.label_only;
  for_each_sequence(space, pred.arity(), [&](SequenceView seq) {
    if (!with_objects)
      for (const auto& z : seq)
        if (z.object != 0) return;
    const double v = pred.eval(seq);
    if (v == 0.0) return;
    for (const auto& z : seq) out << space.labels()[z.label] << ' ';
    if (with_objects) {
      out << ',';
      for (const auto& z : seq) out << ' ' << space.objects()[z.object];
      out << ' ';
    }
    out << format_value(v) << '\n';
  });
}

void save_predictor(const std::string& path, const Predictor& pred) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write predictor file " + path);
  write_predictor(out, pred);
  if (!out) throw Error("write failed for " + path);
}

}  // namespace univconf
