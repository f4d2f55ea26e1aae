#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "univconf/calibration.hpp"
#include "univconf/constructions.hpp"
#include "univconf/harness.hpp"
#include "univconf/operators.hpp"
#include "univconf/predictor_io.hpp"

namespace py = pybind11;
using namespace univconf;

namespace {

// Accepts a list of labels (single object 0) or of (object, label) pairs.
Sequence to_sequence(const py::sequence& items) {
  Sequence s;
  s.reserve(py::len(items));
  for (const auto& item : items) {
    if (py::isinstance<py::int_>(item)) {
      s.push_back(Example{0, item.cast<std::uint32_t>()});
    } else {
      const auto pair = item.cast<std::pair<std::uint32_t, std::uint32_t>>();
      s.push_back(Example{pair.first, pair.second});
    }
  }
  return s;
}

std::string predictor_text(const Predictor& p) {
  std::ostringstream os;
  write_predictor(os, tabulate(p));
  return os.str();
}

Predictor predictor_from_text(const std::string& text) {
  std::istringstream in(text);
  return read_predictor(in, "<text>");
}

std::string scenario_json(const std::string& name, std::optional<std::uint64_t> seed,
                          const std::map<std::string, std::string>& params) {
  ExperimentConfig cfg;
  cfg.scenario = name;
  cfg.seed = seed;
  for (const auto& [k, v] : params) cfg.set(k, v);
  std::ostringstream os;
  emit_report(run_scenario(cfg), ReportFormat::json, os);
  return os.str();
}

}  // namespace

PYBIND11_MODULE(_univconf, m) {
  m.doc() = "Conformal and randomness e/p-predictors over finite example spaces";

  py::register_exception<Error>(m, "UnivconfError", PyExc_ValueError);

  py::enum_<Flavor>(m, "Flavor").value("e", Flavor::e).value("p", Flavor::p);
  py::enum_<Verdict>(m, "Verdict")
      .value("pass_exact", Verdict::pass_exact)
      .value("pass_numeric", Verdict::pass_numeric)
      .value("fail", Verdict::fail)
      .value("indeterminate", Verdict::indeterminate);

  py::class_<ExampleSpace, std::shared_ptr<ExampleSpace>>(m, "ExampleSpace")
      .def(py::init<std::vector<std::string>, std::vector<std::string>>(), py::arg("objects"), py::arg("labels"))
      .def_property_readonly("objects", &ExampleSpace::objects)
      .def_property_readonly("labels", &ExampleSpace::labels)
      .def_property_readonly("size", &ExampleSpace::size);
  m.def("labels_only", [](std::vector<std::string> labels) {
    return std::const_pointer_cast<ExampleSpace>(ExampleSpace::labels_only(std::move(labels)));
  });
  m.def("numbered_labels", [](std::size_t count) {
    return std::const_pointer_cast<ExampleSpace>(ExampleSpace::numbered_labels(count));
  });

  py::class_<Predictor>(m, "Predictor")
      .def_property_readonly("n", &Predictor::n)
      .def_property_readonly("flavor", &Predictor::flavor)
      .def_property_readonly("name", &Predictor::name)
      .def_property_readonly("train_invariant", &Predictor::train_invariant)
      .def_property_readonly("fully_invariant", &Predictor::fully_invariant)
      .def_property_readonly("label_only", &Predictor::label_only)
      .def_property_readonly("labels", [](const Predictor& p) { return p.space().labels(); })
      .def("__call__", [](const Predictor& p, const py::sequence& s) { return p(to_sequence(s)); })
      .def("to_text", &predictor_text);
  m.def("predictor_from_text", &predictor_from_text);
  m.def("load_predictor", &load_predictor);
  m.def("save_predictor", [](const std::string& path, const Predictor& p) { save_predictor(path, tabulate(p)); });
  m.def("table_predictor",
        [](std::shared_ptr<ExampleSpace> space, std::size_t n, Flavor f, std::vector<double> values) {
          return make_table_predictor(space, n, f, {}, std::move(values));
        });
  m.def("constant_predictor", [](std::shared_ptr<ExampleSpace> space, std::size_t n, Flavor f, double v) {
    return constant_predictor(space, n, f, v);
  });

  py::class_<MarkovKernel>(m, "MarkovKernel")
      .def_static("flip", [](const Predictor& p) { return MarkovKernel::flip(p.space_ptr()); })
      .def_static("uniform_other", [](const Predictor& p) { return MarkovKernel::uniform_other(p.space_ptr()); })
      .def_static("uniform_all", [](const Predictor& p) { return MarkovKernel::uniform_all(p.space_ptr()); });

  py::class_<Certificate>(m, "Certificate")
      .def_property_readonly("verdict", [](const Certificate& c) { return c.verdict; })
      .def_property_readonly("target", [](const Certificate& c) { return to_string(c.target); })
      .def_property_readonly("method", [](const Certificate& c) { return to_string(c.method); })
      .def_readonly("worst_value", &Certificate::worst_value)
      .def_readonly("margin", &Certificate::margin)
      .def_property_readonly("passed", &Certificate::passed)
      .def_property_readonly("witness_distribution",
                             [](const Certificate& c) -> std::optional<std::vector<double>> {
                               if (c.witness && c.witness->distribution) return *c.witness->distribution;
                               return std::nullopt;
                             })
      .def("to_json", [](const Certificate& c) { return certificate_json(c); });

  m.def("certify", [](const Predictor& p, const std::string& cls) {
    switch (parse_target_class(cls)) {
      case TargetClass::exch_e: return certify_exchangeability_e(p);
      case TargetClass::rand_e: return certify_randomness_e(p);
      case TargetClass::invariant_rand_e: return certify_invariant_randomness_e(p);
      case TargetClass::exch_p: return certify_exchangeability_p(p);
      case TargetClass::rand_p: return certify_randomness_p(p);
      case TargetClass::test_cond_exch_e: return certify_test_conditional(p);
    }
    throw DomainError("unknown class");
  }, py::arg("predictor"), py::arg("target"));

  m.def("avg_all", [](const Predictor& e) { return avg_all(e).predictor; });
  m.def("relative_deviation", [](const Predictor& e) { return relative_deviation(e).predictor; });
  m.def("avg_train", [](const Predictor& e) { return avg_train(e).predictor; });
  m.def("conformalize", [](const Predictor& e) { return conformalize(e).predictor; });
  m.def("apply_operators", [](const Predictor& e, const std::string& chain) { return apply_operators(e, chain); });

  m.def("power_calibrator_integral", [](double delta) { return Calibrator::power(delta).integral(); });
  m.def("calibrate_power", [](const Predictor& p, double delta) {
    return calibrate_predictor(Calibrator::power(delta), p);
  });
  m.def("calibrate_e_to_p", [](const Predictor& e) { return calibrate_predictor(Calibrator::e_to_p(), e); });

  m.def("eq13_value", &eq13_value);
  m.def("eq13_predictor", [](std::size_t n) { return eq13_predictor(n); });
  m.def("laplace_predictor", [](std::size_t n) { return laplace_predictor(n); });
  m.def("theorem1_G", [](const Predictor& e, const MarkovKernel& b) { return theorem1_G(e, b); });
  m.def("theorem2_value_at_zero", [](std::size_t n, double c) { return theorem2_counterexample(n, c).value_at_zero; });
  m.def("theorem2_certificate", [](std::size_t n, double c) { return theorem2_counterexample(n, c).certificate; });
  m.def("theorem3_E", &theorem3_E);
  m.def("theorem4_E", &theorem4_E);
  m.def("theorem5_G", [](const Predictor& e, const MarkovKernel& b) { return theorem5_G(e, b); });
  m.def("corollary2_G", [](const Predictor& e, const MarkovKernel& b) { return corollary2_G(e, b); });

  m.def("modular_sum_probability", [](std::vector<double> q, std::size_t power) {
    return modular_sum_probability(q, power);
  });
  m.def("mc_expectation", [](const Predictor& e, std::vector<double> q, std::size_t trials, std::uint64_t seed) {
    const MonteCarloEstimate r =
        mc_expectation(e, ProductModel(e.space_ptr(), std::move(q), e.arity()), trials, seed);
    return std::make_pair(r.mean, r.standard_error);
  });

  m.def("scenarios", [] {
    std::vector<std::string> names;
    for (const auto& s : scenario_catalog()) names.push_back(s.name);
    return names;
  });
  m.def("run_scenario_json", &scenario_json, py::arg("name"), py::arg("seed") = py::none(),
        py::arg("params") = std::map<std::string, std::string>{});
  m.def("format_number", &format_number);
}
