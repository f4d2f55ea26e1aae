#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "univconf/constructions.hpp"
#include "univconf/verification.hpp"

namespace univconf {

enum class ReportFormat { json, csv };
std::string to_string(ReportFormat f);
ReportFormat parse_report_format(const std::string& s);

struct ExperimentConfig {
  std::string scenario;
  std::string label;  // report name; defaults to the scenario
  std::optional<std::uint64_t> seed;
  ExperimentConstants constants;
  SearchConfig search;
  unsigned threads = 0;
  std::string out_dir;  // empty: no files written
  std::vector<ReportFormat> formats{ReportFormat::json, ReportFormat::csv};
  // Scenario-specific keys, raw text.
  std::map<std::string, std::string> params;

  // Routes a `key = value` pair to the typed fields or to `params`.
  void set(const std::string& key, const std::string& value);
  // Unknown scenario, unknown keys, invalid constants, missing seed.
  void validate(bool require_seed = true) const;
};

struct SuiteConfig {
  std::vector<ExperimentConfig> runs;
  bool parallel = false;
};

// Flat `key = value` text, '#' comments. Keys before the first section apply
// to every run; each `[name]` section is one run of scenario `name` unless it
// sets `scenario = ...`.
SuiteConfig parse_suite(std::istream& in, const std::string& origin = "<stream>");
SuiteConfig load_suite(const std::string& path);

struct CheckRow {
  std::string name;
  double expected = 0.0;
  double observed = 0.0;
  double tolerance = 0.0;
  // abs: |observed - expected| <= tolerance; le: observed <= expected + tolerance;
  // ge: observed >= expected - tolerance; true: boolean; report: recorded only.
  std::string relation = "abs";
  bool pass = false;
  std::string note;
};

struct Report {
  std::string scenario;
  std::string label;
  std::optional<std::uint64_t> seed;
  std::map<std::string, std::string> inputs;
  std::vector<CheckRow> rows;
  std::vector<std::pair<std::string, Certificate>> certificates;
  std::vector<std::string> methods;
  std::optional<std::string> error;
  double wall_seconds = 0.0;

  bool passed() const;
};

struct ScenarioInfo {
  std::string name;
  std::string summary;
  bool stochastic = false;
  std::vector<std::string> keys;  // accepted scenario-specific keys
};

const std::vector<ScenarioInfo>& scenario_catalog();
const ScenarioInfo* find_scenario(const std::string& name);

// Runs one scenario. Enumeration-cap and domain errors are captured in
// `Report::error`. Writes report files when `out_dir` is set.
Report run_scenario(const ExperimentConfig& cfg);
std::vector<Report> run_suite(const SuiteConfig& suite);

// Sorted keys, 12 significant digits; wall-clock only on request.
void emit_report(const Report& r, ReportFormat format, std::ostream& out,
                 bool include_timing = false);
void write_report_files(const Report& r, const std::string& dir,
                        const std::vector<ReportFormat>& formats, bool include_timing = false);

std::string certificate_json(const Certificate& c, int indent = 2);
std::string suite_summary_json(const std::vector<Report>& reports, int indent = 2);

// 12 significant digits; "inf" / "nan" for non-finite values.
std::string format_number(double v);

}  // namespace univconf
