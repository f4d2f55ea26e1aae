#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "univconf/harness.hpp"

using namespace univconf;

namespace {

ExperimentConfig config(const std::string& scenario, std::optional<std::uint64_t> seed = std::nullopt) {
  ExperimentConfig cfg;
  cfg.scenario = scenario;
  cfg.seed = seed;
  return cfg;
}

std::string render(const Report& r, ReportFormat f) {
  std::ostringstream os;
  emit_report(r, f, os);
  return os.str();
}

const CheckRow* row(const Report& r, const std::string& name) {
  for (const auto& x : r.rows)
    if (x.name == name) return &x;
  return nullptr;
}

}  // namespace

TEST_CASE("number formatting") {
  CHECK(format_number(1.0 / 3.0) == "0.333333333333");
  CHECK(format_number(2.0) == "2");
  CHECK(format_number(kInf) == "inf");
  CHECK(format_number(1e-20) == "1e-20");
}

TEST_CASE("laplace-gap scenario") {
  ExperimentConfig cfg = config("laplace-gap");
  cfg.set("ns", "10,100,1000");
  const Report r = run_scenario(cfg);
  CHECK(r.passed());
  const CheckRow* x = row(r, "E/E^X at (0,...,0,1) n=100");
  REQUIRE(x);
  CHECK(std::abs(x->observed - 2.704813829421526) < 1e-9);
  CHECK(r.inputs.at("ns") == "10,100,1000");
}

TEST_CASE("thm2-refute scenario") {
  const Report r = run_scenario(config("thm2-refute"));
  CHECK(r.passed());
  REQUIRE(!r.certificates.empty());
  CHECK(r.certificates.front().second.verdict == Verdict::fail);
  CHECK(find_scenario("thm2-refutation"));
}

TEST_CASE("operators-laws scenario is deterministic") {
  ExperimentConfig cfg = config("operators-laws", 17);
  cfg.set("tables", "10");
  const Report a = run_scenario(cfg), b = run_scenario(cfg);
  CHECK(a.passed());
  CHECK(render(a, ReportFormat::json) == render(b, ReportFormat::json));
  std::size_t commutation = 0;
  for (const auto& x : a.rows) commutation += x.name.rfind("(E^t)^X", 0) == 0 && x.pass;
  CHECK(commutation == 10);
  const std::string csv = render(a, ReportFormat::csv);
  CHECK(std::size_t(std::count(csv.begin(), csv.end(), '\n')) == a.rows.size() + 1);
  ExperimentConfig other = cfg;
  other.seed = 18;
  CHECK(render(run_scenario(other), ReportFormat::json) != render(a, ReportFormat::json));
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(config("no-such").validate(), DomainError);
  CHECK_THROWS_AS(config("thm1-mc").validate(), DomainError);  // seed required
  ExperimentConfig bad = config("laplace-gap");
  bad.set("bogus", "1");
  CHECK_THROWS_AS(bad.validate(), DomainError);
  ExperimentConfig consts = config("laplace-gap");
  consts.set("delta", "1.5");
  CHECK_THROWS_AS(consts.validate(), DomainError);
  CHECK_THROWS_AS(config("laplace-gap").set("seed", "x"), DomainError);
}

TEST_CASE("suite parsing") {
  std::istringstream in(
      "seed = 5\nthreads = 1\n# comment\n[laplace-gap]\nns = 10, 20\n[small]\nscenario = operators-laws\n"
      "tables = 2\ndelta = 0.25\n");
  const SuiteConfig s = parse_suite(in);
  REQUIRE(s.runs.size() == 2);
  CHECK(s.runs[0].scenario == "laplace-gap");
  CHECK(s.runs[0].params.at("ns") == "10, 20");
  CHECK(s.runs[1].label == "small");
  CHECK(s.runs[1].seed == 5u);
  CHECK(s.runs[1].constants.delta == 0.25);
  const std::vector<Report> reports = run_suite(s);
  CHECK(reports[0].passed());
  CHECK(reports[1].passed());
  CHECK(suite_summary_json(reports).find("\"passed\": true") != std::string::npos);
  std::istringstream broken("[laplace-gap]\nns 10\n");
  CHECK_THROWS_AS(parse_suite(broken), Error);
}

TEST_CASE("report files") {
  const auto dir = std::filesystem::temp_directory_path() / "univconf_report_test";
  std::filesystem::remove_all(dir);
  ExperimentConfig cfg = config("laplace-gap");
  cfg.out_dir = dir.string();
  const Report r = run_scenario(cfg);
  CHECK(std::filesystem::exists(dir / "laplace-gap.json"));
  CHECK(std::filesystem::exists(dir / "laplace-gap.csv"));
  std::filesystem::remove_all(dir);
  CHECK(render(r, ReportFormat::json).find("wall_seconds") == std::string::npos);
}

TEST_CASE("cap errors are reported") {
  ExperimentConfig cfg = config("eq13-certification");
  cfg.set("n_min", "12");
  cfg.set("n_max", "12");
  cfg.set("orbit_n_max", "12");
  const Report r = run_scenario(cfg);
  CHECK_FALSE(r.passed());
  REQUIRE(r.error);
  CHECK(r.error->find("requires cap") != std::string::npos);
}
