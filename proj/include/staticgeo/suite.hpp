#pragma once

// Suite runner: a configuration selects a metric, a potential and a list of
// check suites; running it produces a report of records, each tied to the
// statement it verifies. Reports render as JSON, CSV or Markdown.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "staticgeo/chart_metrics.hpp"

namespace staticgeo {

inline constexpr int kReportSchemaVersion = 1;

enum class PotentialMode { Exact, Solve };

struct SolveSettings {
  double inner_radius = 0.0;  // 0: chosen from the metric
  double outer_radius = 0.0;
  int n_xi = 48;
  int n_theta = 12;
  int n_phi = 16;
};

struct SuiteConfig {
  std::string metric = "euclidean";
  ParamMap params;
  PotentialMode potential = PotentialMode::Exact;
  SolveSettings solve;
  std::vector<std::string> suites;
  std::map<std::string, double> tolerances;  // overrides of the per-check defaults
  std::vector<double> radii = {8, 16, 32, 64};  // mass extrapolation radii
  std::uint64_t seed = 1;
  int jobs = 1;
  // static suite
  int static_samples = 100;
  // ode suite
  int ode_trials = 200;
  double ode_t_end = 100.0;
  // surface suite
  std::vector<double> surface_radii;  // empty: chosen from the metric
  // flow suite
  double flow_r0 = 0.0;  // 0: chosen from the metric
  double flow_t_end = 1.0;
  int flow_steps = 200;
  // plateau suite (a linear potential on its own metric)
  std::string plateau_metric = "euclidean";
  ParamMap plateau_params;
  std::vector<double> plateau_potential = {0.0, 0.0, 1.0, 0.0};  // a_1, a_2, a_3, c
  std::vector<double> plateau_radii = {4, 8, 16};
  double plateau_r0 = 2.0;
  // outputs
  std::string out_dir;
  std::vector<std::string> formats = {"json"};
};

// All suite names in execution order.
const std::vector<std::string>& suite_names();

// Default tolerance of a check ("suite.check").
double default_tolerance(const std::string& check);

// Parses YAML (JSON is accepted as a subset). Throws InvalidArgument/UnknownName.
SuiteConfig parse_suite_config(const std::string& text);
SuiteConfig load_suite_config(const std::filesystem::path& path);
void validate_suite_config(const SuiteConfig& config);
std::string suite_config_json(const SuiteConfig& config);

struct CheckRecord {
  std::string suite;
  std::string name;
  std::string paper_anchor;
  double value = 0.0;   // NaN when the check could not be evaluated
  double target = 0.0;  // expected value
  double error = 0.0;   // |value - target| (NaN when unavailable)
  double tolerance = 0.0;
  bool pass = false;
  std::string message;  // error text for failed evaluations
};

struct SuiteReport {
  SuiteConfig config;
  std::vector<CheckRecord> records;
  std::map<std::string, std::string> environment;
  std::uint64_t seed = 0;
  std::string started;  // UTC timestamp
  double wall_time = 0.0;
  bool pass = true;  // all records pass
};

using ProgressFn = std::function<void(const std::string&)>;

// Runs the configured suites (concurrently up to config.jobs). Module errors
// become failed records; only an invalid configuration throws.
SuiteReport run_suite(const SuiteConfig& config, const ProgressFn& progress = {});

// Exit-code contract: 0 all pass, 1 some check failed.
int report_exit_code(const SuiteReport& report);

// JSON report; the "timestamp" object (start time and wall time) is the only
// run-dependent field and is omitted when include_timestamp is false.
std::string report_json(const SuiteReport& report, bool include_timestamp = true);

// "csv" or "markdown" tables of the records (lossless values), or "json".
std::string render_tables(const SuiteReport& report, const std::string& format);

// Writes report.<ext> for every configured format into config.out_dir.
std::vector<std::filesystem::path> write_report_files(const SuiteReport& report);

}  // namespace staticgeo
