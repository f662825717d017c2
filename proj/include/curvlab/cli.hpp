#pragma once

// Scenario runner: flat "key = value" configs, one named experiment per run,
// a CSV table and a versioned JSON summary per run.

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace curvlab {

inline constexpr int kJsonFormatVersion = 1;

struct ScenarioConfig {
  std::string scenario;
  std::map<std::string, std::string> params;
  std::string out_dir = ".";
  std::optional<int> grid;
  unsigned seed = 0;
  bool strict = false;
};

/// Names accepted as scenarios.
const std::vector<std::string>& scenario_names();

/// Parses config text. Global lines and the section named after the scenario
/// are kept; other sections are skipped. A global "scenario = name" line fills
/// in the scenario when none is given. Throws ConfigInvalid.
ScenarioConfig parse_config(const std::string& text, const std::string& scenario = "");

struct Check {
  std::string name;
  std::string identity;  // what the residual measures
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct RunResult {
  int exit_code = 0;
  std::string csv;
  std::string json;
  std::vector<Check> checks;
  std::vector<std::string> warnings;
  std::vector<std::string> failures;  // names of failed checks or errors
};

/// Runs without touching the filesystem. Throws ConfigInvalid on unknown
/// keys or values outside the documented ranges.
RunResult run_scenario(const ScenarioConfig& cfg);

/// Runs, writes <out>/<scenario>.csv and .json, and returns 0, 1 (a check
/// failed) or 2 (invalid configuration).
int run(const ScenarioConfig& cfg, std::ostream& log);

/// Parameter tables and CSV columns for --help.
std::string scenario_help();

}  // namespace curvlab
