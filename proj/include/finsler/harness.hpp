#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "finsler/suites.hpp"

namespace finsler {

inline constexpr int kSchemaVersion = 1;

struct OperationInfo {
  std::string name;
  /// "operation" or "suite".
  std::string kind;
  std::string summary;
  /// Parameter name -> description (with default).
  nlohmann::json params;
  bool needs_metric = true;
};

const std::vector<OperationInfo>& operation_registry();

/// {"families": [...], "operations": [...], "suites": [...]}, keeping only
/// entries whose name contains `filter`.
nlohmann::json list_catalog(const std::string& filter = {});

struct ScenarioConfig {
  std::string name;
  std::optional<nlohmann::json> metric;
  std::string operation;
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;
  double tol_scale = 1.0;
  std::string out_dir = ".";
};

/// Validates the document (schema version, known operation, mandatory seed)
/// and throws ConfigError on any problem.
ScenarioConfig parse_scenario(const nlohmann::json& doc, const std::string& default_name);
ScenarioConfig load_scenario(const std::string& path);

nlohmann::json to_json(const ScenarioConfig& cfg);

struct RunReport {
  nlohmann::json scenario;
  std::vector<Check> checks;
  nlohmann::json results = nlohmann::json::object();
  /// File names relative to the output directory.
  std::vector<std::string> artifacts;
  double wall_time = 0.0;

  bool passed() const;
  nlohmann::json to_json() const;
};

/// Runs the scenario and writes its artifacts into cfg.out_dir. Numerical
/// failures become a failing "error" check; ConfigError propagates.
RunReport run_scenario(const ScenarioConfig& cfg);

/// <out_dir>/<name>.report.json
std::string report_path(const ScenarioConfig& cfg);
void write_report(const RunReport& report, const std::string& path);

}  // namespace finsler
