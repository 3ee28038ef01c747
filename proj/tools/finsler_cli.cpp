#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "finsler/harness.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

void print_checks(const finsler::RunReport& report) {
  for (const auto& c : report.checks) {
    std::cout << (c.pass ? "  pass " : "  FAIL ") << c.name;
    if (c.relation != finsler::Relation::holds)
      std::cout << "  " << c.value << " vs " << c.threshold;
    if (!c.detail.empty()) std::cout << "  (" << c.detail << ")";
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical Finsler geometry scenarios"};
  app.require_subcommand(1);

  std::vector<std::string> configs;
  std::string out_dir;
  std::uint64_t seed = 0;
  double tol_scale = 1.0;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run scenario configs and write their reports");
  run->add_option("configs", configs, "Scenario JSON files")->required()->check(CLI::ExistingFile);
  auto* out_opt = run->add_option("--out", out_dir, "Output directory (overrides the config)");
  auto* seed_opt = run->add_option("--seed", seed, "Seed (overrides the config)");
  auto* tol_opt = run->add_option("--tol-scale", tol_scale, "Multiplier for acceptance thresholds")
                      ->check(CLI::PositiveNumber);
  run->add_flag("-q,--quiet", quiet, "Only print the verdict line per scenario");

  std::string filter;
  auto* catalog = app.add_subcommand("catalog", "List metric families, operations and suites");
  catalog->add_option("filter", filter, "Substring filter on names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }

  if (*catalog) {
    std::cout << finsler::list_catalog(filter).dump(2) << '\n';
    return kExitPass;
  }

  std::vector<finsler::ScenarioConfig> scenarios;
  std::set<std::string> outputs;
  try {
    for (const auto& path : configs) {
      finsler::ScenarioConfig cfg = finsler::load_scenario(path);
      if (*out_opt) cfg.out_dir = out_dir;
      if (*seed_opt) cfg.seed = seed;
      if (*tol_opt) cfg.tol_scale = tol_scale;
      const auto report = std::filesystem::weakly_canonical(finsler::report_path(cfg)).string();
      if (!outputs.insert(report).second)
        throw finsler::ConfigError(path + ": output " + report +
                                   " already used by another scenario");
      scenarios.push_back(std::move(cfg));
    }
  } catch (const finsler::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  int status = kExitPass;
  for (const auto& cfg : scenarios) {
    try {
      const finsler::RunReport report = finsler::run_scenario(cfg);
      const std::string path = finsler::report_path(cfg);
      finsler::write_report(report, path);
      std::cout << (report.passed() ? "PASS " : "FAIL ") << cfg.name << "  -> " << path << '\n';
      if (!quiet) print_checks(report);
      if (!report.passed()) status = std::max(status, kExitFail);
    } catch (const finsler::ConfigError& e) {
      std::cerr << "config error in " << cfg.name << ": " << e.what() << '\n';
      status = kExitConfig;
    } catch (const std::exception& e) {
      std::cerr << "error in " << cfg.name << ": " << e.what() << '\n';
      status = std::max(status, kExitFail);
    }
  }
  return status;
}
