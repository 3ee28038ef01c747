// Runs every acceptance suite through the scenario harness and prints one
// PASS/FAIL line per criterion. Exit status is non-zero if any line fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "finsler/harness.hpp"

using namespace finsler;
using nlohmann::json;

namespace {

constexpr std::uint64_t kSeed = 20240601;

// File contents with the wall-time line removed.
std::string report_bytes(const std::string& path) {
  std::ifstream is(path);
  std::string line, out;
  while (std::getline(is, line))
    if (line.find("\"wall_time_s\"") == std::string::npos) out += line + '\n';
  return out;
}

struct Run {
  std::string label;
  ScenarioConfig cfg;
  bool passed = false;
  double seconds = 0.0;
  std::string first_failure;
};

Run run(const std::string& suite, const std::string& label, const json* metric,
        const std::string& out_dir) {
  json doc{{"schema_version", kSchemaVersion},
           {"operation", suite},
           {"seed", kSeed},
           {"name", suite + "." + label}};
  if (metric) doc["metric"] = *metric;
  Run r;
  r.label = label;
  r.cfg = parse_scenario(doc, suite);
  r.cfg.out_dir = out_dir;
  const auto t0 = std::chrono::steady_clock::now();
  const RunReport report = run_scenario(r.cfg);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.passed = report.passed();
  for (const auto& c : report.checks)
    if (!c.pass && r.first_failure.empty()) {
      std::ostringstream os;
      os << label << "/" << c.name << " = " << c.value << " (threshold " << c.threshold << ")";
      if (!c.detail.empty()) os << " " << c.detail;
      r.first_failure = os.str();
    }
  write_report(report, report_path(r.cfg));
  return r;
}

struct Criterion {
  int number;
  std::string title;
  std::string suite;
  bool per_family;
  double limit_s;  // per family when per_family, else total
  std::vector<Run> runs;
};

bool report_line(const Criterion& c) {
  bool ok = true;
  double worst = 0.0, total = 0.0;
  std::string why;
  for (const auto& r : c.runs) {
    worst = std::max(worst, r.seconds);
    total += r.seconds;
    if (!r.passed) {
      ok = false;
      if (why.empty()) why = r.first_failure;
    }
  }
  const double measured = c.per_family ? worst : total;
  if (measured >= c.limit_s) {
    ok = false;
    if (why.empty()) why = "runtime limit exceeded";
  }
  std::printf("%s criterion %d (%s): %zu run(s), %s %.2f s < %.0f s%s%s\n", ok ? "PASS" : "FAIL",
              c.number, c.title.c_str(), c.runs.size(), c.per_family ? "slowest family" : "total",
              measured, c.limit_s, why.empty() ? "" : "; ", why.c_str());
  std::fflush(stdout);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string out_dir =
      argc > 1 ? argv[1] : (std::filesystem::temp_directory_path() / "finsler-acceptance").string();
  std::filesystem::create_directories(out_dir);

  std::vector<Criterion> criteria{
      {1, "spray characterization", "spray-suite", true, 30.0, {}},
      {2, "geodesics", "geodesic-suite", true, 60.0, {}},
      {3, "distance", "distance-suite", false, 120.0, {}},
      {4, "Busemann-Mayer", "busemann-mayer-suite", false, 60.0, {}},
      {5, "distance charts", "distance-chart-suite", false, 120.0, {}},
      {6, "isometries", "isometry-suite", false, 120.0, {}},
      {7, "Myers-Steenrod", "myers-steenrod-suite", false, 180.0, {}},
      {8, "submetries", "submetry-suite", false, 180.0, {}},
  };

  bool all_ok = true;
  for (auto& c : criteria) {
    try {
      if (c.number <= 5) {
        for (const auto& inst : standard_instances())
          c.runs.push_back(run(c.suite, inst.label, &inst.descriptor, out_dir));
      } else {
        c.runs.push_back(run(c.suite, "fixed-cases", nullptr, out_dir));
      }
      all_ok = report_line(c) && all_ok;
    } catch (const std::exception& e) {
      std::printf("FAIL criterion %d (%s): %s\n", c.number, c.title.c_str(), e.what());
      all_ok = false;
    }
  }

  // Criterion 9: every suite above is re-run with the same seed into a
  // second directory and the report files are compared.
  std::size_t compared = 0;
  std::string mismatch;
  try {
    for (const auto& c : criteria)
      for (const auto& first : c.runs) {
        ScenarioConfig cfg = first.cfg;
        cfg.out_dir = (std::filesystem::path(out_dir) / "rerun").string();
        write_report(run_scenario(cfg), report_path(cfg));
        ++compared;
        if (report_bytes(report_path(cfg)) != report_bytes(report_path(first.cfg)) &&
            mismatch.empty())
          mismatch = cfg.name;
      }
  } catch (const std::exception& e) {
    mismatch = e.what();
  }
  const bool repro = mismatch.empty();
  std::printf("%s criterion 9 (reproducibility): %zu reports re-run with seed %llu, %s\n",
              repro ? "PASS" : "FAIL", compared, static_cast<unsigned long long>(kSeed),
              repro ? "byte-identical apart from wall time" : ("differs: " + mismatch).c_str());
  all_ok = all_ok && repro;
  return all_ok ? 0 : 1;
}
