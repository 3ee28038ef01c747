#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "finsler/maps.hpp"

namespace finsler {

enum class Relation { below, above, holds };

/// One pass/fail line of a report. For `below` checks the threshold is
/// multiplied by the tolerance scale; `above` thresholds (detections) are not.
struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  Relation relation = Relation::below;
  bool pass = false;
  std::string detail;
};

Check check_below(std::string name, double value, double threshold, double tol_scale = 1.0);
Check check_above(std::string name, double value, double threshold);
Check check_holds(std::string name, bool ok, std::string detail = {});

nlohmann::json to_json(const Check& c);

struct SuiteContext {
  std::uint64_t seed = 1;
  double tol_scale = 1.0;
};

/// Named metric instances the per-family suites run on when no metric is
/// given: one per family, with Randers in a flat and an affine variant.
struct MetricInstance {
  std::string label;
  nlohmann::json descriptor;
  MetricPtr metric;
};
const std::vector<MetricInstance>& standard_instances();

// Per-metric suites.
std::vector<Check> spray_suite(const MetricPtr& m, const SuiteContext& ctx);
std::vector<Check> geodesic_suite(const MetricPtr& m, const SuiteContext& ctx);
std::vector<Check> distance_suite(const MetricPtr& m, const SuiteContext& ctx);
std::vector<Check> busemann_mayer_suite(const MetricPtr& m, const SuiteContext& ctx);
std::vector<Check> distance_chart_suite(const MetricPtr& m, const SuiteContext& ctx);

// Suites over fixed built-in cases; `family` (if non-empty) keeps only the
// cases on that family.
std::vector<Check> isometry_suite(const SuiteContext& ctx, const std::string& family = {});
std::vector<Check> myers_steenrod_suite(const SuiteContext& ctx, const std::string& family = {});
std::vector<Check> submetry_suite(const SuiteContext& ctx, const std::string& family = {});

/// Closed-form ρ(p, q) where one is known (flat families, hyperbolic,
/// sphere); empty otherwise.
std::optional<double> closed_form_distance(const FinslerMetric& m, const Vec& p, const Vec& q);

/// The constant drift b when m is a Randers metric with zero drift gradient.
std::optional<Vec> flat_randers_drift(const FinslerMetric& m);

}  // namespace finsler
