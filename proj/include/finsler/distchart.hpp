#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <vector>

#include "finsler/distance.hpp"

namespace finsler {

/// Distance coordinates θ = (r_{p_1}, …, r_{p_n}) around a center p.
///
/// Jacobian convention: jacobian(i, j) = v_j(r_{p_i}), i.e. row i is the
/// differential of the i-th distance function applied to the direction
/// seeds. Since v_j annihilates dr_{p_1..p_{j-1}}, the matrix is lower
/// triangular and its diagonal is F(p, v_i) = F(w_i) / λ_i.
struct DistanceChart {
  MetricPtr metric;
  Vec center;
  std::vector<Vec> base_points;
  std::vector<double> radii;              // ρ(p_i, p)
  std::vector<Vec> directions;            // v_i, F-unit at p
  std::vector<Vec> emanating_velocities;  // w_i at p_i
  std::vector<double> lambdas;
  std::vector<double> deltas;
  Mat jacobian;
  double radius_budget = 0.0;
  /// Euclidean chart radius around p on which the evaluate/invert round
  /// trip was verified.
  double certified_radius = 0.0;
  std::uint64_t seed = 0;

  std::size_t dim() const { return base_points.size(); }
};

struct ChartOptions {
  ShootingOptions shooting;
  /// Differentiation of the distance functions (themselves shooting results).
  DiffConfig gradient = nested_diff_config();
  std::size_t delta_retries = 6;
  std::size_t certification_probes = 16;
  double round_trip_tol = 1e-7;
  /// How many halvings of budget/2 are tried when certifying.
  int certification_levels = 8;
};

/// Chart-coordinate gradient of q ↦ ρ(base, q) at p.
Vec distance_gradient(const FinslerMetric& m, const Vec& base, const Vec& p,
                      const ChartOptions& opts = {});

/// Orthonormal basis of the common kernel of d r_{p_i} at p.
std::vector<Vec> sphere_tangent_basis(const FinslerMetric& m, const Vec& p,
                                      const std::vector<Vec>& base_points,
                                      const ChartOptions& opts = {});

DistanceChart build_distance_chart(const MetricPtr& m, const Vec& p, double radius_budget,
                                   std::uint64_t seed, const ChartOptions& opts = {});

Vec evaluate_chart(const DistanceChart& chart, const Vec& a, const ShootingOptions& opts = {});

struct ChartPoint {
  Vec x;
  double residual = 0.0;
  int iterations = 0;
};

/// Newton on θ(a) = target starting at the center; the derivative starts
/// from the stored Jacobian and is recomputed by finite differences when
/// the contraction stalls.
ChartPoint invert_chart(const DistanceChart& chart, const Vec& target, double tol = 1e-10,
                        const ChartOptions& opts = {});

struct ChartCertificate {
  /// max |J_ij| over j > i, relative to |J|.
  double off_triangle = 0.0;
  double min_diagonal = 0.0;
  /// max_i |J_ii - F(w_i)/λ_i| / (F(w_i)/λ_i)
  double diagonal_mismatch = 0.0;
  double condition = 0.0;
};

ChartCertificate certify(const DistanceChart& chart);

nlohmann::json to_json(const DistanceChart& chart);
DistanceChart chart_from_json(const nlohmann::json& j);

}  // namespace finsler
