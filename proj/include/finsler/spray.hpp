#pragma once

#include <functional>
#include <string>

#include "finsler/metrics.hpp"

namespace finsler {

/// Geodesic coefficients G(x, y) of a spray, so that geodesics solve
/// ẍ = -2 G(x, ẋ). The canonical spray of a metric is obtained from the
/// coordinate instantiation of S(X^v E) - X^c E = 0 with X = ∂/∂x^j:
///
///     g(x, y) · G = ½ (E_xy(x, y)ᵀ y - E_x(x, y)).
class SprayField {
 public:
  using Evaluator = std::function<Vec(const Vec& x, const Vec& y)>;

  SprayField(MetricPtr metric, Evaluator coefficients, std::string label);

  /// Canonical spray using the metric's closed-form energy jet.
  static SprayField canonical(MetricPtr metric);
  /// Canonical spray with the energy jet rebuilt from F by finite differences.
  static SprayField canonical_fd(MetricPtr metric, DiffConfig cfg = nested_diff_config());

  /// G(x, 0) = 0 by homogeneity.
  Vec operator()(const Vec& x, const Vec& y) const;

  const FinslerMetric& metric() const { return *metric_; }
  const MetricPtr& metric_ptr() const { return metric_; }
  const std::string& label() const { return label_; }

  /// A copy with a constant vector added to the coefficients. Used to
  /// exercise the residual checks on a spray that is not canonical.
  SprayField perturbed(const Vec& offset) const;

 private:
  MetricPtr metric_;
  Evaluator G_;
  std::string label_;
};

/// Solves g · G = ½ (E_xyᵀ y - E_x) by Cholesky. Refuses (SingularityError)
/// when the fundamental tensor has condition number above 1e10.
Vec solve_spray_system(const EnergyJet& jet, const Vec& y);

Vec spray_coefficients(const FinslerMetric& m, const Vec& x, const Vec& y);

struct SprayResiduals {
  /// S(∂^v_j F) - ∂^c_j F for each coordinate field ∂/∂x^j.
  Vec rapcsak;
  /// S F.
  double sf = 0.0;
  /// F(x, y), for relative thresholds.
  double F = 0.0;

  double max_abs() const;
};

/// Evaluates the residuals by composing finite-difference derivatives of F
/// with the action of S = yⁱ ∂/∂xⁱ - 2Gⁱ ∂/∂yⁱ on TM. They vanish (to
/// finite-difference accuracy) exactly when the spray is canonical.
SprayResiduals canonical_spray_residuals(const SprayField& s, const Vec& x, const Vec& y,
                                         const DiffConfig& cfg = nested_diff_config());

/// S(∂^v_j E) - ∂^c_j E, the energy form of the same condition.
Vec energy_residuals(const SprayField& s, const Vec& x, const Vec& y,
                     const DiffConfig& cfg = nested_diff_config());

/// S(X^v F) - X^c F for an arbitrary vector field X on the patch, with the
/// vertical and complete lifts built from X and its finite-difference
/// Jacobian. By linearity over functions this equals Xʲ(x) · rapcsak_j.
double lifted_rapcsak_residual(const SprayField& s, const VectorMap& X, const Vec& x, const Vec& y,
                               const DiffConfig& cfg = nested_diff_config());

/// max |G(x, λy) - λ²G(x, y)| / λ² over seeded samples from the metric's
/// reference region and λ ∈ {0.5, 2, 10}.
double spray_homogeneity_defect(const SprayField& s, std::size_t samples, std::uint64_t seed);

}  // namespace finsler
