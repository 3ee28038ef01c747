#pragma once

#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "finsler/numcore.hpp"

namespace finsler {

enum class Family {
  euclidean,
  minkowski_norm,
  riemannian,
  randers,
  hyperbolic_half_plane,
  round_sphere_patch,
};

std::string_view family_name(Family f);
Family family_from_name(std::string_view name);  // throws ConfigError
const std::vector<Family>& all_families();

/// Value and first/second derivatives of the energy E = F²/2 at (x, y).
/// E_xy(k, l) = ∂²E / ∂x^k ∂y^l.
struct EnergyJet {
  double E = 0.0;
  Vec E_x;
  Vec E_y;
  Mat E_yy;
  Mat E_xy;
};

/// A Finsler function on a single coordinate patch.
///
/// F vanishes on the zero vector and is only assumed smooth on nonzero
/// vectors, so fundamental_tensor and energy_jet refuse y = 0. Every family
/// supplies its energy derivatives in closed form; energy_jet_fd rebuilds them
/// from F alone and serves as the cross-check.
class FinslerMetric {
 public:
  virtual ~FinslerMetric() = default;

  Family family() const { return family_; }
  std::string_view name() const { return family_name(family_); }
  std::size_t dim() const { return patch_.dim(); }
  const PatchSpec& patch() const { return patch_; }
  /// Whether the family claims F(-y) = F(y); validate_finsler checks it.
  bool declared_reversible() const { return reversible_; }
  /// Where samples for audits and suites are drawn by default.
  const SampleRegion& reference_region() const { return region_; }
  /// Minimum boundary slack required for evaluation.
  double boundary_margin() const { return margin_; }

  double F(const Vec& x, const Vec& y) const;
  double energy(const Vec& x, const Vec& y) const;
  /// ½ ∂²F²/∂y∂y; SingularityError at y = 0.
  Mat fundamental_tensor(const Vec& x, const Vec& y) const;
  EnergyJet energy_jet(const Vec& x, const Vec& y) const;

  /// Parameters as a harness metric descriptor ({"family": ..., ...}).
  virtual nlohmann::json descriptor() const = 0;

 protected:
  FinslerMetric(Family family, PatchSpec patch, bool reversible, SampleRegion region);

  virtual double F_impl(const Vec& x, const Vec& y) const = 0;
  virtual EnergyJet jet_impl(const Vec& x, const Vec& y) const = 0;

 private:
  void check_args(const Vec& x, const Vec& y) const;

  Family family_;
  PatchSpec patch_;
  bool reversible_;
  SampleRegion region_;
  double margin_;
};

using MetricPtr = std::shared_ptr<const FinslerMetric>;

/// Energy jet by central differences of F (Richardson-extrapolated).
EnergyJet energy_jet_fd(const FinslerMetric& m, const Vec& x, const Vec& y,
                        const DiffConfig& cfg = nested_diff_config());

// ─── Families ────────────────────────────────────────────────────────────────

MetricPtr make_euclidean(std::size_t dim = 2);

/// Flat, reversible, non-Riemannian: F(y) = (|y|⁴ + quartic · Σ y_i⁴)^{1/4}.
MetricPtr make_minkowski_norm(std::size_t dim = 2, double quartic = 0.3);

/// Conformally scaled constant inner product: g(x) = exp(2⟨s, x⟩) A.
MetricPtr make_riemannian(const Mat& A, const Vec& log_scale_gradient);

/// Randers metric over the Euclidean norm, F = |y| + ⟨b(x), y⟩ with affine
/// drift b(x) = drift + drift_gradient · x. A positive patch_radius restricts
/// the patch to the disk |x| < patch_radius.
MetricPtr make_randers(const Vec& drift, std::optional<Mat> drift_gradient = {},
                       double patch_radius = 0.0);

/// Upper half-space model of hyperbolic space with curvature -1/scale².
MetricPtr make_hyperbolic(std::size_t dim = 2, double scale = 1.0);

/// Sphere of the given radius in stereographic coordinates from the north
/// pole, restricted to |x| < chart_bound.
MetricPtr make_round_sphere(std::size_t dim = 2, double radius = 1.0, double chart_bound = 10.0);

/// Builds a metric from a descriptor ({"family": "randers", "drift": [..]}).
MetricPtr metric_from_json(const nlohmann::json& descriptor);

// ─── Validation ──────────────────────────────────────────────────────────────

struct AxiomCheck {
  std::string axiom;
  bool passed = true;
  double worst_residual = 0.0;
  std::string witness;
};

struct ValidationReport {
  std::vector<AxiomCheck> checks;
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
  /// Measured symmetry of F (validate_finsler) or of ρ (quasimetric_audit).
  bool reversible = false;
  bool reversible_declared = false;
  Vec witness_a;
  Vec witness_b;

  bool passed() const;
  const AxiomCheck& check(std::string_view axiom) const;
};

/// Samples (x, y) with x in the reference region and |y| log-uniform in
/// [1e-2, 1e2]; checks positivity, 1-homogeneity, ellipticity and the
/// reversibility claim. Canonical axis vectors are probed first for
/// reversibility so witnesses are readable.
ValidationReport validate_finsler(const FinslerMetric& m, std::size_t n_samples,
                                  std::uint64_t seed);

nlohmann::json to_json(const ValidationReport& r);

}  // namespace finsler
