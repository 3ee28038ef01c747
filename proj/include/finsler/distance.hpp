#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "finsler/geodesics.hpp"

namespace finsler {

// ─── Shooting: exp_p^{-1} ────────────────────────────────────────────────────

struct ShootingOptions {
  /// Target |exp_p(v) - q| in chart units.
  double tol = 1e-11;
  int max_iterations = 25;
  int max_backtracks = 30;
  /// Relative step of the central-difference Jacobian of v ↦ exp_p(v).
  double jacobian_step = 1e-5;
  /// Integration tolerance floor for the Jacobian evaluations.
  double jacobian_rtol = 1e-10;
  GeodesicOptions integration = precise_geodesic_options();
  /// Overrides the default initial guess v₀ = q - p.
  std::optional<Vec> initial_guess;
};

struct ShootingResult {
  Vec v;
  int iterations = 0;
  double residual = 0.0;
};

/// Newton iteration on v ↦ exp_p(v) - q with a finite-difference Jacobian
/// and backtracking on the residual norm. Throws InversionError on
/// divergence or when the iteration cap is reached, which signals that q is
/// outside the region where exp_p is (numerically) invertible.
ShootingResult invert_exp(const FinslerMetric& m, const Vec& p, const Vec& q,
                          const ShootingOptions& opts = {});

/// ρ(p, q) = F(p, exp_p^{-1}(q)); local to a normal neighbourhood of p.
double distance(const FinslerMetric& m, const Vec& p, const Vec& q,
                const ShootingOptions& opts = {});

// ─── Arc length ──────────────────────────────────────────────────────────────

/// Piecewise-smooth parametrised curve. breakpoints are the parameter
/// values between smooth pieces, including both end points.
struct Curve {
  std::function<Vec(double)> position;
  /// Optional; differentiated numerically when absent.
  std::function<Vec(double)> velocity;
  std::vector<double> breakpoints{0.0, 1.0};

  /// Chart-linear interpolation of the points on [0, 1], one piece per edge.
  static Curve polyline(std::vector<Vec> points);
  /// The geodesic's dense output on its integrated span.
  static Curve from_path(const GeodesicPath& path);
};

/// ∫ F(γ, γ̇) by composite Gauss-Legendre quadrature on each smooth piece,
/// doubling panels until successive estimates differ by < rel_tol.
double arc_length(const FinslerMetric& m, const Curve& curve, double rel_tol = 1e-8);
double arc_length(const FinslerMetric& m, const std::vector<Vec>& polyline, double rel_tol = 1e-8);

// ─── Quasi-metric oracles ────────────────────────────────────────────────────

enum class OracleProvenance { computed_from_metric, external };

class QuasiMetricOracle {
 public:
  using Evaluator = std::function<double(const Vec& p, const Vec& q)>;

  QuasiMetricOracle(Evaluator rho, bool symmetric, OracleProvenance provenance,
                    std::string label = {});

  double operator()(const Vec& p, const Vec& q) const;
  bool symmetric() const { return symmetric_; }
  OracleProvenance provenance() const { return provenance_; }
  const std::string& label() const { return label_; }

 private:
  Evaluator rho_;
  bool symmetric_;
  OracleProvenance provenance_;
  std::string label_;
};

/// ρ from the metric by shooting; symmetric iff the metric declares itself
/// reversible.
QuasiMetricOracle metric_oracle(const MetricPtr& m, const ShootingOptions& opts = {});

/// CSV with header "p1..pn,q1..qn,rho".
void write_oracle_table(std::ostream& os, const QuasiMetricOracle& rho,
                        const std::vector<std::pair<Vec, Vec>>& pairs);

/// Oracle answering only the tabulated pairs (matched to 1e-12 per
/// coordinate); anything else raises DomainError.
QuasiMetricOracle read_oracle_table(std::istream& is, std::size_t dim, bool symmetric);

// ─── Busemann-Mayer recovery of F ────────────────────────────────────────────

/// Richardson-extrapolated limit of ρ(α(0), α(t)) / t over t = t0 · 2^{-k},
/// k = 0..levels. The quotient expands in integer powers of t.
double busemann_mayer_F(const QuasiMetricOracle& rho, const std::function<Vec(double)>& alpha,
                        int levels = 4, double t0 = 1e-2);

// ─── Spheres and audits ──────────────────────────────────────────────────────

struct SphereSample {
  std::vector<Vec> points;
  std::vector<Vec> directions;
  std::size_t dropped = 0;
  /// max |ρ(p, point) - r| over the kept points (when verified).
  double max_distance_error = 0.0;
};

/// Points exp_p(r u / F(u)) for seeded unit directions u. Samples whose
/// geodesic leaves the patch are dropped and counted.
SphereSample sphere_sample(const FinslerMetric& m, const Vec& p, double r, std::size_t count,
                           std::uint64_t seed, bool verify = true,
                           const ShootingOptions& opts = {});

/// Sampled quasi-distance axioms on points of `region` (which must lie in
/// the patch and inside a common normal neighbourhood): non-negativity,
/// identity of indiscernibles, triangle inequality; symmetry is measured and
/// compared with the oracle's flag.
ValidationReport quasimetric_audit(const QuasiMetricOracle& rho, const PatchSpec& patch,
                                   const SampleRegion& region, std::size_t n_pairs,
                                   std::size_t n_triples, std::uint64_t seed,
                                   double triangle_slack = 1e-9);

}  // namespace finsler
