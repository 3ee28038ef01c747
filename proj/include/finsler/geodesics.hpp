#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "finsler/ode.hpp"
#include "finsler/spray.hpp"

namespace finsler {

struct GeodesicOptions {
  double rtol = 1e-9;
  double atol = 1e-9;
  std::size_t max_steps = 200000;
};

/// Tolerances used where geodesic end points feed further numerics
/// (shooting, distance functions and their derivatives).
inline GeodesicOptions precise_geodesic_options() { return {1e-12, 1e-12, 400000}; }

struct TimeSpan {
  double t_minus = 0.0;
  double t_plus = 1.0;
};

struct GeodesicSample {
  double t = 0.0;
  Vec x;
  Vec v;
};

struct IntegratorStats {
  std::size_t steps = 0;
  std::size_t rejected = 0;
  std::size_t evaluations = 0;
  double rtol = 0.0;
  double atol = 0.0;
};

/// Solution of ẍ = -2G(x, ẋ) through (p, v) at t = 0, with dense output on
/// [t_minus, t_plus]. If the curve leaves the patch the span is truncated
/// and exited_patch is set.
class GeodesicPath {
 public:
  GeodesicPath() = default;

  const Vec& initial_point() const { return p_; }
  const Vec& initial_velocity() const { return v_; }
  double t_minus() const { return t_minus_; }
  double t_plus() const { return t_plus_; }
  const TimeSpan& requested_span() const { return requested_; }
  bool exited_patch() const { return exited_; }
  const std::string& exit_reason() const { return exit_reason_; }
  const IntegratorStats& stats() const { return stats_; }

  /// Step end points, sorted by time (includes t = 0).
  const std::vector<GeodesicSample>& samples() const { return samples_; }

  Vec position(double t) const;
  Vec velocity(double t) const;

  /// max |F(x(t), ẋ(t)) - F(v)| / F(v) over the step end points.
  double max_speed_drift(const FinslerMetric& m) const;

 private:
  friend GeodesicPath integrate_geodesic(const SprayField&, const Vec&, const Vec&, TimeSpan,
                                         const GeodesicOptions&);
  Vec state(double t) const;

  Vec p_, v_;
  TimeSpan requested_;
  double t_minus_ = 0.0;
  double t_plus_ = 0.0;
  bool exited_ = false;
  std::string exit_reason_;
  IntegratorStats stats_;
  std::vector<GeodesicSample> samples_;
  std::vector<ode::Segment> segments_;  // sorted by min(t0, t1)
};

GeodesicPath integrate_geodesic(const SprayField& s, const Vec& p, const Vec& v, TimeSpan span,
                                const GeodesicOptions& opts = {});
GeodesicPath integrate_geodesic(const MetricPtr& m, const Vec& p, const Vec& v, TimeSpan span,
                                const GeodesicOptions& opts = {});

/// CSV rows "t,x1..xn,v1..vn" of the step end points, header included.
void write_csv(std::ostream& os, const GeodesicPath& path);

struct GeodesicEndpoint {
  Vec x;
  Vec v;
};

/// (γ_v(t), γ̇_v(t)) without dense storage; t may be negative.
/// Throws DomainError if the geodesic leaves the patch before t.
GeodesicEndpoint geodesic_flow(const FinslerMetric& m, const Vec& p, const Vec& v, double t,
                               const GeodesicOptions& opts = {});

/// exp_p(v) = γ_v(1); exp_p(0) = p.
Vec exponential(const FinslerMetric& m, const Vec& p, const Vec& v,
                const GeodesicOptions& opts = {});

/// |γ_{tv}(s) - γ_v(st)| from two independent integrations.
double rescaling_defect(const FinslerMetric& m, const Vec& p, const Vec& v, double t, double s,
                        const GeodesicOptions& opts = {});

// ─── Normal-radius heuristic ─────────────────────────────────────────────────

struct NormalRadiusOptions {
  /// Random directions added to the 2·dim axis directions.
  std::size_t random_directions = 8;
  std::uint64_t seed = 0x6e6f726d;
  /// Relative width at which bisection stops (two decimal digits).
  double relative_precision = 1e-2;
  /// Smallest radius tried, relative to the cap, before giving up.
  double min_relative_radius = 1e-6;
};

/// Numerical surrogate for a totally normal neighbourhood: the largest probed
/// radius r ≤ cap at which shooting recovers exp_p^{-1} of every fan target
/// on the F-sphere of radius r. A heuristic certificate, not a proof.
struct NormalRadiusEstimate {
  Vec center;
  double radius = 0.0;
  bool reached_cap = false;
  std::size_t probes = 0;
  std::string method;
};

NormalRadiusEstimate normal_radius(const FinslerMetric& m, const Vec& p, double cap,
                                   const NormalRadiusOptions& opts = {});

/// True when every fan direction at F-radius r round-trips through
/// exp_p and shooting.
bool shooting_fan_succeeds(const FinslerMetric& m, const Vec& p, double r,
                           const NormalRadiusOptions& opts = {});

// ─── Emanating points ────────────────────────────────────────────────────────

struct EmanatingOptions {
  /// Cap passed to normal_radius at p (default δ) and at q (choice of λ).
  double normal_radius_cap = 1.0;
  std::size_t max_retries = 6;
  GeodesicOptions integration = precise_geodesic_options();
};

/// q = γ_v(-δ) and w = λ γ̇_v(-δ): the geodesic t ↦ exp_q(t w) runs through p
/// at t = δ/λ with velocity λ v.
struct EmanatingPoint {
  Vec q;
  Vec w;
  double lambda = 1.0;
  double delta = 0.0;
  /// |exp_q((δ/λ) w) - p|
  double position_error = 0.0;
  /// |γ̇_w(δ/λ) - λ v| / |λ v|
  double velocity_error = 0.0;
};

/// Backward time along the same geodesic equation (never the reversed
/// metric). δ defaults to a tenth of the normal radius at p and is halved
/// when the backward curve leaves the patch. λ = min(1, 0.9 r_q / (δ F(γ̇_v(-δ)))).
EmanatingPoint emanating_point(const FinslerMetric& m, const Vec& p, const Vec& v,
                               std::optional<double> delta = {}, const EmanatingOptions& opts = {});

}  // namespace finsler
