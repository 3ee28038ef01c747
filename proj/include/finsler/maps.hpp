#pragma once

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "finsler/distchart.hpp"

namespace finsler {

// ─── Map probes ──────────────────────────────────────────────────────────────

struct MapProbe {
  MetricPtr source;
  MetricPtr target;
  VectorMap forward;
  /// Exact derivative when known; finite differences otherwise.
  std::function<Mat(const Vec&)> derivative;
  /// Exact inverse when known (used for preimages of chart base points).
  VectorMap preimage;
  std::string label;

  Vec operator()(const Vec& x) const;
  Mat pushforward(const Vec& x) const;
};

/// Affine map x ↦ A x + c with exact derivative and inverse.
MapProbe affine_probe(MetricPtr source, MetricPtr target, const Mat& A, const Vec& c,
                      std::string label);
MapProbe rotation_probe(MetricPtr m, double angle, std::string label = "rotation");
MapProbe translation_probe(MetricPtr m, const Vec& offset, std::string label = "translation");
MapProbe scaling_probe(MetricPtr m, double factor, std::string label = "scaling");
MapProbe shear_probe(MetricPtr m, double k, std::string label = "shear");
/// (x_1, x_2 + k x_1², x_3, …): smooth, nonlinear, not an isometry.
MapProbe bend_probe(MetricPtr m, double k, std::string label = "bend");

/// {"kind": rotation|translation|scaling|shear|bend, ...parameters}; the
/// same metric on both sides.
MapProbe map_from_json(const MetricPtr& m, const nlohmann::json& j);

// ─── Isometry diagnostics ────────────────────────────────────────────────────

enum class DirectionNorm { finsler, euclidean };

struct MapDefect {
  double value = 0.0;
  Vec point;
  Vec vector;
  std::size_t samples = 0;
  /// Sample points whose image left the target patch.
  std::size_t skipped = 0;
};

/// max |F̄(φ(p), φ_* v) − F(p, v)| over seeded p in the source's reference
/// region and directions v normalised by `norm`; the best direction at each
/// point is refined by a one-dimensional search.
MapDefect isometry_defect(const MapProbe& probe, std::size_t samples, std::uint64_t seed,
                          DirectionNorm norm = DirectionNorm::finsler);

/// max |D²φ(v,v) − 2 Dφ G(x,v) + 2 Ḡ(φ(x), Dφ v)| over seeded F-unit
/// (x, v): the acceleration of φ∘γ against the target spray.
MapDefect spray_pushforward_defect(const MapProbe& probe, std::size_t samples, std::uint64_t seed);

struct GeodesicImageDefect {
  double gap = 0.0;
  double t_minus = 0.0;
  double t_plus = 0.0;
  bool truncated = false;
};

/// Max chart gap between φ∘γ and the target geodesic through
/// (φ(γ(0)), φ_* γ̇(0)). Necessary for an isometry, not sufficient.
GeodesicImageDefect geodesic_image_defect(const MapProbe& probe, const GeodesicPath& path,
                                          const GeodesicOptions& opts = precise_geodesic_options());

struct DistanceAudit {
  bool passed = true;
  std::size_t pairs = 0;
  double worst = 0.0;
  Vec witness_a;
  Vec witness_b;
};

/// |ρ̄(φ(a), φ(b)) − ρ(a, b)| over seeded pairs in the Euclidean ball B(p, radius).
DistanceAudit audit_distance_preservation(const MapProbe& probe, const Vec& p, double radius,
                                          std::size_t pairs, std::uint64_t seed, double tol = 1e-8);

/// exp_{p'}(L exp_p^{-1}(r)) for each target r: the only candidate for a
/// local isometry with φ(p) = p' and φ_* = L at p. Throws MapError unless L
/// preserves F at p within 1e-9.
std::vector<Vec> propagate_from_derivative(const FinslerMetric& m, const Vec& p,
                                           const FinslerMetric& m_target, const Vec& p_image,
                                           const Mat& L, const std::vector<Vec>& targets);

// ─── Myers-Steenrod reconstruction ───────────────────────────────────────────

struct MyersSteenrodOptions {
  std::size_t audit_pairs = 24;
  double audit_tol = 1e-8;
  std::size_t preimage_starts = 8;
  std::size_t identity_samples = 8;
  std::size_t direction_samples = 16;
};

struct MyersSteenrodRecord {
  DistanceAudit audit;
  /// Everything below is only filled when the audit passes.
  std::optional<DistanceChart> chart;  // at φ(p) in the target
  std::vector<Vec> preimages;          // p_i = φ^{-1}(q_i)
  /// max |r_{p_i}(a) − r̄_{q_i}(φ(a))| on samples near p.
  double chart_identity_defect = 0.0;
  /// Finite-difference derivative of invert_chart ∘ (r_{p_1}, …, r_{p_n}) at p.
  Mat derivative;
  /// max |F̄(φ(p), D v) − F(p, v)| over seeded v.
  double f_defect = 0.0;
  /// max |BM(ρ̄(φ(p), φ(p + t v))) − F̄(φ(p), D v)|: Busemann-Mayer route
  /// against the direct one.
  double route_agreement = 0.0;
};

MyersSteenrodRecord myers_steenrod_reconstruct(const MapProbe& probe, const Vec& p, double radius,
                                               std::uint64_t seed,
                                               const MyersSteenrodOptions& opts = {});

// ─── Submetries ──────────────────────────────────────────────────────────────

struct SubmetryProbe {
  MetricPtr metric;
  ScalarField r;
  double delta = 0.1;
  std::string label;
};

/// Checks reversibility (declared and sampled) and throws MapError otherwise.
SubmetryProbe make_submetry_probe(MetricPtr m, ScalarField r, double delta, std::string label);

/// q ↦ ρ(p, q).
ScalarField distance_function(const MetricPtr& m, const Vec& p);

struct BallImage {
  double r_center = 0.0;
  double min = 0.0;
  double max = 0.0;
  double coverage_tol = 0.0;
  std::size_t samples = 0;
  bool contained = true;
  bool covered = true;
};

/// Values of r on n_samples seeded points of B_ρ(q, ε); containment in the
/// open interval (r(q) − ε, r(q) + ε) and coverage of its end points within
/// coverage_tol = 2ε/√n_samples.
BallImage submetry_ball_image(const SubmetryProbe& sp, const Vec& q, double eps,
                              std::size_t n_samples, std::uint64_t seed);

struct SubmetryDifferential {
  Vec a;                // on S(q, δ) with r(a) = r(q) − δ
  Vec b;                // on S(q, δ) with r(b) = r(q) + δ
  Vec gradient;         // average of ∇f_a and ∇f_b at q
  double residual = 0;  // |∇f_a − ∇f_b|
  Vec direct_gradient;  // ∇r at q by finite differences
  double direct_mismatch = 0.0;
  /// max over samples near q of (f_b − r)⁺ and (r − f_a)⁺.
  double sandwich_violation = 0.0;
  /// max(|f_a(q) − r(q)|, |f_b(q) − r(q)|)
  double touching_gap = 0.0;
};

/// Sandwich functions f_a(u) = r(a) + ρ(a, u) and f_b(u) = r(b) − ρ(u, b);
/// a and b are found by a sweep of S_ρ(q, δ) followed by Brent refinement
/// along great arcs. Throws MapError when either fiber is missed by more
/// than 1e-6.
SubmetryDifferential submetry_differential(const SubmetryProbe& sp, const Vec& q,
                                           std::uint64_t seed, std::size_t sweep = 64);

nlohmann::json to_json(const MapDefect& d);
nlohmann::json to_json(const BallImage& b);
nlohmann::json to_json(const SubmetryDifferential& s);

}  // namespace finsler
