#include "finsler/suites.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "finsler/json_io.hpp"

namespace finsler {

// ─── Checks ──────────────────────────────────────────────────────────────────

Check check_below(std::string name, double value, double threshold, double tol_scale) {
  const double t = threshold * tol_scale;
  return {std::move(name), value, t, Relation::below, std::isfinite(value) && value < t, {}};
}

Check check_above(std::string name, double value, double threshold) {
  return {std::move(name),
          value,
          threshold,
          Relation::above,
          std::isfinite(value) && value > threshold,
          {}};
}

Check check_holds(std::string name, bool ok, std::string detail) {
  return {std::move(name), ok ? 1.0 : 0.0, 1.0, Relation::holds, ok, std::move(detail)};
}

nlohmann::json to_json(const Check& c) {
  static constexpr const char* kRel[] = {"<", ">", "holds"};
  nlohmann::json j{{"name", c.name},
                   {"value", c.value},
                   {"threshold", c.threshold},
                   {"relation", kRel[static_cast<int>(c.relation)]},
                   {"pass", c.pass}};
  if (!c.detail.empty()) j["detail"] = c.detail;
  return j;
}

// ─── Instances and closed forms ──────────────────────────────────────────────

const std::vector<MetricInstance>& standard_instances() {
  static const std::vector<MetricInstance> instances = [] {
    const std::vector<std::pair<std::string, nlohmann::json>> specs{
        {"euclidean", {{"family", "euclidean"}}},
        {"minkowski-norm", {{"family", "minkowski-norm"}}},
        {"riemannian", {{"family", "riemannian"}}},
        {"randers-flat", {{"family", "randers"}, {"drift", {0.5, 0.0}}}},
        {"randers-affine",
         {{"family", "randers"},
          {"drift", {0.2, 0.1}},
          {"drift_gradient", {{0.0, 0.15}, {-0.1, 0.05}}},
          {"patch_radius", 1.5}}},
        {"hyperbolic-half-plane", {{"family", "hyperbolic-half-plane"}}},
        {"round-sphere-patch", {{"family", "round-sphere-patch"}}},
    };
    std::vector<MetricInstance> out;
    for (const auto& [label, d] : specs) out.push_back({label, d, metric_from_json(d)});
    return out;
  }();
  return instances;
}

std::optional<Vec> flat_randers_drift(const FinslerMetric& m) {
  if (m.family() != Family::randers) return std::nullopt;
  const auto d = m.descriptor();
  if (d.contains("drift_gradient")) return std::nullopt;
  return vec_param(d.at("drift"));
}

std::optional<double> closed_form_distance(const FinslerMetric& m, const Vec& p, const Vec& q) {
  const auto d = m.descriptor();
  switch (m.family()) {
    case Family::euclidean:
    case Family::minkowski_norm:
      return (q - p).isZero(0.0) ? 0.0 : m.F(p, q - p);
    case Family::randers:
      if (!flat_randers_drift(m)) return std::nullopt;
      return (q - p).isZero(0.0) ? 0.0 : m.F(p, q - p);
    case Family::hyperbolic_half_plane: {
      const auto n = p.size() - 1;
      return d.at("scale").get<double>() *
             std::acosh(1.0 + (q - p).squaredNorm() / (2.0 * p[n] * q[n]));
    }
    case Family::round_sphere_patch: {
      auto lift = [](const Vec& x) {
        Vec X(x.size() + 1);
        const double s = x.squaredNorm();
        X << 2.0 * x / (1.0 + s), (s - 1.0) / (1.0 + s);
        return X;
      };
      const double c = std::clamp(lift(p).dot(lift(q)), -1.0, 1.0);
      return d.at("radius").get<double>() * std::acos(c);
    }
    default:
      return std::nullopt;
  }
}

namespace {

Vec draw_inner(const FinslerMetric& m, Rng& rng, double shrink = 0.5) {
  const auto& region = m.reference_region();
  for (int k = 0; k < 1000; ++k) {
    Vec x = rng.in_ball(region.center, shrink * region.radius);
    if (m.patch().contains(x, 1e-3)) return x;
  }
  throw DegenerateInputError("reference region misses the patch");
}

Vec unit_direction(const FinslerMetric& m, const Vec& x, Rng& rng) {
  const Vec u = rng.unit_vector(m.dim());
  return u / m.F(x, u);
}

std::string fmt_vec(const Vec& v) {
  std::ostringstream os;
  os << '(';
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ')';
  return os.str();
}

}  // namespace

// ─── Spray ───────────────────────────────────────────────────────────────────

std::vector<Check> spray_suite(const MetricPtr& m, const SuiteContext& ctx) {
  constexpr std::size_t kSamples = 100;
  Rng rng(ctx.seed);
  const SprayField canonical = SprayField::canonical(m);
  Vec offset = Vec::Zero(static_cast<Eigen::Index>(m->dim()));
  offset[0] = 0.1;
  const SprayField corrupted = canonical.perturbed(offset);

  double rapcsak = 0.0, sf = 0.0, corrupt = 0.0;
  for (std::size_t k = 0; k < kSamples; ++k) {
    const Vec x = draw_inner(*m, rng, 1.0);
    const Vec y = rng.unit_vector(m->dim()) * std::exp(rng.uniform(std::log(0.1), std::log(10.0)));
    const SprayResiduals r = canonical_spray_residuals(canonical, x, y);
    rapcsak = std::max(rapcsak, r.rapcsak.cwiseAbs().maxCoeff() / r.F);
    sf = std::max(sf, std::abs(r.sf) / r.F);
    corrupt = std::max(corrupt, canonical_spray_residuals(corrupted, x, y).max_abs() / r.F);
  }
  return {check_below("rapcsak-residual/F", rapcsak, 1e-6, ctx.tol_scale),
          check_below("SF/F", sf, 1e-6, ctx.tol_scale),
          check_above("corrupted-spray-residual/F", corrupt, 1e-2)};
}

// ─── Geodesics ───────────────────────────────────────────────────────────────

std::vector<Check> geodesic_suite(const MetricPtr& m, const SuiteContext& ctx) {
  Rng rng(ctx.seed);
  double drift = 0.0;
  std::size_t truncated = 0;
  for (int k = 0; k < 10; ++k) {
    const Vec p = draw_inner(*m, rng);
    const GeodesicPath path = integrate_geodesic(m, p, unit_direction(*m, p, rng), {-1.0, 1.0});
    drift = std::max(drift, path.max_speed_drift(*m));
    truncated += path.exited_patch() ? 1 : 0;
  }

  double rescale = 0.0;
  const GeodesicOptions precise = precise_geodesic_options();
  for (int k = 0; k < 50; ++k) {
    const Vec p = draw_inner(*m, rng);
    const Vec v = 0.5 * unit_direction(*m, p, rng);
    const double t = rng.uniform(0.5, 2.0);
    const double s = rng.uniform(0.1, 1.0 / t);
    rescale = std::max(rescale, rescaling_defect(*m, p, v, t, s, precise));
  }

  double dexp = 0.0;
  for (int k = 0; k < 5; ++k) {
    const Vec p = draw_inner(*m, rng);
    const auto n = static_cast<Eigen::Index>(m->dim());
    const Mat J = jacobian([&](const Vec& v) { return exponential(*m, p, v, precise); },
                           Vec::Zero(n), DiffConfig{1e-6, 1});
    dexp = std::max(dexp, (J - Mat::Identity(n, n)).cwiseAbs().maxCoeff());
  }

  Check c = check_below("speed-drift", drift, 1e-6, ctx.tol_scale);
  if (truncated) c.detail = std::to_string(truncated) + " of 10 paths left the patch early";
  return {c, check_below("rescaling-defect", rescale, 1e-7, ctx.tol_scale),
          check_below("dexp0-minus-identity", dexp, 1e-4, ctx.tol_scale)};
}

// ─── Distance ────────────────────────────────────────────────────────────────

std::vector<Check> distance_suite(const MetricPtr& m, const SuiteContext& ctx) {
  Rng rng(ctx.seed);
  const double nr = normal_radius(*m, m->reference_region().center, 1.0).radius;
  const auto flat_b = flat_randers_drift(*m);

  double radial = 0.0, closed = -1.0, asym = -1.0, slack = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 20; ++k) {
    const Vec p = draw_inner(*m, rng);
    const double t = rng.uniform(0.05, 0.4) * nr;
    const Vec q = exponential(*m, p, t * unit_direction(*m, p, rng), precise_geodesic_options());
    const double pq = distance(*m, p, q);
    radial = std::max(radial, std::abs(pq - t));
    if (const auto exact = closed_form_distance(*m, p, q))
      closed = std::max(closed, std::abs(pq - *exact));
    if (flat_b) {
      const double qp = distance(*m, q, p);
      asym = std::max(asym, std::abs((pq - qp) - 2.0 * flat_b->dot(q - p)));
    }
    for (int j = 0; j < 10; ++j) {
      const int interior = 1 + static_cast<int>(rng.uniform() * 4.0);
      std::vector<Vec> pts{p};
      for (int i = 1; i <= interior; ++i) {
        const double s = static_cast<double>(i) / (interior + 1);
        Vec x;
        do {
          x = p + s * (q - p) + rng.in_ball(Vec::Zero(p.size()), 0.3 * (q - p).norm());
        } while (!m->patch().contains(x, m->boundary_margin()));
        pts.push_back(x);
      }
      pts.push_back(q);
      slack = std::min(slack, arc_length(*m, pts) - pq);
    }
  }

  const auto& region = m->reference_region();
  const SampleRegion audit_region{region.center, std::min(0.2, 0.5 * region.radius)};
  const ValidationReport audit =
      quasimetric_audit(metric_oracle(m), m->patch(), audit_region, 10, 10, ctx.seed);
  std::string audit_detail;
  for (const auto& c : audit.checks)
    if (!c.passed) audit_detail += c.axiom + ": " + c.witness + "; ";

  std::vector<Check> out{check_below("radial-identity", radial, 1e-6, ctx.tol_scale)};
  if (closed >= 0.0)
    out.push_back(check_below("closed-form-distance", closed, 1e-6, ctx.tol_scale));
  if (flat_b) out.push_back(check_below("randers-asymmetry", asym, 1e-7, ctx.tol_scale));
  out.push_back(check_above("polyline-minus-distance", slack, -1e-4 * ctx.tol_scale));
  out.push_back(check_holds("quasimetric-axioms", audit.passed(), audit_detail));
  return out;
}

// ─── Busemann-Mayer ──────────────────────────────────────────────────────────

std::vector<Check> busemann_mayer_suite(const MetricPtr& m, const SuiteContext& ctx) {
  Rng rng(ctx.seed);
  const QuasiMetricOracle rho = metric_oracle(m);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Vec p = draw_inner(*m, rng);
    const Vec v = rng.unit_vector(m->dim()) * rng.uniform(0.5, 2.0);
    const double bm = busemann_mayer_F(rho, [&](double t) { return Vec(p + t * v); });
    const double F = m->F(p, v);
    worst = std::max(worst, std::abs(bm - F) / F);
  }
  return {check_below("busemann-mayer-relative-error", worst, 1e-3, ctx.tol_scale)};
}

// ─── Distance charts ─────────────────────────────────────────────────────────

std::vector<Check> distance_chart_suite(const MetricPtr& m, const SuiteContext& ctx) {
  Rng rng(ctx.seed);
  std::size_t built = 0;
  double off = 0.0, min_diag = std::numeric_limits<double>::infinity(), mismatch = 0.0;
  double round_trip = 0.0;
  std::string failures;
  for (int k = 0; k < 10; ++k) {
    const Vec p = draw_inner(*m, rng);
    try {
      const double budget = normal_radius(*m, p, 0.5).radius;
      const DistanceChart chart = build_distance_chart(m, p, budget, ctx.seed + k);
      const ChartCertificate cert = certify(chart);
      ++built;
      off = std::max(off, cert.off_triangle);
      min_diag = std::min(min_diag, cert.min_diagonal);
      mismatch = std::max(mismatch, cert.diagonal_mismatch);
      for (int j = 0; j < 10; ++j) {
        const Vec a = rng.in_ball(p, 0.5 * chart.certified_radius);
        const Vec back = invert_chart(chart, evaluate_chart(chart, a), 1e-11).x;
        round_trip = std::max(round_trip, (back - a).norm());
      }
    } catch (const Error& e) {
      failures += "center " + fmt_vec(p) + ": " + e.what() + "; ";
    }
  }
  return {check_holds("charts-built-10-of-10", built == 10, failures),
          check_below("off-triangle/|J|", off, 1e-6, ctx.tol_scale),
          check_above("min-diagonal", min_diag, 0.0),
          check_below("diagonal-vs-emanating-data", mismatch, 1e-4, ctx.tol_scale),
          check_below("round-trip", round_trip, 1e-7, ctx.tol_scale)};
}

// ─── Isometries ──────────────────────────────────────────────────────────────

namespace {

MetricPtr instance(const std::string& label) {
  for (const auto& inst : standard_instances())
    if (inst.label == label) return inst.metric;
  throw ConfigError("no standard instance " + label);
}

bool keep(const MetricPtr& m, const std::string& family) {
  return family.empty() || family == m->name();
}

Vec vec2(double a, double b) { return (Vec(2) << a, b).finished(); }

double geodesic_image_gap(const MapProbe& probe, std::uint64_t seed) {
  const FinslerMetric& m = *probe.source;
  Rng rng(seed);
  double gap = 0.0;
  for (int k = 0; k < 5; ++k) {
    const Vec p = draw_inner(m, rng);
    const GeodesicPath path = integrate_geodesic(probe.source, p, unit_direction(m, p, rng),
                                                 {-0.5, 0.5}, precise_geodesic_options());
    gap = std::max(gap, geodesic_image_defect(probe, path).gap);
  }
  return gap;
}

}  // namespace

std::vector<Check> isometry_suite(const SuiteContext& ctx, const std::string& family) {
  const double ts = ctx.tol_scale;
  const auto e = instance("euclidean");
  const auto h = instance("hyperbolic-half-plane");
  const auto r = instance("randers-flat");
  std::vector<Check> out;

  const std::vector<MapProbe> isometries{
      rotation_probe(e, std::numbers::pi / 2, "euclidean-rotation-90"),
      rotation_probe(e, 0.7, "euclidean-rotation-0.7"),
      translation_probe(e, vec2(0.3, -0.2), "euclidean-translation"),
      translation_probe(h, vec2(1.0, 0.0), "hyperbolic-translation+1"),
      translation_probe(h, vec2(-0.4, 0.0), "hyperbolic-translation-0.4"),
      translation_probe(r, vec2(0.3, 0.2), "randers-translation"),
  };
  for (const auto& probe : isometries) {
    if (!keep(probe.source, family)) continue;
    const std::string& l = probe.label;
    out.push_back(
        check_below(l + ":isometry-defect", isometry_defect(probe, 50, ctx.seed).value, 1e-6, ts));
    out.push_back(check_below(l + ":spray-pushforward-defect",
                              spray_pushforward_defect(probe, 50, ctx.seed).value, 1e-5, ts));
    out.push_back(
        check_below(l + ":geodesic-image-defect", geodesic_image_gap(probe, ctx.seed), 1e-7, ts));
    const auto& region = probe.source->reference_region();
    const DistanceAudit audit =
        audit_distance_preservation(probe, region.center, 0.25 * region.radius, 10, ctx.seed, 1e-7);
    out.push_back(check_below(l + ":distance-preservation", audit.worst, 1e-7, ts));
  }

  if (keep(e, family)) {
    const MapProbe scaling = scaling_probe(e, 2.0, "euclidean-scaling-2");
    out.push_back(check_above("euclidean-scaling-2:isometry-defect",
                              isometry_defect(scaling, 20, ctx.seed).value, 1e-3));
    Check lines = check_below("euclidean-scaling-2:geodesic-image-defect",
                              geodesic_image_gap(scaling, ctx.seed), 1e-8, ts);
    lines.detail = "lines map to lines: the geodesic-image check alone cannot reject scaling";
    out.push_back(lines);
    out.push_back(check_above("euclidean-shear:isometry-defect",
                              isometry_defect(shear_probe(e, 1.0), 20, ctx.seed).value, 1e-3));
    const MapProbe bend = bend_probe(e, 0.5);
    out.push_back(check_above("euclidean-bend:isometry-defect",
                              isometry_defect(bend, 20, ctx.seed).value, 1e-3));
    out.push_back(check_above("euclidean-bend:spray-pushforward-defect",
                              spray_pushforward_defect(bend, 20, ctx.seed).value, 1e-2));
  }
  if (keep(r, family)) {
    const double d = isometry_defect(rotation_probe(r, std::numbers::pi / 2), 20, ctx.seed,
                                     DirectionNorm::euclidean)
                         .value;
    out.push_back(check_above("randers-rotation:isometry-defect", d, 1e-3));
    out.push_back(check_below("randers-rotation:defect-minus-0.70711",
                              std::abs(d - 0.5 * std::numbers::sqrt2), 1e-3, ts));
  }
  if (out.empty()) throw ConfigError("no isometry cases for family '" + family + "'");
  return out;
}

// ─── Myers-Steenrod ──────────────────────────────────────────────────────────

std::vector<Check> myers_steenrod_suite(const SuiteContext& ctx, const std::string& family) {
  const double ts = ctx.tol_scale;
  const auto e = instance("euclidean");
  const auto h = instance("hyperbolic-half-plane");
  const auto r = instance("randers-flat");
  std::vector<Check> out;

  struct Case {
    MapProbe probe;
    Vec p;
    Mat expected;
  };
  auto point_map_only = [](MapProbe probe) {
    probe.derivative = nullptr;
    probe.preimage = nullptr;
    return probe;
  };
  const Mat I = Mat::Identity(2, 2);
  const std::vector<Case> cases{
      {point_map_only(rotation_probe(e, 0.7, "euclidean-rotation-0.7")), vec2(0.0, 0.0),
       (Mat(2, 2) << std::cos(0.7), -std::sin(0.7), std::sin(0.7), std::cos(0.7)).finished()},
      {point_map_only(translation_probe(r, vec2(0.3, 0.2), "randers-translation")), vec2(0.1, 0.0),
       I},
      {point_map_only(translation_probe(h, vec2(1.0, 0.0), "hyperbolic-translation")),
       vec2(0.0, 1.0), I},
  };
  for (const auto& c : cases) {
    if (!keep(c.probe.source, family)) continue;
    const std::string& l = c.probe.label;
    const MyersSteenrodRecord rec = myers_steenrod_reconstruct(c.probe, c.p, 0.5, ctx.seed);
    out.push_back(check_holds(l + ":distance-audit", rec.audit.passed));
    if (!rec.audit.passed) continue;
    out.push_back(check_below(l + ":derivative-error",
                              (rec.derivative - c.expected).cwiseAbs().maxCoeff(), 1e-3, ts));
    out.push_back(check_below(l + ":F-defect", rec.f_defect, 1e-3, ts));
    out.push_back(check_below(l + ":busemann-mayer-vs-direct", rec.route_agreement, 1e-3, ts));
    out.push_back(check_below(l + ":chart-identity", rec.chart_identity_defect, 1e-7, ts));
  }
  if (keep(e, family)) {
    const MyersSteenrodRecord rec =
        myers_steenrod_reconstruct(scaling_probe(e, 2.0), vec2(0.0, 0.0), 0.5, ctx.seed);
    std::string witness;
    if (rec.audit.witness_a.size())
      witness = "p=" + fmt_vec(rec.audit.witness_a) + " q=" + fmt_vec(rec.audit.witness_b);
    out.push_back(check_holds("euclidean-scaling-2:audit-rejects-with-witness",
                              !rec.audit.passed && !witness.empty(), witness));
  }
  if (out.empty()) throw ConfigError("no Myers-Steenrod cases for family '" + family + "'");
  return out;
}

// ─── Submetries ──────────────────────────────────────────────────────────────

std::vector<Check> submetry_suite(const SuiteContext& ctx, const std::string& family) {
  const double ts = ctx.tol_scale;
  std::vector<Check> out;

  struct Case {
    std::string label;
    Vec base;
    Vec q;
    double eps;
  };
  const std::vector<Case> cases{
      {"euclidean", vec2(0.0, 0.0), vec2(1.0, 0.0), 0.25},
      {"minkowski-norm", vec2(0.0, 0.0), vec2(0.6, 0.3), 0.2},
      {"riemannian", vec2(0.0, 0.0), vec2(0.3, 0.2), 0.15},
      {"hyperbolic-half-plane", vec2(0.0, 1.0), vec2(0.0, std::exp(1.0)), 0.2},
      {"round-sphere-patch", vec2(0.0, 0.0), vec2(0.4, 0.2), 0.2},
  };
  for (const auto& c : cases) {
    const MetricPtr m = instance(c.label);
    if (!keep(m, family)) continue;
    const SubmetryProbe sp = make_submetry_probe(m, distance_function(m, c.base), 0.1, "r_base");
    const BallImage img = submetry_ball_image(sp, c.q, c.eps, 4000, ctx.seed);
    out.push_back(check_holds(c.label + ":ball-image-contained", img.contained));
    out.push_back(
        check_below(c.label + ":ball-image-low-gap", img.min - (img.r_center - c.eps), 0.02, ts));
    out.push_back(
        check_below(c.label + ":ball-image-high-gap", (img.r_center + c.eps) - img.max, 0.02, ts));
    const SubmetryDifferential d = submetry_differential(sp, c.q, ctx.seed);
    out.push_back(check_below(c.label + ":sandwich-gradient-disagreement", d.residual, 1e-3, ts));
    out.push_back(
        check_below(c.label + ":sandwich-vs-direct-gradient", d.direct_mismatch, 1e-3, ts));
    out.push_back(check_below(c.label + ":sandwich-ordering", d.sandwich_violation, 1e-9, ts));
    out.push_back(check_below(c.label + ":sandwich-touching", d.touching_gap, 1e-9, ts));
  }

  const auto e = instance("euclidean");
  if (keep(e, family)) {
    const SubmetryProbe sp =
        make_submetry_probe(e, distance_function(e, vec2(0.0, 0.0)), 0.1, "r_origin");
    const Vec q34 = vec2(3.0, 4.0);
    const SubmetryDifferential d = submetry_differential(sp, q34, ctx.seed);
    out.push_back(
        check_below("euclidean:gradient-at-(3,4)", (d.gradient - vec2(0.6, 0.8)).norm(), 1e-3, ts));
    const SubmetryProbe sq =
        make_submetry_probe(e, [](const Vec& x) { return x[0] * x[0]; }, 0.1, "x1^2");
    const BallImage img = submetry_ball_image(sq, vec2(0.0, 0.0), 0.25, 4000, ctx.seed);
    out.push_back(check_holds("x1^2:coverage-fails", !img.covered));
  }
  const auto r = instance("randers-flat");
  if (keep(r, family)) {
    bool refused = false;
    std::string why;
    try {
      make_submetry_probe(r, distance_function(r, vec2(0.0, 0.0)), 0.1, "r_origin");
    } catch (const MapError& ex) {
      refused = true;
      why = ex.what();
    }
    out.push_back(check_holds("randers:non-reversible-refused", refused, why));
  }
  if (out.empty()) throw ConfigError("no submetry cases for family '" + family + "'");
  return out;
}

}  // namespace finsler
