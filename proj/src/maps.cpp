#include "finsler/maps.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "finsler/json_io.hpp"

namespace finsler {

namespace {

constexpr int kBrentBits = std::numeric_limits<double>::digits / 2;

Vec normalised(const FinslerMetric& m, const Vec& x, const Vec& u, DirectionNorm norm) {
  return norm == DirectionNorm::finsler ? Vec(u / m.F(x, u)) : Vec(u / u.norm());
}

// Maximise f over unit vectors, starting from the best of `dirs`, by Brent
// searches along great arcs through the current best.
std::pair<Vec, double> maximise_on_sphere(const std::function<double(const Vec&)>& f,
                                          const std::vector<Vec>& dirs, double window,
                                          int sweeps = 2) {
  Vec best = dirs.front();
  double best_val = -std::numeric_limits<double>::infinity();
  for (const auto& u : dirs) {
    const double val = f(u);
    if (val > best_val) {
      best_val = val;
      best = u;
    }
  }
  const auto n = static_cast<std::size_t>(best.size());
  for (int s = 0; s < sweeps; ++s) {
    for (const Vec& e : null_space_basis({best}, n)) {
      const Vec u0 = best;
      auto arc = [&](double th) -> Vec { return std::cos(th) * u0 + std::sin(th) * e; };
      const auto [th, neg] = boost::math::tools::brent_find_minima(
          [&](double t) { return -f(arc(t)); }, -window, window, kBrentBits);
      if (-neg > best_val) {
        best_val = -neg;
        best = arc(th);
      }
    }
  }
  return {best, best_val};
}

std::vector<Vec> fan(std::size_t dim, std::size_t random, Rng& rng) {
  std::vector<Vec> dirs;
  for (std::size_t i = 0; i < dim; ++i) {
    const Vec e = Vec::Unit(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(i));
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  for (std::size_t k = 0; k < random; ++k) dirs.push_back(rng.unit_vector(dim));
  return dirs;
}

std::optional<Vec> draw_source_point(const MapProbe& probe, Rng& rng) {
  const FinslerMetric& m = *probe.source;
  const auto& region = m.reference_region();
  const Vec x = rng.in_ball(region.center, region.radius);
  if (!m.patch().contains(x, m.boundary_margin())) return std::nullopt;
  const Vec y = probe(x);
  if (!probe.target->patch().contains(y, probe.target->boundary_margin())) return std::nullopt;
  return x;
}

Mat rotation_matrix(std::size_t dim, double angle) {
  Mat R = Mat::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  R(0, 0) = std::cos(angle);
  R(0, 1) = -std::sin(angle);
  R(1, 0) = std::sin(angle);
  R(1, 1) = std::cos(angle);
  return R;
}

}  // namespace

// ─── Probes ──────────────────────────────────────────────────────────────────

Vec MapProbe::operator()(const Vec& x) const {
  const Vec y = forward(x);
  if (!y.allFinite()) throw MapError("map '" + label + "' returned a non-finite value");
  return y;
}

Mat MapProbe::pushforward(const Vec& x) const {
  if (derivative) return derivative(x);
  const Mat J = jacobian(forward, x, DiffConfig{default_fd_step(), 2});
  if (!J.allFinite()) throw MapError("map '" + label + "' is not differentiable here");
  return J;
}

MapProbe affine_probe(MetricPtr source, MetricPtr target, const Mat& A, const Vec& c,
                      std::string label) {
  MapProbe p;
  p.source = std::move(source);
  p.target = std::move(target);
  p.forward = [A, c](const Vec& x) -> Vec { return A * x + c; };
  p.derivative = [A](const Vec&) { return A; };
  Eigen::FullPivLU<Mat> lu(A);
  if (lu.isInvertible()) {
    const Mat Ainv = lu.inverse();
    p.preimage = [Ainv, c](const Vec& y) -> Vec { return Ainv * (y - c); };
  }
  p.label = std::move(label);
  return p;
}

MapProbe rotation_probe(MetricPtr m, double angle, std::string label) {
  if (m->dim() < 2) throw DegenerateInputError("rotation needs dim >= 2");
  const auto n = m->dim();
  return affine_probe(m, m, rotation_matrix(n, angle), Vec::Zero(static_cast<Eigen::Index>(n)),
                      std::move(label));
}

MapProbe translation_probe(MetricPtr m, const Vec& offset, std::string label) {
  const auto n = static_cast<Eigen::Index>(m->dim());
  if (offset.size() != n) throw DegenerateInputError("offset has the wrong dimension");
  return affine_probe(m, m, Mat::Identity(n, n), offset, std::move(label));
}

MapProbe scaling_probe(MetricPtr m, double factor, std::string label) {
  const auto n = static_cast<Eigen::Index>(m->dim());
  return affine_probe(m, m, factor * Mat::Identity(n, n), Vec::Zero(n), std::move(label));
}

MapProbe shear_probe(MetricPtr m, double k, std::string label) {
  const auto n = static_cast<Eigen::Index>(m->dim());
  if (n < 2) throw DegenerateInputError("shear needs dim >= 2");
  Mat A = Mat::Identity(n, n);
  A(0, 1) = k;
  return affine_probe(m, m, A, Vec::Zero(n), std::move(label));
}

MapProbe bend_probe(MetricPtr m, double k, std::string label) {
  if (m->dim() < 2) throw DegenerateInputError("bend needs dim >= 2");
  MapProbe p;
  p.source = m;
  p.target = m;
  p.forward = [k](const Vec& x) -> Vec {
    Vec y = x;
    y[1] += k * x[0] * x[0];
    return y;
  };
  p.derivative = [k](const Vec& x) -> Mat {
    Mat J = Mat::Identity(x.size(), x.size());
    J(1, 0) = 2.0 * k * x[0];
    return J;
  };
  p.preimage = [k](const Vec& y) -> Vec {
    Vec x = y;
    x[1] -= k * y[0] * y[0];
    return x;
  };
  p.label = std::move(label);
  return p;
}

MapProbe map_from_json(const MetricPtr& m, const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind")) throw ConfigError("map needs a \"kind\"");
  const std::string kind = j.at("kind").get<std::string>();
  auto number = [&](const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number())
      throw ConfigError(std::string("map parameter '") + key + "' must be a number");
    return j.at(key).get<double>();
  };
  for (const auto& [key, _] : j.items()) {
    static const std::vector<std::string> known{"kind", "angle", "offset", "factor", "k"};
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown map parameter '" + key + "'");
  }
  if (kind == "rotation") return rotation_probe(m, number("angle", std::numbers::pi / 2));
  if (kind == "translation") {
    if (!j.contains("offset")) throw ConfigError("translation needs an \"offset\"");
    const Vec c = vec_param(j.at("offset"));
    if (c.size() != static_cast<Eigen::Index>(m->dim()))
      throw ConfigError("translation offset has the wrong dimension");
    return translation_probe(m, c);
  }
  if (kind == "scaling") return scaling_probe(m, number("factor", 2.0));
  if (kind == "shear") return shear_probe(m, number("k", 1.0));
  if (kind == "bend") return bend_probe(m, number("k", 0.5));
  throw ConfigError("unknown map kind '" + kind + "'");
}

// ─── Isometry diagnostics ────────────────────────────────────────────────────

MapDefect isometry_defect(const MapProbe& probe, std::size_t samples, std::uint64_t seed,
                          DirectionNorm norm) {
  const FinslerMetric& m = *probe.source;
  const FinslerMetric& mt = *probe.target;
  Rng rng(seed);
  MapDefect out;
  out.value = -1.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const auto x = draw_source_point(probe, rng);
    if (!x) {
      ++out.skipped;
      continue;
    }
    const Vec fx = probe(*x);
    const Mat D = probe.pushforward(*x);
    auto defect = [&](const Vec& u) {
      const Vec v = normalised(m, *x, u, norm);
      return std::abs(mt.F(fx, D * v) - m.F(*x, v));
    };
    const auto [u, val] = maximise_on_sphere(defect, fan(m.dim(), 32, rng), 0.4);
    ++out.samples;
    if (val > out.value) {
      out.value = val;
      out.point = *x;
      out.vector = normalised(m, *x, u, norm);
    }
  }
  if (out.samples == 0) throw MapError("no sample point maps into the target patch");
  return out;
}

MapDefect spray_pushforward_defect(const MapProbe& probe, std::size_t samples, std::uint64_t seed) {
  const FinslerMetric& m = *probe.source;
  const FinslerMetric& mt = *probe.target;
  Rng rng(seed);
  MapDefect out;
  out.value = -1.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const auto x = draw_source_point(probe, rng);
    if (!x) {
      ++out.skipped;
      continue;
    }
    const Vec u = rng.unit_vector(m.dim());
    const Vec v = u / m.F(*x, u);
    const Mat D = probe.pushforward(*x);
    const Vec accel = second_directional_derivative(probe.forward, *x, v, nested_diff_config());
    if (!accel.allFinite()) throw MapError("second derivative of '" + probe.label + "' diverges");
    const Vec res = accel - 2.0 * D * spray_coefficients(m, *x, v) +
                    2.0 * spray_coefficients(mt, probe(*x), D * v);
    ++out.samples;
    if (res.norm() > out.value) {
      out.value = res.norm();
      out.point = *x;
      out.vector = v;
    }
  }
  if (out.samples == 0) throw MapError("no sample point maps into the target patch");
  return out;
}

GeodesicImageDefect geodesic_image_defect(const MapProbe& probe, const GeodesicPath& path,
                                          const GeodesicOptions& opts) {
  const Vec p = path.initial_point();
  const GeodesicPath image =
      integrate_geodesic(probe.target, probe(p), probe.pushforward(p) * path.initial_velocity(),
                         {path.t_minus(), path.t_plus()}, opts);
  GeodesicImageDefect out;
  out.t_minus = std::max(path.t_minus(), image.t_minus());
  out.t_plus = std::min(path.t_plus(), image.t_plus());
  out.truncated = path.exited_patch() || image.exited_patch();

  std::vector<double> times;
  for (const auto& s : path.samples())
    if (s.t >= out.t_minus && s.t <= out.t_plus) times.push_back(s.t);
  constexpr int kGrid = 64;
  for (int i = 0; i <= kGrid; ++i)
    times.push_back(out.t_minus + (out.t_plus - out.t_minus) * i / kGrid);
  for (double t : times)
    out.gap = std::max(out.gap, (probe(path.position(t)) - image.position(t)).norm());
  return out;
}

DistanceAudit audit_distance_preservation(const MapProbe& probe, const Vec& p, double radius,
                                          std::size_t pairs, std::uint64_t seed, double tol) {
  const FinslerMetric& m = *probe.source;
  Rng rng(seed);
  DistanceAudit audit;
  audit.worst = -1.0;
  std::size_t attempts = 0;
  while (audit.pairs < pairs) {
    if (++attempts > 100 * pairs) throw MapError("audit ball does not meet the patch");
    const Vec a = rng.in_ball(p, radius);
    const Vec b = rng.in_ball(p, radius);
    if (!m.patch().contains(a, m.boundary_margin()) || !m.patch().contains(b, m.boundary_margin()))
      continue;
    const double before = distance(m, a, b);
    const double after = distance(*probe.target, probe(a), probe(b));
    const double gap = std::abs(after - before);
    ++audit.pairs;
    if (gap > audit.worst) {
      audit.worst = gap;
      audit.witness_a = a;
      audit.witness_b = b;
    }
  }
  audit.passed = audit.worst <= tol;
  return audit;
}

std::vector<Vec> propagate_from_derivative(const FinslerMetric& m, const Vec& p,
                                           const FinslerMetric& m_target, const Vec& p_image,
                                           const Mat& L, const std::vector<Vec>& targets) {
  m.patch().require(p, m.boundary_margin());
  m_target.patch().require(p_image, m_target.boundary_margin());
  Rng rng(0x4c);
  for (const Vec& u : fan(m.dim(), 32, rng)) {
    const double f = m.F(p, u);
    if (std::abs(m_target.F(p_image, L * u) - f) > 1e-9 * f) {
      std::ostringstream os;
      os << "L does not preserve F at p (direction " << u.transpose() << ")";
      throw MapError(os.str());
    }
  }
  const ShootingOptions shoot;
  std::vector<Vec> out;
  out.reserve(targets.size());
  for (const Vec& r : targets) {
    const Vec v = invert_exp(m, p, r, shoot).v;
    out.push_back(exponential(m_target, p_image, L * v, shoot.integration));
  }
  return out;
}

// ─── Myers-Steenrod ──────────────────────────────────────────────────────────

namespace {

std::optional<Vec> gauss_newton_preimage(const MapProbe& probe, const Vec& q, Vec a) {
  const FinslerMetric& m = *probe.source;
  const double tol = 1e-13 * (1.0 + q.cwiseAbs().maxCoeff());
  try {
    Vec r = probe(a) - q;
    for (int it = 0; it < 50; ++it) {
      if (r.norm() < tol) return a;
      const Vec step = probe.pushforward(a).fullPivLu().solve(-r);
      double alpha = 1.0;
      bool moved = false;
      for (int b = 0; b < 30 && !moved; ++b, alpha *= 0.5) {
        const Vec trial = a + alpha * step;
        if (!m.patch().contains(trial, m.boundary_margin())) continue;
        const Vec rt = probe(trial) - q;
        if (rt.norm() < r.norm()) {
          a = trial;
          r = rt;
          moved = true;
        }
      }
      if (!moved) return r.norm() < 1e3 * tol ? std::optional<Vec>(a) : std::nullopt;
    }
  } catch (const Error&) {
  }
  return std::nullopt;
}

}  // namespace

MyersSteenrodRecord myers_steenrod_reconstruct(const MapProbe& probe, const Vec& p, double radius,
                                               std::uint64_t seed,
                                               const MyersSteenrodOptions& opts) {
  const FinslerMetric& m = *probe.source;
  const FinslerMetric& mt = *probe.target;
  MyersSteenrodRecord rec;
  rec.audit = audit_distance_preservation(probe, p, radius, opts.audit_pairs, seed, opts.audit_tol);
  if (!rec.audit.passed) return rec;

  const Vec fp = probe(p);
  rec.chart = build_distance_chart(probe.target, fp, radius, seed);
  const DistanceChart& chart = *rec.chart;

  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (std::size_t i = 0; i < chart.dim(); ++i) {
    const Vec& q = chart.base_points[i];
    std::optional<Vec> a;
    if (probe.preimage) {
      a = probe.preimage(q);
    } else {
      for (std::size_t s = 0; s < opts.preimage_starts && !a; ++s) {
        const Vec start = s == 0 ? Vec(p + (q - fp)) : rng.in_ball(p, radius);
        if (!m.patch().contains(start, m.boundary_margin())) continue;
        a = gauss_newton_preimage(probe, q, start);
      }
    }
    if (!a || distance(mt, probe(*a), q) > 1e-8)
      throw MapError("no preimage found for base point " + std::to_string(i + 1));
    rec.preimages.push_back(*a);
  }

  auto source_coords = [&](const Vec& a) {
    Vec r(static_cast<Eigen::Index>(chart.dim()));
    for (std::size_t i = 0; i < chart.dim(); ++i)
      r[static_cast<Eigen::Index>(i)] = distance(m, rec.preimages[i], a);
    return r;
  };

  for (std::size_t k = 0; k < opts.identity_samples; ++k) {
    const Vec a = rng.in_ball(p, 0.5 * chart.certified_radius);
    const Vec gap = source_coords(a) - evaluate_chart(chart, probe(a));
    rec.chart_identity_defect = std::max(rec.chart_identity_defect, gap.cwiseAbs().maxCoeff());
  }

  const VectorMap local_form = [&](const Vec& a) {
    return invert_chart(chart, source_coords(a), 1e-11).x;
  };
  rec.derivative = jacobian(local_form, p, nested_diff_config());

  const QuasiMetricOracle rho_bar = metric_oracle(probe.target);
  for (std::size_t k = 0; k < opts.direction_samples; ++k) {
    const Vec u = rng.unit_vector(m.dim());
    const Vec v = u / m.F(p, u);
    const double direct = mt.F(fp, rec.derivative * v);
    const double bm = busemann_mayer_F(rho_bar, [&](double t) { return probe(Vec(p + t * v)); });
    rec.f_defect = std::max(rec.f_defect, std::abs(direct - 1.0));
    rec.route_agreement = std::max(rec.route_agreement, std::abs(bm - direct));
  }
  return rec;
}

// ─── Submetries ──────────────────────────────────────────────────────────────

SubmetryProbe make_submetry_probe(MetricPtr m, ScalarField r, double delta, std::string label) {
  if (!m->declared_reversible())
    throw MapError("submetry tools need a reversible metric; '" + std::string(m->name()) +
                   "' is not");
  if (!validate_finsler(*m, 32, 0x5eed).reversible)
    throw MapError("metric claims reversibility but samples disagree");
  if (!(delta > 0.0)) throw DegenerateInputError("delta must be positive");
  return {std::move(m), std::move(r), delta, std::move(label)};
}

ScalarField distance_function(const MetricPtr& m, const Vec& p) {
  return [m, p](const Vec& x) { return distance(*m, p, x); };
}

BallImage submetry_ball_image(const SubmetryProbe& sp, const Vec& q, double eps,
                              std::size_t n_samples, std::uint64_t seed) {
  const FinslerMetric& m = *sp.metric;
  if (!(eps > 0.0) || n_samples == 0) throw DegenerateInputError("need eps > 0 and samples");
  Rng rng(seed);
  BallImage out;
  out.r_center = sp.r(q);
  out.min = std::numeric_limits<double>::infinity();
  out.max = -out.min;
  out.coverage_tol = 2.0 * eps / std::sqrt(static_cast<double>(n_samples));
  const double dim = static_cast<double>(m.dim());
  const GeodesicOptions integ = precise_geodesic_options();
  for (std::size_t k = 0; k < n_samples; ++k) {
    const Vec u = rng.unit_vector(m.dim());
    const double s = std::min(eps * std::pow(rng.uniform(), 1.0 / dim), (1.0 - 1e-6) * eps);
    const Vec a = exponential(m, q, s * u / m.F(q, u), integ);
    const double val = sp.r(a);
    out.min = std::min(out.min, val);
    out.max = std::max(out.max, val);
    ++out.samples;
  }
  out.contained = out.min > out.r_center - eps && out.max < out.r_center + eps;
  out.covered = out.min <= out.r_center - eps + out.coverage_tol &&
                out.max >= out.r_center + eps - out.coverage_tol;
  return out;
}

SubmetryDifferential submetry_differential(const SubmetryProbe& sp, const Vec& q,
                                           std::uint64_t seed, std::size_t sweep) {
  const FinslerMetric& m = *sp.metric;
  const double delta = sp.delta;
  const double rq = sp.r(q);
  const GeodesicOptions integ = precise_geodesic_options();
  auto point = [&](const Vec& u) -> Vec { return exponential(m, q, delta * u / m.F(q, u), integ); };

  Rng rng(seed);
  std::vector<std::pair<Vec, Vec>> swept;  // (end point, direction)
  for (std::size_t k = 0; k < sweep; ++k) {
    const Vec u = rng.unit_vector(m.dim());
    swept.emplace_back(point(u), u);
  }
  // Ties go to the lexicographically smallest end point.
  std::sort(swept.begin(), swept.end(), [](const auto& a, const auto& b) {
    return std::lexicographical_compare(a.first.data(), a.first.data() + a.first.size(),
                                        b.first.data(), b.first.data() + b.first.size());
  });
  std::vector<Vec> dirs;
  for (const auto& s : swept) dirs.push_back(s.second);
  const double window =
      std::min(std::numbers::pi / 2, 4.0 * std::numbers::pi / static_cast<double>(sweep));

  SubmetryDifferential out;
  const auto lo =
      maximise_on_sphere([&](const Vec& u) { return -sp.r(point(u)); }, dirs, window, 3);
  const auto hi = maximise_on_sphere([&](const Vec& u) { return sp.r(point(u)); }, dirs, window, 3);
  out.a = point(lo.first);
  out.b = point(hi.first);
  const double ra = sp.r(out.a);
  const double rb = sp.r(out.b);
  if (std::abs(ra - (rq - delta)) > 1e-6 || std::abs(rb - (rq + delta)) > 1e-6) {
    std::ostringstream os;
    os << "fiber search missed r(q) -/+ delta: r(a) - r(q) = " << ra - rq
       << ", r(b) - r(q) = " << rb - rq;
    throw MapError(os.str());
  }

  const Vec grad_a = distance_gradient(m, out.a, q);
  const Vec grad_b = -distance_gradient(m, out.b, q);
  out.gradient = 0.5 * (grad_a + grad_b);
  out.residual = (grad_a - grad_b).norm();
  out.direct_gradient = gradient(sp.r, q, nested_diff_config());
  out.direct_mismatch = (out.gradient - out.direct_gradient).norm();

  auto f_a = [&](const Vec& u) { return ra + distance(m, out.a, u); };
  auto f_b = [&](const Vec& u) { return rb - distance(m, u, out.b); };
  out.touching_gap = std::max(std::abs(f_a(q) - rq), std::abs(f_b(q) - rq));
  for (int k = 0; k < 16; ++k) {
    const Vec u = rng.unit_vector(m.dim());
    const Vec x = exponential(m, q, 0.5 * delta * rng.uniform() * u / m.F(q, u), integ);
    const double rx = sp.r(x);
    out.sandwich_violation = std::max({out.sandwich_violation, f_b(x) - rx, rx - f_a(x)});
  }
  return out;
}

// ─── Serialisation ───────────────────────────────────────────────────────────

nlohmann::json to_json(const MapDefect& d) {
  nlohmann::json j{{"value", d.value}, {"samples", d.samples}, {"skipped", d.skipped}};
  if (d.point.size()) j["point"] = to_std(d.point);
  if (d.vector.size()) j["vector"] = to_std(d.vector);
  return j;
}

nlohmann::json to_json(const BallImage& b) {
  return {{"r_center", b.r_center}, {"min", b.min},
          {"max", b.max},           {"coverage_tol", b.coverage_tol},
          {"samples", b.samples},   {"contained", b.contained},
          {"covered", b.covered}};
}

nlohmann::json to_json(const SubmetryDifferential& s) {
  return {{"a", to_std(s.a)},
          {"b", to_std(s.b)},
          {"gradient", to_std(s.gradient)},
          {"residual", s.residual},
          {"direct_gradient", to_std(s.direct_gradient)},
          {"direct_mismatch", s.direct_mismatch},
          {"sandwich_violation", s.sandwich_violation},
          {"touching_gap", s.touching_gap}};
}

}  // namespace finsler
