#include "finsler/geodesics.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "finsler/distance.hpp"

namespace finsler {

namespace {

ode::Rhs geodesic_rhs(std::function<Vec(const Vec&, const Vec&)> G, Eigen::Index n) {
  return [G = std::move(G), n](double, const Vec& z) -> Vec {
    Vec dz(2 * n);
    dz.head(n) = z.tail(n);
    dz.tail(n) = -2.0 * G(z.head(n), z.tail(n));
    return dz;
  };
}

ode::Rhs metric_rhs(const FinslerMetric& m, Eigen::Index n) {
  return geodesic_rhs([&m](const Vec& x, const Vec& y) { return spray_coefficients(m, x, y); }, n);
}

ode::Options to_ode(const GeodesicOptions& o, bool dense) {
  ode::Options out;
  out.rtol = o.rtol;
  out.atol = o.atol;
  out.max_steps = o.max_steps;
  out.dense = dense;
  return out;
}

Vec stack(const Vec& a, const Vec& b) {
  Vec z(a.size() + b.size());
  z << a, b;
  return z;
}

void check_initial(const FinslerMetric& m, const Vec& p, const Vec& v) {
  m.patch().require(p, m.boundary_margin());
  if (static_cast<std::size_t>(v.size()) != m.dim())
    throw DomainError("initial velocity has the wrong dimension");
}

}  // namespace

// ─── GeodesicPath ────────────────────────────────────────────────────────────

Vec GeodesicPath::state(double t) const {
  if (t < t_minus_ - 1e-14 || t > t_plus_ + 1e-14) {
    std::ostringstream os;
    os << "t=" << t << " outside the integrated span [" << t_minus_ << ", " << t_plus_ << "]";
    throw DomainError(os.str());
  }
  if (segments_.empty()) return stack(p_, v_);
  auto lower = [](const ode::Segment& s) { return std::min(s.t0, s.t1()); };
  auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                             [&](double value, const ode::Segment& s) { return value < lower(s); });
  if (it != segments_.begin()) --it;
  return it->eval(t);
}

Vec GeodesicPath::position(double t) const { return state(t).head(p_.size()); }
Vec GeodesicPath::velocity(double t) const { return state(t).tail(p_.size()); }

double GeodesicPath::max_speed_drift(const FinslerMetric& m) const {
  const double f0 = m.F(p_, v_);
  if (!(f0 > 0.0)) return 0.0;
  double worst = 0.0;
  for (const auto& s : samples_) worst = std::max(worst, std::abs(m.F(s.x, s.v) - f0) / f0);
  return worst;
}

GeodesicPath integrate_geodesic(const SprayField& s, const Vec& p, const Vec& v, TimeSpan span,
                                const GeodesicOptions& opts) {
  const FinslerMetric& m = s.metric();
  check_initial(m, p, v);
  if (span.t_minus > 0.0 || span.t_plus < 0.0) throw DomainError("time span must contain t = 0");
  const auto n = p.size();
  const ode::Rhs rhs = geodesic_rhs([&s](const Vec& x, const Vec& y) { return s(x, y); }, n);
  const Vec z0 = stack(p, v);

  GeodesicPath path;
  path.p_ = p;
  path.v_ = v;
  path.requested_ = span;
  path.stats_.rtol = opts.rtol;
  path.stats_.atol = opts.atol;

  const ode::Result back = ode::dopri5(rhs, 0.0, z0, span.t_minus, to_ode(opts, true));
  const ode::Result fwd = ode::dopri5(rhs, 0.0, z0, span.t_plus, to_ode(opts, true));

  for (const auto* r : {&back, &fwd}) {
    path.stats_.steps += r->steps;
    path.stats_.rejected += r->rejected;
    path.stats_.evaluations += r->evaluations;
    if (r->domain_exit) {
      path.exited_ = true;
      if (path.exit_reason_.empty()) path.exit_reason_ = r->exit_reason;
    }
  }
  path.t_minus_ = back.t.back();
  path.t_plus_ = fwd.t.back();

  for (std::size_t i = back.t.size(); i-- > 1;)
    path.samples_.push_back({back.t[i], back.y[i].head(n), back.y[i].tail(n)});
  for (std::size_t i = 0; i < fwd.t.size(); ++i)
    path.samples_.push_back({fwd.t[i], fwd.y[i].head(n), fwd.y[i].tail(n)});

  for (auto it = back.segments.rbegin(); it != back.segments.rend(); ++it)
    path.segments_.push_back(*it);
  path.segments_.insert(path.segments_.end(), fwd.segments.begin(), fwd.segments.end());
  return path;
}

GeodesicPath integrate_geodesic(const MetricPtr& m, const Vec& p, const Vec& v, TimeSpan span,
                                const GeodesicOptions& opts) {
  return integrate_geodesic(SprayField::canonical(m), p, v, span, opts);
}

void write_csv(std::ostream& os, const GeodesicPath& path) {
  const auto n = path.initial_point().size();
  os << "t";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x" << i + 1;
  for (Eigen::Index i = 0; i < n; ++i) os << ",v" << i + 1;
  os << '\n';
  const auto old_flags = os.flags();
  const auto old_prec = os.precision();
  os << std::setprecision(17);
  for (const auto& s : path.samples()) {
    os << s.t;
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << s.x[i];
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << s.v[i];
    os << '\n';
  }
  os.flags(old_flags);
  os.precision(old_prec);
}

GeodesicEndpoint geodesic_flow(const FinslerMetric& m, const Vec& p, const Vec& v, double t,
                               const GeodesicOptions& opts) {
  check_initial(m, p, v);
  const auto n = p.size();
  if (v.isZero(0.0) || t == 0.0) return {p, v};
  const ode::Result r = ode::dopri5(metric_rhs(m, n), 0.0, stack(p, v), t, to_ode(opts, false));
  if (r.domain_exit) {
    std::ostringstream os;
    os << "geodesic leaves the patch at t=" << r.t.back() << " before reaching t=" << t;
    throw DomainError(os.str());
  }
  return {r.y.back().head(n), r.y.back().tail(n)};
}

Vec exponential(const FinslerMetric& m, const Vec& p, const Vec& v, const GeodesicOptions& opts) {
  return geodesic_flow(m, p, v, 1.0, opts).x;
}

double rescaling_defect(const FinslerMetric& m, const Vec& p, const Vec& v, double t, double s,
                        const GeodesicOptions& opts) {
  if (!(t > 0.0)) throw DegenerateInputError("rescaling factor t must be positive");
  const Vec lhs = geodesic_flow(m, p, t * v, s, opts).x;
  const Vec rhs = geodesic_flow(m, p, v, s * t, opts).x;
  return (lhs - rhs).norm();
}

// ─── Normal radius ───────────────────────────────────────────────────────────

bool shooting_fan_succeeds(const FinslerMetric& m, const Vec& p, double r,
                           const NormalRadiusOptions& opts) {
  const auto n = m.dim();
  std::vector<Vec> dirs;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec e = Vec::Unit(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i));
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  Rng rng(opts.seed);
  for (std::size_t k = 0; k < opts.random_directions; ++k) dirs.push_back(rng.unit_vector(n));

  ShootingOptions shoot;
  for (const auto& u : dirs) {
    const Vec v_true = r * u / m.F(p, u);
    try {
      const Vec q = exponential(m, p, v_true, shoot.integration);
      const ShootingResult res = invert_exp(m, p, q, shoot);
      if ((res.v - v_true).norm() > 1e-6 * std::max(1.0, v_true.norm())) return false;
    } catch (const Error&) {
      return false;
    }
  }
  return true;
}

NormalRadiusEstimate normal_radius(const FinslerMetric& m, const Vec& p, double cap,
                                   const NormalRadiusOptions& opts) {
  if (!(cap > 0.0)) throw DegenerateInputError("normal_radius cap must be positive");
  m.patch().require(p, m.boundary_margin());
  NormalRadiusEstimate est;
  est.center = p;
  est.method = "shooting fan (" + std::to_string(2 * m.dim()) + " axis + " +
               std::to_string(opts.random_directions) + " seeded directions), bisection";
  auto probe = [&](double r) {
    ++est.probes;
    return shooting_fan_succeeds(m, p, r, opts);
  };
  if (probe(cap)) {
    est.radius = cap;
    est.reached_cap = true;
    return est;
  }
  double lo = 0.5 * cap;
  while (!probe(lo)) {
    lo *= 0.5;
    if (lo < opts.min_relative_radius * cap)
      throw DegenerateInputError("no radius passes the shooting fan (degenerate metric?)");
  }
  double hi = std::min(cap, 2.0 * lo);
  while (hi - lo > opts.relative_precision * lo) {
    const double mid = 0.5 * (lo + hi);
    (probe(mid) ? lo : hi) = mid;
  }
  est.radius = lo;
  return est;
}

// ─── Emanating points ────────────────────────────────────────────────────────

EmanatingPoint emanating_point(const FinslerMetric& m, const Vec& p, const Vec& v,
                               std::optional<double> delta, const EmanatingOptions& opts) {
  check_initial(m, p, v);
  if (v.isZero(0.0)) throw DegenerateInputError("emanating_point needs a nonzero vector");

  double d = delta ? *delta : 0.1 * normal_radius(m, p, opts.normal_radius_cap).radius;
  if (!(d > 0.0)) throw DegenerateInputError("delta must be positive");

  std::optional<GeodesicEndpoint> back;
  for (std::size_t attempt = 0; attempt <= opts.max_retries; ++attempt) {
    try {
      back = geodesic_flow(m, p, v, -d, opts.integration);
      break;
    } catch (const DomainError&) {
      d *= 0.5;
    }
  }
  if (!back) throw DomainError("backward geodesic leaves the patch for every retried delta");

  EmanatingPoint ep;
  ep.q = back->x;
  ep.delta = d;
  const double speed = m.F(ep.q, back->v);
  const double r_q = normal_radius(m, ep.q, opts.normal_radius_cap).radius;
  ep.lambda = std::min(1.0, 0.9 * r_q / (d * speed));
  ep.w = ep.lambda * back->v;

  const GeodesicEndpoint fwd = geodesic_flow(m, ep.q, ep.w, d / ep.lambda, opts.integration);
  ep.position_error = (fwd.x - p).norm();
  ep.velocity_error = (fwd.v - ep.lambda * v).norm() / (ep.lambda * v.norm());
  return ep;
}

}  // namespace finsler
