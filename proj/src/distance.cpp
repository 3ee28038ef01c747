#include "finsler/distance.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>

namespace finsler {

// ─── Shooting ────────────────────────────────────────────────────────────────

ShootingResult invert_exp(const FinslerMetric& m, const Vec& p, const Vec& q,
                          const ShootingOptions& opts) {
  m.patch().require(p, m.boundary_margin());
  m.patch().require(q, m.boundary_margin());
  ShootingResult out;
  if ((q - p).isZero(0.0)) {
    out.v = Vec::Zero(p.size());
    return out;
  }
  const double tol = opts.tol * (1.0 + q.cwiseAbs().maxCoeff());

  auto residual = [&](const Vec& v) -> std::optional<Vec> {
    try {
      Vec r = exponential(m, p, v, opts.integration) - q;
      if (!r.allFinite()) return std::nullopt;
      return r;
    } catch (const Error&) {
      return std::nullopt;
    }
  };

  Vec v = opts.initial_guess.value_or(q - p);
  std::optional<Vec> r = residual(v);
  for (int k = 0; !r && k < opts.max_backtracks; ++k) {
    v *= 0.5;
    r = residual(v);
  }
  if (!r) throw InversionError("exp_p is not defined at any scaling of the initial guess");
  double norm = r->norm();

  // The Jacobian only steers Newton, so it is integrated at a looser
  // tolerance; convergence is still judged on the precise residual.
  const DiffConfig jac_cfg{opts.jacobian_step, 1};
  GeodesicOptions jac_integration = opts.integration;
  jac_integration.rtol = std::max(jac_integration.rtol, opts.jacobian_rtol);
  jac_integration.atol = std::max(jac_integration.atol, opts.jacobian_rtol);
  const VectorMap expmap = [&](const Vec& w) { return exponential(m, p, w, jac_integration); };

  for (int it = 0; it < opts.max_iterations && norm >= tol; ++it) {
    Mat J;
    try {
      J = jacobian(expmap, v, jac_cfg);
    } catch (const Error& e) {
      throw InversionError(std::string("Jacobian of exp_p unavailable: ") + e.what());
    }
    Eigen::FullPivLU<Mat> lu(J);
    if (!lu.isInvertible()) throw InversionError("singular Jacobian of exp_p (conjugate point?)");
    const Vec step = lu.solve(-*r);
    if (!step.allFinite()) throw InversionError("non-finite Newton step");

    double alpha = 1.0;
    bool accepted = false;
    for (int b = 0; b <= opts.max_backtracks; ++b, alpha *= 0.5) {
      const Vec trial = v + alpha * step;
      std::optional<Vec> rt = residual(trial);
      if (rt && rt->norm() < (1.0 - 1e-4 * alpha) * norm) {
        v = trial;
        r = std::move(rt);
        norm = r->norm();
        accepted = true;
        break;
      }
    }
    ++out.iterations;
    if (!accepted) {
      std::ostringstream os;
      os << "line search failed at residual " << norm;
      throw InversionError(os.str());
    }
  }
  if (!(norm < tol)) {
    std::ostringstream os;
    os << "no convergence after " << opts.max_iterations << " iterations (residual " << norm << ")";
    throw InversionError(os.str());
  }
  out.v = v;
  out.residual = norm;
  return out;
}

double distance(const FinslerMetric& m, const Vec& p, const Vec& q, const ShootingOptions& opts) {
  const ShootingResult r = invert_exp(m, p, q, opts);
  return m.F(p, r.v);
}

// ─── Arc length ──────────────────────────────────────────────────────────────

Curve Curve::polyline(std::vector<Vec> points) {
  if (points.size() < 2) throw DegenerateInputError("polyline needs at least two points");
  auto pts = std::make_shared<const std::vector<Vec>>(std::move(points));
  const auto edges = static_cast<double>(pts->size() - 1);
  auto piece = [pts, edges](double s) {
    const auto k = static_cast<std::size_t>(std::clamp(std::floor(s * edges), 0.0, edges - 1.0));
    return k;
  };
  Curve c;
  c.position = [pts, edges, piece](double s) -> Vec {
    const std::size_t k = piece(s);
    const double local = s * edges - static_cast<double>(k);
    return (*pts)[k] + local * ((*pts)[k + 1] - (*pts)[k]);
  };
  c.velocity = [pts, edges, piece](double s) -> Vec {
    const std::size_t k = piece(s);
    return edges * ((*pts)[k + 1] - (*pts)[k]);
  };
  c.breakpoints.clear();
  for (std::size_t k = 0; k < pts->size(); ++k)
    c.breakpoints.push_back(static_cast<double>(k) / edges);
  return c;
}

Curve Curve::from_path(const GeodesicPath& path) {
  auto shared = std::make_shared<const GeodesicPath>(path);
  Curve c;
  c.position = [shared](double t) { return shared->position(t); };
  c.velocity = [shared](double t) { return shared->velocity(t); };
  c.breakpoints = {path.t_minus(), path.t_plus()};
  return c;
}

namespace {

// 5-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 5> kNodes{-0.9061798459386640, -0.5384693101056831, 0.0,
                                       0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kWeights{0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                         0.4786286704993665, 0.2369268850561891};

Vec numeric_velocity(const Curve& c, double t, double a, double b) {
  double h = default_fd_step() * (1.0 + std::abs(t));
  const double room = std::min(t - a, b - t);
  if (room < h) {
    // One-sided second-order difference, staying inside the piece.
    const double hs = std::max(room, 1e-3 * (b - a)) > 0 ? std::min(h, 0.25 * (b - a)) : h;
    const double dir = (t - a) < (b - t) ? 1.0 : -1.0;
    return dir *
           (-3.0 * c.position(t) + 4.0 * c.position(t + dir * hs) -
            c.position(t + 2.0 * dir * hs)) /
           (2.0 * hs);
  }
  return (c.position(t + h) - c.position(t - h)) / (2.0 * h);
}

double piece_length(const FinslerMetric& m, const Curve& c, double a, double b, int panels) {
  const double w = (b - a) / panels;
  double total = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double lo = a + k * w;
    for (std::size_t i = 0; i < kNodes.size(); ++i) {
      const double t = lo + 0.5 * w * (kNodes[i] + 1.0);
      const Vec x = c.position(t);
      const Vec v = c.velocity ? c.velocity(t) : numeric_velocity(c, t, a, b);
      total += 0.5 * w * kWeights[i] * m.F(x, v);
    }
  }
  return total;
}

}  // namespace

double arc_length(const FinslerMetric& m, const Curve& curve, double rel_tol) {
  if (curve.breakpoints.size() < 2)
    throw DegenerateInputError("curve needs at least two breakpoints");
  if (!curve.position) throw DegenerateInputError("curve has no position evaluator");
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < curve.breakpoints.size(); ++k) {
    const double a = curve.breakpoints[k];
    const double b = curve.breakpoints[k + 1];
    if (!(b > a)) continue;
    int panels = 2;
    double prev = piece_length(m, curve, a, b, panels);
    for (;;) {
      panels *= 2;
      const double cur = piece_length(m, curve, a, b, panels);
      if (std::abs(cur - prev) <= rel_tol * std::abs(cur) || panels >= (1 << 16)) {
        prev = cur;
        break;
      }
      prev = cur;
    }
    total += prev;
  }
  return total;
}

double arc_length(const FinslerMetric& m, const std::vector<Vec>& polyline, double rel_tol) {
  return arc_length(m, Curve::polyline(polyline), rel_tol);
}

// ─── Oracles ─────────────────────────────────────────────────────────────────

QuasiMetricOracle::QuasiMetricOracle(Evaluator rho, bool symmetric, OracleProvenance provenance,
                                     std::string label)
    : rho_(std::move(rho)),
      symmetric_(symmetric),
      provenance_(provenance),
      label_(std::move(label)) {
  if (!rho_) throw DegenerateInputError("oracle needs an evaluator");
}

double QuasiMetricOracle::operator()(const Vec& p, const Vec& q) const {
  const double v = rho_(p, q);
  if (!std::isfinite(v)) throw NumericError("oracle returned a non-finite distance");
  return v;
}

QuasiMetricOracle metric_oracle(const MetricPtr& m, const ShootingOptions& opts) {
  return QuasiMetricOracle(
      [m, opts](const Vec& p, const Vec& q) { return distance(*m, p, q, opts); },
      m->declared_reversible(), OracleProvenance::computed_from_metric, std::string(m->name()));
}

void write_oracle_table(std::ostream& os, const QuasiMetricOracle& rho,
                        const std::vector<std::pair<Vec, Vec>>& pairs) {
  if (pairs.empty()) throw DegenerateInputError("no pairs to tabulate");
  const auto n = pairs.front().first.size();
  for (Eigen::Index i = 0; i < n; ++i) os << (i ? "," : "") << 'p' << i + 1;
  for (Eigen::Index i = 0; i < n; ++i) os << ",q" << i + 1;
  os << ",rho\n";
  const auto prec = os.precision();
  os << std::setprecision(17);
  for (const auto& [p, q] : pairs) {
    for (Eigen::Index i = 0; i < n; ++i) os << (i ? "," : "") << p[i];
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << q[i];
    os << ',' << rho(p, q) << '\n';
  }
  os.precision(prec);
}

QuasiMetricOracle read_oracle_table(std::istream& is, std::size_t dim, bool symmetric) {
  struct Row {
    Vec p, q;
    double rho;
  };
  auto rows = std::make_shared<std::vector<Row>>();
  std::string line;
  if (!std::getline(is, line)) throw DegenerateInputError("empty oracle table");
  const auto n = static_cast<Eigen::Index>(dim);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
    if (cells.size() != 2 * dim + 1)
      throw DegenerateInputError("oracle table row has the wrong width");
    Row r{Vec(n), Vec(n), cells.back()};
    for (Eigen::Index i = 0; i < n; ++i) {
      r.p[i] = cells[static_cast<std::size_t>(i)];
      r.q[i] = cells[dim + static_cast<std::size_t>(i)];
    }
    rows->push_back(std::move(r));
  }
  return QuasiMetricOracle(
      [rows](const Vec& p, const Vec& q) {
        auto close = [](const Vec& a, const Vec& b) {
          return ((a - b).cwiseAbs().array() <= 1e-12 * (1.0 + b.cwiseAbs().array())).all();
        };
        for (const auto& r : *rows)
          if (close(p, r.p) && close(q, r.q)) return r.rho;
        if ((p - q).isZero(0.0)) return 0.0;
        throw DomainError("pair not present in the oracle table");
      },
      symmetric, OracleProvenance::external, "table");
}

// ─── Busemann-Mayer ──────────────────────────────────────────────────────────

double busemann_mayer_F(const QuasiMetricOracle& rho, const std::function<Vec(double)>& alpha,
                        int levels, double t0) {
  if (levels < 0) throw DegenerateInputError("levels must be >= 0");
  if (!(t0 > 0.0)) throw DegenerateInputError("t0 must be positive");
  const Vec a0 = alpha(0.0);
  std::vector<double> prev, cur;
  for (int k = 0; k <= levels; ++k) {
    const double t = std::ldexp(t0, -k);
    cur.assign(static_cast<std::size_t>(k) + 1, 0.0);
    cur[0] = rho(a0, alpha(t)) / t;
    for (int j = 1; j <= k; ++j) {
      const double f = std::ldexp(1.0, j);
      cur[j] = (f * cur[j - 1] - prev[j - 1]) / (f - 1.0);
    }
    prev.swap(cur);
  }
  const double F = prev.back();
  if (!std::isfinite(F)) throw NumericError("Busemann-Mayer limit is not finite");
  return F;
}

// ─── Spheres and audits ──────────────────────────────────────────────────────

SphereSample sphere_sample(const FinslerMetric& m, const Vec& p, double r, std::size_t count,
                           std::uint64_t seed, bool verify, const ShootingOptions& opts) {
  if (!(r > 0.0)) throw DegenerateInputError("sphere radius must be positive");
  Rng rng(seed);
  SphereSample out;
  for (std::size_t k = 0; k < count; ++k) {
    const Vec u = rng.unit_vector(m.dim());
    try {
      const Vec x = exponential(m, p, r * u / m.F(p, u), opts.integration);
      if (verify) {
        ShootingOptions o = opts;
        o.initial_guess = r * u / m.F(p, u);
        const double err = std::abs(m.F(p, invert_exp(m, p, x, o).v) - r);
        out.max_distance_error = std::max(out.max_distance_error, err);
      }
      out.points.push_back(x);
      out.directions.push_back(u);
    } catch (const DomainError&) {
      ++out.dropped;
    } catch (const InversionError&) {
      ++out.dropped;
    }
  }
  return out;
}

ValidationReport quasimetric_audit(const QuasiMetricOracle& rho, const PatchSpec& patch,
                                   const SampleRegion& region, std::size_t n_pairs,
                                   std::size_t n_triples, std::uint64_t seed,
                                   double triangle_slack) {
  if (n_pairs == 0 || n_triples == 0) throw DegenerateInputError("audit counts must be >= 1");
  Rng rng(seed);
  auto draw = [&]() {
    for (int tries = 0; tries < 1000; ++tries) {
      Vec x = rng.in_ball(region.center, region.radius);
      if (patch.contains(x, 1e-3)) return x;
    }
    throw DegenerateInputError("sample region does not meet the patch");
  };

  AxiomCheck nonneg{"non-negativity"};
  AxiomCheck identity{"identity"};
  AxiomCheck triangle{"triangle"};
  AxiomCheck symmetry{"symmetry"};
  ValidationReport rep;
  rep.seed = seed;
  rep.sample_count = n_pairs + n_triples;
  rep.reversible_declared = rho.symmetric();

  double worst_asym = -1.0;
  auto note_negative = [&](double value, const Vec& a, const Vec& b) {
    if (value < 0.0) {
      nonneg.passed = false;
      if (-value > nonneg.worst_residual) {
        nonneg.worst_residual = -value;
        std::ostringstream os;
        os << "rho=" << value << " for p=(" << a.transpose() << "), q=(" << b.transpose() << ")";
        nonneg.witness = os.str();
      }
    }
  };

  for (std::size_t k = 0; k < n_pairs; ++k) {
    const Vec a = draw();
    const Vec b = draw();
    const double self = rho(a, a);
    note_negative(self, a, a);
    if (std::abs(self) > identity.worst_residual) identity.worst_residual = std::abs(self);
    if (std::abs(self) > 1e-10) {
      identity.passed = false;
      if (identity.witness.empty()) {
        std::ostringstream os;
        os << "rho(p,p)=" << self << " at p=(" << a.transpose() << ")";
        identity.witness = os.str();
      }
    }
    const double ab = rho(a, b);
    const double ba = rho(b, a);
    note_negative(ab, a, b);
    note_negative(ba, b, a);
    if (!(ab > 0.0) && (a - b).norm() > 0.0) {
      identity.passed = false;
      std::ostringstream os;
      os << "rho(p,q)=" << ab << " for distinct p=(" << a.transpose() << "), q=(" << b.transpose()
         << ")";
      identity.witness = os.str();
    }
    const double asym = std::abs(ab - ba);
    if (asym > worst_asym) {
      worst_asym = asym;
      rep.witness_a = a;
      rep.witness_b = b;
      std::ostringstream os;
      os << "rho(p,q)=" << ab << " vs rho(q,p)=" << ba;
      symmetry.witness = os.str();
    }
  }

  for (std::size_t k = 0; k < n_triples; ++k) {
    const Vec a = draw();
    const Vec b = draw();
    const Vec c = draw();
    const double viol = rho(a, c) - rho(a, b) - rho(b, c);
    if (viol > triangle.worst_residual) {
      triangle.worst_residual = viol;
      std::ostringstream os;
      os << "rho(a,c) exceeds rho(a,b)+rho(b,c) by " << viol;
      triangle.witness = os.str();
    }
  }
  triangle.passed = triangle.worst_residual <= triangle_slack;

  symmetry.worst_residual = std::max(worst_asym, 0.0);
  rep.reversible = symmetry.worst_residual <= 1e-9;
  symmetry.passed = rep.reversible == rep.reversible_declared;
  if (rep.reversible) {
    rep.witness_a.resize(0);
    rep.witness_b.resize(0);
    symmetry.witness.clear();
  }
  rep.checks = {nonneg, identity, triangle, symmetry};
  return rep;
}

}  // namespace finsler
