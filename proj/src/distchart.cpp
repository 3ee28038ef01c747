#include "finsler/distchart.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "finsler/json_io.hpp"

namespace finsler {

namespace {

struct BaseData {
  Vec q;
  Vec grad;
  double rho = 0.0;
};

// Gradient of r_base at p, warm-starting every shot from exp_base^{-1}(p).
BaseData base_data(const FinslerMetric& m, const Vec& base, const Vec& p,
                   const ChartOptions& opts) {
  if ((base - p).isZero(0.0)) throw DegenerateInputError("base point coincides with p");
  BaseData d;
  d.q = base;
  ShootingOptions shoot = opts.shooting;
  const ShootingResult at_p = invert_exp(m, base, p, shoot);
  d.rho = m.F(base, at_p.v);
  shoot.initial_guess = at_p.v;
  d.grad = gradient([&](const Vec& x) { return distance(m, base, x, shoot); }, p, opts.gradient);
  return d;
}

Mat direction_matrix(const DistanceChart& c) {
  Mat V(static_cast<Eigen::Index>(c.dim()), static_cast<Eigen::Index>(c.dim()));
  for (std::size_t j = 0; j < c.dim(); ++j) V.col(static_cast<Eigen::Index>(j)) = c.directions[j];
  return V;
}

std::optional<Vec> try_evaluate(const DistanceChart& c, const Vec& a, const ShootingOptions& o) {
  try {
    return evaluate_chart(c, a, o);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

Vec distance_gradient(const FinslerMetric& m, const Vec& base, const Vec& p,
                      const ChartOptions& opts) {
  return base_data(m, base, p, opts).grad;
}

std::vector<Vec> sphere_tangent_basis(const FinslerMetric& m, const Vec& p,
                                      const std::vector<Vec>& base_points,
                                      const ChartOptions& opts) {
  m.patch().require(p, m.boundary_margin());
  std::vector<Vec> rows;
  for (std::size_t i = 0; i < base_points.size(); ++i) {
    Vec g;
    try {
      g = distance_gradient(m, base_points[i], p, opts);
    } catch (const Error& e) {
      throw DegenerateInputError("distance to base point " + std::to_string(i + 1) +
                                 " is not differentiable at p: " + e.what());
    }
    if (g.norm() < 1e-8)
      throw DegenerateInputError("gradient of the distance to base point " + std::to_string(i + 1) +
                                 " vanishes at p");
    rows.push_back(std::move(g));
  }
  return null_space_basis(rows, m.dim());
}

DistanceChart build_distance_chart(const MetricPtr& m, const Vec& p, double radius_budget,
                                   std::uint64_t seed, const ChartOptions& opts) {
  m->patch().require(p, m->boundary_margin());
  if (!(radius_budget > 0.0)) throw DegenerateInputError("radius budget must be positive");
  const std::size_t n = m->dim();

  DistanceChart c;
  c.metric = m;
  c.center = p;
  c.radius_budget = radius_budget;
  c.seed = seed;

  EmanatingOptions eo;
  eo.normal_radius_cap = radius_budget;
  eo.integration = opts.shooting.integration;

  std::vector<Vec> grads;
  for (std::size_t k = 0; k < n; ++k) {
    const std::vector<Vec> basis = null_space_basis(grads, n);
    if (basis.empty())
      throw ChartError("no direction left for base point " + std::to_string(k + 1));
    const Vec v = basis.front() / m->F(p, basis.front());

    double delta = 0.25 * radius_budget;
    std::optional<BaseData> data;
    EmanatingPoint ep;
    std::string last_error;
    for (std::size_t attempt = 0; attempt <= opts.delta_retries && !data; ++attempt) {
      try {
        ep = emanating_point(*m, p, v, delta, eo);
        data = base_data(*m, ep.q, p, opts);
        if (data->grad.norm() < 1e-8) throw DegenerateInputError("vanishing distance gradient");
      } catch (const Error& e) {
        data.reset();
        last_error = e.what();
        delta *= 0.5;
      }
    }
    if (!data)
      throw ChartError("base point " + std::to_string(k + 1) +
                       " failed after retries: " + last_error);

    c.base_points.push_back(ep.q);
    c.radii.push_back(data->rho);
    c.directions.push_back(v);
    c.emanating_velocities.push_back(ep.w);
    c.lambdas.push_back(ep.lambda);
    c.deltas.push_back(ep.delta);
    grads.push_back(data->grad);
  }

  const auto N = static_cast<Eigen::Index>(n);
  c.jacobian.resize(N, N);
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < N; ++j)
      c.jacobian(i, j) =
          grads[static_cast<std::size_t>(i)].dot(c.directions[static_cast<std::size_t>(j)]);

  const ChartCertificate cert = certify(c);
  if (!(cert.min_diagonal > 0.0) || !std::isfinite(cert.condition)) {
    std::ostringstream os;
    os << "chart Jacobian is not invertible with positive diagonal (min diagonal "
       << cert.min_diagonal << ")";
    throw ChartError(os.str());
  }
  if (cert.off_triangle > 1e-6) {
    std::ostringstream os;
    os << "chart Jacobian is not lower triangular (relative off-triangle mass " << cert.off_triangle
       << ")";
    throw ChartError(os.str());
  }

  // Round-trip certification on shrinking balls, kept well away from the
  // base points where the distance functions stop being smooth.
  double base_gap = std::numeric_limits<double>::infinity();
  for (const auto& q : c.base_points) base_gap = std::min(base_gap, (q - p).norm());
  for (int level = 1; level <= opts.certification_levels; ++level) {
    const double r = std::ldexp(radius_budget, -level);
    if (r >= 0.5 * base_gap) continue;
    Rng rng(seed);
    bool ok = true;
    for (std::size_t k = 0; k < opts.certification_probes && ok; ++k) {
      const Vec a = rng.in_ball(p, r);
      if (!m->patch().contains(a, m->boundary_margin())) {
        ok = false;
        break;
      }
      c.certified_radius = r;
      try {
        const ChartPoint back = invert_chart(c, evaluate_chart(c, a, opts.shooting), 1e-11, opts);
        ok = (back.x - a).norm() < opts.round_trip_tol;
      } catch (const Error&) {
        ok = false;
      }
    }
    if (ok) {
      c.certified_radius = r;
      return c;
    }
  }
  throw ChartError("round trip fails on every probed neighbourhood");
}

Vec evaluate_chart(const DistanceChart& chart, const Vec& a, const ShootingOptions& opts) {
  const auto n = static_cast<Eigen::Index>(chart.dim());
  Vec out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    try {
      out[i] = distance(*chart.metric, chart.base_points[static_cast<std::size_t>(i)], a, opts);
    } catch (const Error& e) {
      throw ChartError("distance to base point " + std::to_string(i + 1) + " failed: " + e.what());
    }
  }
  return out;
}

ChartPoint invert_chart(const DistanceChart& chart, const Vec& target, double tol,
                        const ChartOptions& opts) {
  const FinslerMetric& m = *chart.metric;
  // Dθ in chart coordinates: J = Dθ · V.
  Mat D = chart.jacobian * direction_matrix(chart).inverse();

  ChartPoint cp;
  cp.x = chart.center;
  Vec r = evaluate_chart(chart, cp.x, opts.shooting) - target;
  double norm = r.norm();
  constexpr int kMaxIterations = 60;
  for (; cp.iterations < kMaxIterations && norm >= tol; ++cp.iterations) {
    const Vec step = D.partialPivLu().solve(-r);
    double alpha = 1.0;
    bool accepted = false;
    double new_norm = norm;
    for (int b = 0; b < 30; ++b, alpha *= 0.5) {
      const Vec trial = cp.x + alpha * step;
      if (!m.patch().contains(trial, m.boundary_margin())) continue;
      const auto th = try_evaluate(chart, trial, opts.shooting);
      if (th && (*th - target).norm() < (1.0 - 1e-4 * alpha) * norm) {
        cp.x = trial;
        r = *th - target;
        new_norm = r.norm();
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw ChartError("chart inversion stalled: target outside the certified neighbourhood");
    if (new_norm > 0.25 * norm) {
      try {
        D = jacobian([&](const Vec& x) { return evaluate_chart(chart, x, opts.shooting); }, cp.x,
                     DiffConfig{1e-6, 1});
      } catch (const Error& e) {
        throw ChartError(std::string("chart derivative unavailable: ") + e.what());
      }
    }
    norm = new_norm;
  }
  if (!(norm < tol)) throw ChartError("chart inversion did not converge");
  cp.residual = norm;
  return cp;
}

ChartCertificate certify(const DistanceChart& chart) {
  const Mat& J = chart.jacobian;
  ChartCertificate cert;
  const double scale = J.norm();
  cert.min_diagonal = J.diagonal().minCoeff();
  for (Eigen::Index i = 0; i < J.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < J.cols(); ++j)
      cert.off_triangle = std::max(cert.off_triangle, std::abs(J(i, j)) / scale);
    const auto k = static_cast<std::size_t>(i);
    const double expected =
        chart.metric->F(chart.base_points[k], chart.emanating_velocities[k]) / chart.lambdas[k];
    cert.diagonal_mismatch =
        std::max(cert.diagonal_mismatch, std::abs(J(i, i) - expected) / expected);
  }
  const Eigen::JacobiSVD<Mat> svd(J);
  const auto& s = svd.singularValues();
  cert.condition =
      s[s.size() - 1] > 0.0 ? s[0] / s[s.size() - 1] : std::numeric_limits<double>::infinity();
  return cert;
}

nlohmann::json to_json(const DistanceChart& c) {
  auto vecs = [](const std::vector<Vec>& vs) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& v : vs) a.push_back(to_std(v));
    return a;
  };
  return {{"metric", c.metric->descriptor()},
          {"center", to_std(c.center)},
          {"base_points", vecs(c.base_points)},
          {"radii", c.radii},
          {"directions", vecs(c.directions)},
          {"emanating_velocities", vecs(c.emanating_velocities)},
          {"lambdas", c.lambdas},
          {"deltas", c.deltas},
          {"jacobian", to_std(c.jacobian)},
          {"jacobian_convention", "J[i][j] = d r_{p_i} (v_j)"},
          {"radius_budget", c.radius_budget},
          {"certified_radius", c.certified_radius},
          {"seed", c.seed}};
}

DistanceChart chart_from_json(const nlohmann::json& j) {
  try {
    auto vecs = [](const nlohmann::json& a) {
      std::vector<Vec> out;
      for (const auto& v : a) out.push_back(vec_param(v));
      return out;
    };
    DistanceChart c;
    c.metric = metric_from_json(j.at("metric"));
    c.center = vec_param(j.at("center"));
    c.base_points = vecs(j.at("base_points"));
    c.radii = j.at("radii").get<std::vector<double>>();
    c.directions = vecs(j.at("directions"));
    c.emanating_velocities = vecs(j.at("emanating_velocities"));
    c.lambdas = j.at("lambdas").get<std::vector<double>>();
    c.deltas = j.at("deltas").get<std::vector<double>>();
    c.jacobian = mat_param(j.at("jacobian"));
    c.radius_budget = j.at("radius_budget").get<double>();
    c.certified_radius = j.at("certified_radius").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    const std::size_t n = c.metric->dim();
    if (c.base_points.size() != n || c.directions.size() != n || c.radii.size() != n ||
        c.lambdas.size() != n || c.jacobian.rows() != static_cast<Eigen::Index>(n))
      throw ConfigError("chart arrays do not match the metric dimension");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed chart: ") + e.what());
  }
}

}  // namespace finsler
