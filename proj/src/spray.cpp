#include "finsler/spray.hpp"

#include <sstream>

namespace finsler {

namespace {

// TM is handled in induced coordinates z = (x, y) ∈ R^{2n}.
Vec stack(const Vec& x, const Vec& y) {
  Vec z(x.size() + y.size());
  z << x, y;
  return z;
}

struct TangentBundleView {
  Eigen::Index n;
  Vec x(const Vec& z) const { return z.head(n); }
  Vec y(const Vec& z) const { return z.tail(n); }
  Vec slot(Eigen::Index i) const { return Vec::Unit(2 * n, i); }
};

}  // namespace

SprayField::SprayField(MetricPtr metric, Evaluator coefficients, std::string label)
    : metric_(std::move(metric)), G_(std::move(coefficients)), label_(std::move(label)) {
  if (!metric_) throw DegenerateInputError("spray needs a metric");
  if (!G_) throw DegenerateInputError("spray needs a coefficient evaluator");
}

SprayField SprayField::canonical(MetricPtr metric) {
  const FinslerMetric* m = metric.get();
  return SprayField(
      std::move(metric), [m](const Vec& x, const Vec& y) { return spray_coefficients(*m, x, y); },
      "canonical");
}

SprayField SprayField::canonical_fd(MetricPtr metric, DiffConfig cfg) {
  const FinslerMetric* m = metric.get();
  return SprayField(
      std::move(metric),
      [m, cfg](const Vec& x, const Vec& y) -> Vec {
        if (y.isZero(0.0)) return Vec::Zero(y.size());
        return solve_spray_system(energy_jet_fd(*m, x, y, cfg), y);
      },
      "canonical-fd");
}

Vec SprayField::operator()(const Vec& x, const Vec& y) const {
  if (y.isZero(0.0)) {
    metric_->patch().require(x, metric_->boundary_margin());
    return Vec::Zero(y.size());
  }
  Vec g = G_(x, y);
  if (!g.allFinite()) throw NumericError("spray coefficients are not finite");
  return g;
}

SprayField SprayField::perturbed(const Vec& offset) const {
  Evaluator base = G_;
  return SprayField(
      metric_, [base, offset](const Vec& x, const Vec& y) -> Vec { return base(x, y) + offset; },
      label_ + "+offset");
}

Vec solve_spray_system(const EnergyJet& jet, const Vec& y) {
  const Vec rhs = 0.5 * (jet.E_xy.transpose() * y - jet.E_x);
  Eigen::LLT<Mat> llt(jet.E_yy);
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-10)) {
    std::ostringstream os;
    os << "fundamental tensor is not positive definite or is ill-conditioned (rcond "
       << (llt.info() == Eigen::Success ? llt.rcond() : 0.0) << ")";
    throw SingularityError(os.str());
  }
  return llt.solve(rhs);
}

Vec spray_coefficients(const FinslerMetric& m, const Vec& x, const Vec& y) {
  if (y.isZero(0.0)) {
    m.patch().require(x, m.boundary_margin());
    return Vec::Zero(y.size());
  }
  return solve_spray_system(m.energy_jet(x, y), y);
}

double SprayResiduals::max_abs() const {
  return std::max(rapcsak.cwiseAbs().maxCoeff(), std::abs(sf));
}

namespace {

// Returns per-coordinate S(∂_{y^j} f) - ∂_{x^j} f and S f for a scalar
// function f on TM.
std::pair<Vec, double> spray_action(const SprayField& s, const ScalarField& f, const Vec& x,
                                    const Vec& y, const DiffConfig& cfg) {
  const TangentBundleView tb{x.size()};
  const Vec z = stack(x, y);
  const Vec S = stack(y, -2.0 * s(x, y));
  Vec res(tb.n);
  for (Eigen::Index j = 0; j < tb.n; ++j) {
    const Vec vert = tb.slot(tb.n + j);
    ScalarField vertical = [&](const Vec& zz) { return directional_derivative(f, zz, vert, cfg); };
    const double s_vert = directional_derivative(vertical, z, S, cfg);
    const double complete = directional_derivative(f, z, tb.slot(j), cfg);
    res[j] = s_vert - complete;
  }
  return {res, directional_derivative(f, z, S, cfg)};
}

}  // namespace

SprayResiduals canonical_spray_residuals(const SprayField& s, const Vec& x, const Vec& y,
                                         const DiffConfig& cfg) {
  const FinslerMetric& m = s.metric();
  if (y.isZero(0.0)) throw SingularityError("spray residuals need a nonzero vector");
  const auto n = x.size();
  ScalarField F = [&m, n](const Vec& z) { return m.F(z.head(n), z.tail(n)); };
  auto [rap, sf] = spray_action(s, F, x, y, cfg);
  return SprayResiduals{rap, sf, m.F(x, y)};
}

Vec energy_residuals(const SprayField& s, const Vec& x, const Vec& y, const DiffConfig& cfg) {
  const FinslerMetric& m = s.metric();
  if (y.isZero(0.0)) throw SingularityError("spray residuals need a nonzero vector");
  const auto n = x.size();
  ScalarField E = [&m, n](const Vec& z) { return m.energy(z.head(n), z.tail(n)); };
  return spray_action(s, E, x, y, cfg).first;
}

double lifted_rapcsak_residual(const SprayField& s, const VectorMap& X, const Vec& x, const Vec& y,
                               const DiffConfig& cfg) {
  const FinslerMetric& m = s.metric();
  if (y.isZero(0.0)) throw SingularityError("spray residuals need a nonzero vector");
  const auto n = x.size();
  const TangentBundleView tb{n};
  ScalarField F = [&m, n](const Vec& z) { return m.F(z.head(n), z.tail(n)); };

  // X^v F (z) = Xⁱ(x) ∂F/∂yⁱ (z)
  ScalarField vertical_lift = [&](const Vec& zz) {
    const Vec Xx = X(zz.head(n));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      acc += Xx[i] * directional_derivative(F, zz, tb.slot(n + i), cfg);
    return acc;
  };
  const Vec z = stack(x, y);
  const Vec S = stack(y, -2.0 * s(x, y));
  const double s_vert = directional_derivative(vertical_lift, z, S, cfg);

  // X^c = Xⁱ ∂/∂xⁱ + yᵏ ∂_k Xⁱ ∂/∂yⁱ
  const Mat DX = jacobian(X, x, cfg);
  const Vec complete = stack(X(x), DX * y);
  const double complete_F = directional_derivative(F, z, complete, cfg);
  return s_vert - complete_F;
}

double spray_homogeneity_defect(const SprayField& s, std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw DegenerateInputError("samples must be >= 1");
  const FinslerMetric& m = s.metric();
  const auto& region = m.reference_region();
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    Vec x = rng.in_ball(region.center, region.radius);
    if (!m.patch().contains(x, m.boundary_margin())) x = region.center;
    const Vec y = rng.unit_vector(m.dim());
    const Vec g = s(x, y);
    for (double lambda : {0.5, 2.0, 10.0}) {
      const Vec gl = s(x, lambda * y);
      worst = std::max(worst, (gl - lambda * lambda * g).norm() / (lambda * lambda));
    }
  }
  return worst;
}

}  // namespace finsler
