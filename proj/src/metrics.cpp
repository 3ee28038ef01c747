#include "finsler/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <sstream>

#include "finsler/json_io.hpp"

namespace finsler {

namespace {

constexpr std::array<std::pair<Family, std::string_view>, 6> kFamilyNames{{
    {Family::euclidean, "euclidean"},
    {Family::minkowski_norm, "minkowski-norm"},
    {Family::riemannian, "riemannian"},
    {Family::randers, "randers"},
    {Family::hyperbolic_half_plane, "hyperbolic-half-plane"},
    {Family::round_sphere_patch, "round-sphere-patch"},
}};

}  // namespace

std::string_view family_name(Family f) {
  for (const auto& [fam, name] : kFamilyNames)
    if (fam == f) return name;
  return "unknown";
}

Family family_from_name(std::string_view name) {
  for (const auto& [fam, n] : kFamilyNames)
    if (n == name) return fam;
  throw ConfigError("unknown metric family '" + std::string(name) + "'");
}

const std::vector<Family>& all_families() {
  static const std::vector<Family> families = [] {
    std::vector<Family> out;
    for (const auto& entry : kFamilyNames) out.push_back(entry.first);
    return out;
  }();
  return families;
}

// ─── FinslerMetric ───────────────────────────────────────────────────────────

FinslerMetric::FinslerMetric(Family family, PatchSpec patch, bool reversible, SampleRegion region)
    : family_(family),
      patch_(std::move(patch)),
      reversible_(reversible),
      region_(std::move(region)),
      margin_(10.0 * default_fd_step()) {}

void FinslerMetric::check_args(const Vec& x, const Vec& y) const {
  patch_.require(x, margin_);
  if (static_cast<std::size_t>(y.size()) != dim())
    throw DomainError("tangent vector has the wrong dimension");
  if (!y.allFinite()) throw NumericError("tangent vector is not finite");
}

double FinslerMetric::F(const Vec& x, const Vec& y) const {
  check_args(x, y);
  if (y.isZero(0.0)) return 0.0;
  return F_impl(x, y);
}

double FinslerMetric::energy(const Vec& x, const Vec& y) const {
  const double f = F(x, y);
  return 0.5 * f * f;
}

Mat FinslerMetric::fundamental_tensor(const Vec& x, const Vec& y) const {
  return energy_jet(x, y).E_yy;
}

EnergyJet FinslerMetric::energy_jet(const Vec& x, const Vec& y) const {
  check_args(x, y);
  if (y.isZero(0.0))
    throw SingularityError("energy is not twice differentiable at the zero vector");
  return jet_impl(x, y);
}

EnergyJet energy_jet_fd(const FinslerMetric& m, const Vec& x, const Vec& y, const DiffConfig& cfg) {
  auto E_of_y = [&](const Vec& xx) { return [&m, xx](const Vec& yy) { return m.energy(xx, yy); }; };
  auto E_y_at = [&](const Vec& xx, const Vec& yy) -> Vec { return gradient(E_of_y(xx), yy, cfg); };
  EnergyJet jet;
  jet.E = m.energy(x, y);
  jet.E_y = E_y_at(x, y);
  jet.E_x = gradient([&](const Vec& xx) { return m.energy(xx, y); }, x, cfg);
  jet.E_yy = jacobian([&](const Vec& yy) { return E_y_at(x, yy); }, y, cfg);
  jet.E_yy = 0.5 * (jet.E_yy + jet.E_yy.transpose()).eval();
  // jacobian gives (l, k) = ∂(E_y)_l/∂x^k; E_xy is indexed (k, l).
  jet.E_xy = jacobian([&](const Vec& xx) { return E_y_at(xx, y); }, x, cfg).transpose();
  return jet;
}

// ─── Conformal families: F = exp(σ(x)) · sqrt(yᵀ A y) ───────────────────────

namespace {

class ConformalMetric : public FinslerMetric {
 protected:
  ConformalMetric(Family family, PatchSpec patch, SampleRegion region, Mat A)
      : FinslerMetric(family, std::move(patch), true, std::move(region)), A_(std::move(A)) {}

  virtual double sigma(const Vec& x) const = 0;
  virtual Vec sigma_gradient(const Vec& x) const = 0;

  double F_impl(const Vec& x, const Vec& y) const override {
    return std::exp(sigma(x)) * std::sqrt(y.dot(A_ * y));
  }

  EnergyJet jet_impl(const Vec& x, const Vec& y) const override {
    const double scale = std::exp(2.0 * sigma(x));
    const Vec Ay = A_ * y;
    const Vec ds = sigma_gradient(x);
    EnergyJet jet;
    jet.E = 0.5 * scale * y.dot(Ay);
    jet.E_y = scale * Ay;
    jet.E_yy = scale * A_;
    jet.E_x = 2.0 * jet.E * ds;
    jet.E_xy = 2.0 * ds * jet.E_y.transpose();
    return jet;
  }

  Mat A_;
};

class EuclideanMetric final : public ConformalMetric {
 public:
  explicit EuclideanMetric(std::size_t dim)
      : ConformalMetric(
            Family::euclidean, PatchSpec(dim), {Vec::Zero(static_cast<Eigen::Index>(dim)), 1.0},
            Mat::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))) {}

  nlohmann::json descriptor() const override { return {{"family", "euclidean"}, {"dim", dim()}}; }

 protected:
  double sigma(const Vec&) const override { return 0.0; }
  Vec sigma_gradient(const Vec& x) const override { return Vec::Zero(x.size()); }
};

class RiemannianMetric final : public ConformalMetric {
 public:
  RiemannianMetric(Mat A, Vec s)
      : ConformalMetric(Family::riemannian, PatchSpec(static_cast<std::size_t>(A.rows())),
                        {Vec::Zero(A.rows()), 0.5}, A),
        s_(std::move(s)) {}

  nlohmann::json descriptor() const override {
    return {{"family", "riemannian"}, {"matrix", to_std(A_)}, {"log_scale_gradient", to_std(s_)}};
  }

 protected:
  double sigma(const Vec& x) const override { return s_.dot(x); }
  Vec sigma_gradient(const Vec&) const override { return s_; }

 private:
  Vec s_;
};

PatchSpec half_space(std::size_t dim) {
  const auto last = static_cast<Eigen::Index>(dim) - 1;
  return PatchSpec(
      dim, {},
      Constraint{[last](const Vec& x) { return x[last]; }, "x_" + std::to_string(dim) + " > 0"});
}

class HyperbolicMetric final : public ConformalMetric {
 public:
  HyperbolicMetric(std::size_t dim, double scale)
      : ConformalMetric(
            Family::hyperbolic_half_plane, half_space(dim),
            {Vec::Unit(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim) - 1), 0.5},
            Mat::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))),
        scale_(scale) {}

  nlohmann::json descriptor() const override {
    return {{"family", "hyperbolic-half-plane"}, {"dim", dim()}, {"scale", scale_}};
  }

 protected:
  double sigma(const Vec& x) const override { return std::log(scale_) - std::log(x[x.size() - 1]); }
  Vec sigma_gradient(const Vec& x) const override {
    Vec g = Vec::Zero(x.size());
    g[x.size() - 1] = -1.0 / x[x.size() - 1];
    return g;
  }

 private:
  double scale_;
};

PatchSpec disk(std::size_t dim, double radius) {
  std::ostringstream os;
  os << "|x| < " << radius;
  return PatchSpec(dim, {},
                   Constraint{[radius](const Vec& x) { return radius - x.norm(); }, os.str()});
}

class SphereMetric final : public ConformalMetric {
 public:
  SphereMetric(std::size_t dim, double radius, double bound)
      : ConformalMetric(
            Family::round_sphere_patch, disk(dim, bound),
            {Vec::Zero(static_cast<Eigen::Index>(dim)), std::min(1.0, 0.5 * bound)},
            Mat::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))),
        radius_(radius),
        bound_(bound) {}

  nlohmann::json descriptor() const override {
    return {{"family", "round-sphere-patch"},
            {"dim", dim()},
            {"radius", radius_},
            {"chart_bound", bound_}};
  }

 protected:
  double sigma(const Vec& x) const override {
    return std::log(2.0 * radius_) - std::log1p(x.squaredNorm());
  }
  Vec sigma_gradient(const Vec& x) const override { return -2.0 * x / (1.0 + x.squaredNorm()); }

 private:
  double radius_;
  double bound_;
};

// ─── Minkowski norm: F = P^{1/4}, P = |y|⁴ + ε Σ y_i⁴ ────────────────────────

class MinkowskiNormMetric final : public FinslerMetric {
 public:
  MinkowskiNormMetric(std::size_t dim, double quartic)
      : FinslerMetric(Family::minkowski_norm, PatchSpec(dim), true,
                      {Vec::Zero(static_cast<Eigen::Index>(dim)), 1.0}),
        eps_(quartic) {}

  nlohmann::json descriptor() const override {
    return {{"family", "minkowski-norm"}, {"dim", dim()}, {"quartic", eps_}};
  }

 protected:
  double P(const Vec& y) const {
    const double q = y.squaredNorm();
    return q * q + eps_ * y.array().pow(4).sum();
  }

  double F_impl(const Vec&, const Vec& y) const override { return std::pow(P(y), 0.25); }

  EnergyJet jet_impl(const Vec& x, const Vec& y) const override {
    const auto n = y.size();
    const double q = y.squaredNorm();
    const double p = P(y);
    const double sp = std::sqrt(p);
    const Vec y3 = y.array().cube().matrix();
    const Vec dP = 4.0 * q * y + 4.0 * eps_ * y3;
    Mat d2P = 4.0 * q * Mat::Identity(n, n) + 8.0 * y * y.transpose();
    d2P.diagonal() += 12.0 * eps_ * y.array().square().matrix();
    EnergyJet jet;
    jet.E = 0.5 * sp;
    jet.E_y = 0.25 * dP / sp;
    jet.E_yy = 0.25 * d2P / sp - 0.125 * dP * dP.transpose() / (p * sp);
    jet.E_x = Vec::Zero(x.size());
    jet.E_xy = Mat::Zero(n, n);
    return jet;
  }

 private:
  double eps_;
};

// ─── Randers: F = |y| + ⟨b0 + B x, y⟩ ───────────────────────────────────────

class RandersMetric final : public FinslerMetric {
 public:
  RandersMetric(Vec b0, Mat B, double patch_radius)
      : FinslerMetric(Family::randers,
                      patch_radius > 0.0 ? disk(static_cast<std::size_t>(b0.size()), patch_radius)
                                         : PatchSpec(static_cast<std::size_t>(b0.size())),
                      b0.isZero(0.0) && B.isZero(0.0),
                      {Vec::Zero(b0.size()), patch_radius > 0.0 ? 0.5 * patch_radius : 1.0}),
        b0_(std::move(b0)),
        B_(std::move(B)),
        patch_radius_(patch_radius) {}

  nlohmann::json descriptor() const override {
    nlohmann::json j{{"family", "randers"}, {"drift", to_std(b0_)}};
    if (!B_.isZero(0.0)) j["drift_gradient"] = to_std(B_);
    if (patch_radius_ > 0.0) j["patch_radius"] = patch_radius_;
    return j;
  }

 protected:
  Vec drift(const Vec& x) const { return b0_ + B_ * x; }

  double F_impl(const Vec& x, const Vec& y) const override { return y.norm() + drift(x).dot(y); }

  EnergyJet jet_impl(const Vec& x, const Vec& y) const override {
    const auto n = y.size();
    const double alpha = y.norm();
    const Vec u = y / alpha;
    const Vec b = drift(x);
    const double f = alpha + b.dot(y);
    const Vec ub = u + b;
    const Vec c = B_.transpose() * y;  // ∂⟨b(x), y⟩/∂x
    EnergyJet jet;
    jet.E = 0.5 * f * f;
    jet.E_y = f * ub;
    jet.E_yy = ub * ub.transpose() + (f / alpha) * (Mat::Identity(n, n) - u * u.transpose());
    jet.E_x = f * c;
    jet.E_xy = c * ub.transpose() + f * B_.transpose();
    return jet;
  }

 private:
  Vec b0_;
  Mat B_;
  double patch_radius_;
};

}  // namespace

MetricPtr make_euclidean(std::size_t dim) { return std::make_shared<EuclideanMetric>(dim); }

MetricPtr make_minkowski_norm(std::size_t dim, double quartic) {
  if (!(quartic >= 0.0)) throw DegenerateInputError("quartic weight must be >= 0");
  return std::make_shared<MinkowskiNormMetric>(dim, quartic);
}

MetricPtr make_riemannian(const Mat& A, const Vec& log_scale_gradient) {
  if (A.rows() != A.cols() || A.rows() == 0)
    throw DegenerateInputError("riemannian matrix must be square");
  if (log_scale_gradient.size() != A.rows())
    throw DegenerateInputError("log_scale_gradient has the wrong dimension");
  if (!A.isApprox(A.transpose(), 1e-12))
    throw DegenerateInputError("riemannian matrix must be symmetric");
  return std::make_shared<RiemannianMetric>(A, log_scale_gradient);
}

MetricPtr make_randers(const Vec& drift, std::optional<Mat> drift_gradient, double patch_radius) {
  const auto n = drift.size();
  if (n == 0) throw DegenerateInputError("randers drift must be nonempty");
  Mat B = drift_gradient.value_or(Mat::Zero(n, n));
  if (B.rows() != n || B.cols() != n)
    throw DegenerateInputError("drift_gradient has the wrong shape");
  return std::make_shared<RandersMetric>(drift, B, patch_radius);
}

MetricPtr make_hyperbolic(std::size_t dim, double scale) {
  if (!(scale > 0.0)) throw DegenerateInputError("hyperbolic scale must be > 0");
  return std::make_shared<HyperbolicMetric>(dim, scale);
}

MetricPtr make_round_sphere(std::size_t dim, double radius, double chart_bound) {
  if (!(radius > 0.0) || !(chart_bound > 0.0))
    throw DegenerateInputError("sphere radius and chart bound must be > 0");
  return std::make_shared<SphereMetric>(dim, radius, chart_bound);
}

// ─── Descriptor parsing ──────────────────────────────────────────────────────

namespace {

void check_keys(const nlohmann::json& j, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("unknown metric parameter '" + key + "'");
  }
}

}  // namespace

MetricPtr metric_from_json(const nlohmann::json& d) {
  if (!d.is_object() || !d.contains("family"))
    throw ConfigError("metric descriptor needs a 'family' field");
  try {
    const Family fam = family_from_name(d.at("family").get<std::string>());
    const auto dim = d.value("dim", std::size_t{2});
    switch (fam) {
      case Family::euclidean:
        check_keys(d, {"family", "dim"});
        return make_euclidean(dim);
      case Family::minkowski_norm:
        check_keys(d, {"family", "dim", "quartic"});
        return make_minkowski_norm(dim, d.value("quartic", 0.3));
      case Family::riemannian: {
        check_keys(d, {"family", "matrix", "log_scale_gradient"});
        Mat A = d.contains("matrix") ? mat_param(d["matrix"])
                                     : (Mat(2, 2) << 2.0, 0.5, 0.5, 1.0).finished();
        Vec s = d.contains("log_scale_gradient") ? vec_param(d["log_scale_gradient"])
                                                 : (Vec(2) << 0.3, -0.2).finished();
        return make_riemannian(A, s);
      }
      case Family::randers: {
        check_keys(d, {"family", "drift", "drift_gradient", "patch_radius"});
        Vec b = d.contains("drift") ? vec_param(d["drift"]) : (Vec(2) << 0.5, 0.0).finished();
        std::optional<Mat> B;
        if (d.contains("drift_gradient")) B = mat_param(d["drift_gradient"]);
        return make_randers(b, B, d.value("patch_radius", 0.0));
      }
      case Family::hyperbolic_half_plane:
        check_keys(d, {"family", "dim", "scale"});
        return make_hyperbolic(dim, d.value("scale", 1.0));
      case Family::round_sphere_patch:
        check_keys(d, {"family", "dim", "radius", "chart_bound"});
        return make_round_sphere(dim, d.value("radius", 1.0), d.value("chart_bound", 10.0));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad metric descriptor: ") + e.what());
  } catch (const DegenerateInputError& e) {
    throw ConfigError(std::string("bad metric descriptor: ") + e.what());
  }
  throw ConfigError("unhandled metric family");
}

// ─── Validation ──────────────────────────────────────────────────────────────

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const AxiomCheck& ValidationReport::check(std::string_view axiom) const {
  for (const auto& c : checks)
    if (c.axiom == axiom) return c;
  throw std::out_of_range("no check named " + std::string(axiom));
}

ValidationReport validate_finsler(const FinslerMetric& m, std::size_t n_samples,
                                  std::uint64_t seed) {
  if (n_samples == 0) throw DegenerateInputError("n_samples must be >= 1");
  Rng rng(seed);
  const auto n = m.dim();
  const auto& region = m.reference_region();

  AxiomCheck positivity{"positivity"};
  AxiomCheck homogeneity{"homogeneity"};
  AxiomCheck ellipticity{"ellipticity"};
  AxiomCheck reversibility{"reversibility"};

  ValidationReport rep;
  rep.seed = seed;
  rep.sample_count = n_samples;
  rep.reversible_declared = m.declared_reversible();

  double worst_asym = 0.0;
  bool have_witness = false;
  auto probe_reversal = [&](const Vec& x, const Vec& y) {
    const double fp = m.F(x, y);
    const double fm = m.F(x, -y);
    const double asym = std::abs(fp - fm) / std::max(std::abs(fp), 1e-300);
    worst_asym = std::max(worst_asym, asym);
    if (asym > 1e-12 && !have_witness) {
      have_witness = true;
      rep.witness_a = x;
      rep.witness_b = y;
      std::ostringstream os;
      os << "F(y)=" << fp << " vs F(-y)=" << fm << " at y=(" << y.transpose() << ")";
      reversibility.witness = os.str();
    }
  };
  for (std::size_t i = 0; i < n; ++i)
    probe_reversal(region.center,
                   Vec::Unit(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)));

  for (std::size_t s = 0; s < n_samples; ++s) {
    Vec x = rng.in_ball(region.center, region.radius);
    if (!m.patch().contains(x, m.boundary_margin())) x = region.center;
    const double radius = std::pow(10.0, rng.uniform(-2.0, 2.0));
    const Vec y = radius * rng.unit_vector(n);

    const double f = m.F(x, y);
    if (!(f > 0.0)) {
      positivity.passed = false;
      const double viol = -f / radius;
      if (viol >= positivity.worst_residual) {
        positivity.worst_residual = std::max(viol, 0.0);
        std::ostringstream os;
        os << "F=" << f << " at y=(" << y.transpose() << ")";
        positivity.witness = os.str();
      }
    }

    for (double lambda : {0.5, 2.0, 10.0}) {
      const double r =
          std::abs(m.F(x, lambda * y) - lambda * f) / std::max(std::abs(lambda * f), 1e-300);
      homogeneity.worst_residual = std::max(homogeneity.worst_residual, r);
    }

    Eigen::SelfAdjointEigenSolver<Mat> es(m.fundamental_tensor(x, y), Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
    if (!(lo > 1e-12 * hi)) {
      const double viol = hi > 0 ? -lo / hi : 1.0;
      if (ellipticity.passed || viol > ellipticity.worst_residual) {
        std::ostringstream os;
        os << "min eigenvalue " << lo << " at x=(" << x.transpose() << "), y=(" << y.transpose()
           << ")";
        ellipticity.witness = os.str();
      }
      ellipticity.passed = false;
      ellipticity.worst_residual = std::max(ellipticity.worst_residual, std::max(viol, 0.0));
    }

    probe_reversal(x, y);
  }

  homogeneity.passed = homogeneity.worst_residual < 1e-10;
  rep.reversible = worst_asym <= 1e-12;
  reversibility.worst_residual = worst_asym;
  reversibility.passed = rep.reversible == rep.reversible_declared;
  if (!reversibility.passed && reversibility.witness.empty())
    reversibility.witness = "declared reversible flag disagrees with samples";

  rep.checks = {positivity, homogeneity, ellipticity, reversibility};
  return rep;
}

nlohmann::json to_json(const ValidationReport& r) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"axiom", c.axiom},
                      {"passed", c.passed},
                      {"worst_residual", c.worst_residual},
                      {"witness", c.witness}});
  nlohmann::json j{{"checks", checks},
                   {"sample_count", r.sample_count},
                   {"seed", r.seed},
                   {"reversible", r.reversible},
                   {"reversible_declared", r.reversible_declared},
                   {"passed", r.passed()}};
  if (r.witness_a.size()) j["witness_a"] = to_std(r.witness_a);
  if (r.witness_b.size()) j["witness_b"] = to_std(r.witness_b);
  return j;
}

}  // namespace finsler
