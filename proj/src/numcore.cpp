#include "finsler/numcore.hpp"

#include <algorithm>
#include <numbers>
#include <sstream>

namespace finsler {

// ─── PatchSpec ───────────────────────────────────────────────────────────────

PatchSpec::PatchSpec(std::size_t dim, std::vector<Interval> bounds, Constraint constraint)
    : dim_(dim), bounds_(std::move(bounds)), constraint_(std::move(constraint)) {
  if (dim_ == 0) throw DegenerateInputError("patch dimension must be >= 1");
  if (bounds_.empty()) bounds_.resize(dim_);
  if (bounds_.size() != dim_)
    throw DegenerateInputError("patch bounds must have one interval per axis");
  for (const auto& b : bounds_)
    if (!(b.lo < b.hi)) throw DegenerateInputError("empty patch interval");
}

double PatchSpec::slack(const Vec& x) const {
  double s = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dim_; ++i) {
    s = std::min(s, x[i] - bounds_[i].lo);
    s = std::min(s, bounds_[i].hi - x[i]);
  }
  if (constraint_.slack) s = std::min(s, constraint_.slack(x));
  return s;
}

bool PatchSpec::contains(const Vec& x, double margin) const {
  if (static_cast<std::size_t>(x.size()) != dim_) return false;
  if (!x.allFinite()) return false;
  return slack(x) > margin;
}

void PatchSpec::require(const Vec& x, double margin) const {
  if (static_cast<std::size_t>(x.size()) != dim_) {
    std::ostringstream os;
    os << "point has " << x.size() << " coordinates, patch has dimension " << dim_;
    throw DomainError(os.str());
  }
  if (!contains(x, margin)) {
    std::ostringstream os;
    os << "point (" << x.transpose() << ") is outside " << describe();
    if (margin > 0) os << " (boundary margin " << margin << ")";
    throw DomainError(os.str());
  }
}

std::string PatchSpec::describe() const {
  std::ostringstream os;
  os << "patch R^" << dim_;
  bool bounded = false;
  for (const auto& b : bounds_) bounded = bounded || std::isfinite(b.lo) || std::isfinite(b.hi);
  if (bounded) {
    os << " with bounds";
    for (const auto& b : bounds_) os << " (" << b.lo << ", " << b.hi << ")";
  }
  if (!constraint_.description.empty()) os << " where " << constraint_.description;
  return os.str();
}

// ─── Finite differences ──────────────────────────────────────────────────────

void DiffConfig::validate() const {
  if (!(fd_step > 0.0 && fd_step <= 1e-2))
    throw DegenerateInputError("fd_step must lie in (0, 1e-2]");
  if (richardson_levels < 1) throw DegenerateInputError("richardson_levels must be >= 1");
}

namespace {

void check_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw NumericError(std::string(what) + " is not finite");
}

void check_finite(const Vec& x, const char* what) {
  if (!x.allFinite()) throw NumericError(std::string(what) + " is not finite");
}

// Richardson tableau over h, h/2, h/4, ... for estimates whose error expands
// in even powers of h.
template <class T, class Estimate>
T richardson_even(const Estimate& estimate, double h, int levels) {
  std::vector<T> prev, cur;
  for (int k = 0; k < levels; ++k) {
    cur.assign(static_cast<std::size_t>(k) + 1, T{});
    cur[0] = estimate(h / std::ldexp(1.0, k));
    double factor = 1.0;
    for (int j = 1; j <= k; ++j) {
      factor *= 4.0;
      cur[j] = cur[j - 1] + (cur[j - 1] - prev[j - 1]) / (factor - 1.0);
    }
    prev.swap(cur);
  }
  return prev.back();
}

double step_for(const Vec& p, const Vec& v, const DiffConfig& cfg) {
  cfg.validate();
  const double vn = v.norm();
  if (!(vn > 0.0)) throw DegenerateInputError("direction must be nonzero");
  const double scale = 1.0 + (p.size() ? p.cwiseAbs().maxCoeff() : 0.0);
  return cfg.fd_step * scale / vn;
}

}  // namespace

double directional_derivative(const ScalarField& f, const Vec& p, const Vec& v,
                              const DiffConfig& cfg) {
  const double h = step_for(p, v, cfg);
  auto central = [&](double step) {
    const double fp = f(p + step * v);
    const double fm = f(p - step * v);
    check_finite(fp, "field value");
    check_finite(fm, "field value");
    return (fp - fm) / (2.0 * step);
  };
  const double d = richardson_even<double>(central, h, cfg.richardson_levels);
  check_finite(d, "derivative");
  return d;
}

Vec gradient(const ScalarField& f, const Vec& p, const DiffConfig& cfg) {
  Vec g(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i)
    g[i] = directional_derivative(f, p, Vec::Unit(p.size(), i), cfg);
  return g;
}

Vec directional_derivative(const VectorMap& map, const Vec& p, const Vec& v,
                           const DiffConfig& cfg) {
  const double h = step_for(p, v, cfg);
  auto central = [&](double step) -> Vec {
    Vec fp = map(p + step * v);
    Vec fm = map(p - step * v);
    check_finite(fp, "map value");
    check_finite(fm, "map value");
    return (fp - fm) / (2.0 * step);
  };
  Vec d = richardson_even<Vec>(central, h, cfg.richardson_levels);
  check_finite(d, "derivative");
  return d;
}

Mat jacobian(const VectorMap& map, const Vec& p, const DiffConfig& cfg) {
  Mat j;
  for (Eigen::Index c = 0; c < p.size(); ++c) {
    Vec col = directional_derivative(map, p, Vec::Unit(p.size(), c), cfg);
    if (c == 0) j.resize(col.size(), p.size());
    j.col(c) = col;
  }
  return j;
}

Vec second_directional_derivative(const VectorMap& map, const Vec& p, const Vec& v,
                                  const DiffConfig& cfg) {
  const double h = step_for(p, v, cfg);
  const Vec f0 = map(p);
  check_finite(f0, "map value");
  auto central = [&](double step) -> Vec {
    Vec fp = map(p + step * v);
    Vec fm = map(p - step * v);
    check_finite(fp, "map value");
    check_finite(fm, "map value");
    return (fp - 2.0 * f0 + fm) / (step * step);
  };
  Vec d = richardson_even<Vec>(central, h, cfg.richardson_levels);
  check_finite(d, "second derivative");
  return d;
}

// ─── Linear algebra ──────────────────────────────────────────────────────────

namespace {

// Two passes of modified Gram-Schmidt against `basis`.
Vec project_out(Vec x, const std::vector<Vec>& basis) {
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& q : basis) x -= q.dot(x) * q;
  return x;
}

}  // namespace

std::vector<Vec> null_space_basis(const std::vector<Vec>& rows, std::size_t dim, double tol) {
  if (dim == 0) throw DegenerateInputError("dimension must be >= 1");
  std::vector<Vec> row_basis;
  for (const auto& r : rows) {
    if (static_cast<std::size_t>(r.size()) != dim)
      throw DegenerateInputError("row length does not match dimension");
    const double n = r.norm();
    if (!(n > 0.0)) throw DegenerateInputError("all-zero row in null_space_basis");
    Vec q = project_out(r / n, row_basis);
    if (q.norm() > tol) row_basis.push_back(q.normalized());
  }

  std::vector<Vec> kernel;
  const std::size_t want = dim - std::min(dim, row_basis.size());
  std::vector<bool> used(dim, false);
  while (kernel.size() < want) {
    std::vector<Vec> span = row_basis;
    span.insert(span.end(), kernel.begin(), kernel.end());
    std::size_t best = dim;
    double best_norm = -1.0;
    Vec best_vec;
    for (std::size_t i = 0; i < dim; ++i) {
      if (used[i]) continue;
      Vec r = project_out(Vec::Unit(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(i)),
                          span);
      const double n = r.norm();
      if (n > best_norm) {
        best_norm = n;
        best = i;
        best_vec = std::move(r);
      }
    }
    if (best == dim || best_norm <= tol) break;
    used[best] = true;
    kernel.push_back(best_vec / best_norm);
  }
  return kernel;
}

double spd_condition_number(const Mat& sym) {
  Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

// ─── Rng ─────────────────────────────────────────────────────────────────────

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

Vec Rng::unit_vector(std::size_t dim) {
  Vec v(static_cast<Eigen::Index>(dim));
  double n = 0.0;
  while (!(n > 1e-12)) {
    for (auto& c : v) c = normal();
    n = v.norm();
  }
  return v / n;
}

Vec Rng::in_ball(const Vec& center, double radius) {
  const auto dim = static_cast<double>(center.size());
  Vec u = unit_vector(static_cast<std::size_t>(center.size()));
  return center + radius * std::pow(uniform(), 1.0 / dim) * u;
}

}  // namespace finsler
