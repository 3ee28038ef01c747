#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "finsler/errors.hpp"

namespace finsler {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

using ScalarField = std::function<double(const Vec&)>;
using VectorMap = std::function<Vec(const Vec&)>;

// ─── Coordinate patches ──────────────────────────────────────────────────────

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

/// Extra open condition on the patch, given as a slack function that is
/// positive inside and roughly measures the distance to the boundary
/// (x_n for the half-plane, 1 - |x| for the unit disk).
struct Constraint {
  std::function<double(const Vec&)> slack;
  std::string description;
};

class PatchSpec {
 public:
  explicit PatchSpec(std::size_t dim, std::vector<Interval> bounds = {},
                     Constraint constraint = {});

  std::size_t dim() const { return dim_; }
  const std::vector<Interval>& bounds() const { return bounds_; }
  const Constraint& constraint() const { return constraint_; }

  /// Smallest distance to the boundary (bounds and constraint slack).
  /// Infinite for an unbounded patch; negative outside.
  double slack(const Vec& x) const;

  bool contains(const Vec& x, double margin = 0.0) const;

  /// Throws DomainError when x has the wrong length, is not finite or lies
  /// within `margin` of the boundary.
  void require(const Vec& x, double margin = 0.0) const;

  std::string describe() const;

 private:
  std::size_t dim_;
  std::vector<Interval> bounds_;
  Constraint constraint_;
};

/// Euclidean ball (in chart coordinates) used when a routine needs to draw
/// sample points.
struct SampleRegion {
  Vec center;
  double radius = 1.0;
};

// ─── Tangent data ────────────────────────────────────────────────────────────

struct TangentVector {
  Vec base;
  Vec components;
};

// ─── Finite differences ──────────────────────────────────────────────────────

inline double default_fd_step() { return std::cbrt(std::numeric_limits<double>::epsilon()); }

struct DiffConfig {
  /// Relative central-difference step; the absolute step at p is
  /// fd_step * (1 + |p|_inf).
  double fd_step = default_fd_step();
  /// Number of step halvings fed to the Richardson tableau (1 = plain
  /// central difference, error O(h^2); L levels give O(h^{2L})).
  int richardson_levels = 1;

  void validate() const;
};

/// Configuration suited to differentiating functions that are themselves
/// finite-difference or ODE results (larger step, deeper extrapolation).
inline DiffConfig nested_diff_config() { return DiffConfig{1e-3, 3}; }

double directional_derivative(const ScalarField& f, const Vec& p, const Vec& v,
                              const DiffConfig& cfg = {});

Vec gradient(const ScalarField& f, const Vec& p, const DiffConfig& cfg = {});

/// Partials of a map by central differences; dim_out x dim_in.
Mat jacobian(const VectorMap& map, const Vec& p, const DiffConfig& cfg = {});

/// d/dt map(p + t v) at t = 0.
Vec directional_derivative(const VectorMap& map, const Vec& p, const Vec& v,
                           const DiffConfig& cfg = {});

/// d²/dt² map(p + t v) at t = 0.
Vec second_directional_derivative(const VectorMap& map, const Vec& p, const Vec& v,
                                  const DiffConfig& cfg = {});

// ─── Linear algebra ──────────────────────────────────────────────────────────

/// Orthonormal basis of the common kernel of `rows` in R^dim.
///
/// Rows are orthonormalised first by modified Gram-Schmidt in input order
/// (a row whose residual falls below tol * |row| counts as dependent). The
/// complement is then filled from the canonical basis e_1..e_dim, at each
/// step taking the candidate with the largest residual (ties to the lowest
/// index), so the output is a deterministic function of the input.
std::vector<Vec> null_space_basis(const std::vector<Vec>& rows, std::size_t dim,
                                  double tol = 1e-10);

/// Ratio of the largest to the smallest eigenvalue of a symmetric matrix;
/// infinite if the smallest is not positive.
double spd_condition_number(const Mat& sym);

// ─── Deterministic random numbers ────────────────────────────────────────────

/// Seeded generator with platform-independent transforms (the standard
/// distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  Vec unit_vector(std::size_t dim);
  /// Uniform point of the Euclidean ball, intersected with nothing.
  Vec in_ball(const Vec& center, double radius);
  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace finsler
