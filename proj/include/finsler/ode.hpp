#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "finsler/numcore.hpp"

namespace finsler::ode {

using Rhs = std::function<Vec(double t, const Vec& y)>;

struct Options {
  double rtol = 1e-9;
  double atol = 1e-9;
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 200000;
  /// Keep the per-step interpolation data.
  bool dense = true;
};

/// One accepted step of the Dormand-Prince pair with its quartic
/// continuous extension.
struct Segment {
  double t0 = 0.0;
  double h = 0.0;
  Vec r1, r2, r3, r4, r5;

  double t1() const { return t0 + h; }
  Vec eval(double t) const;
};

struct Result {
  std::vector<double> t;
  std::vector<Vec> y;
  std::vector<Segment> segments;
  std::size_t steps = 0;
  std::size_t rejected = 0;
  std::size_t evaluations = 0;
  /// The right-hand side raised DomainError and the step could not be
  /// shrunk around it; the solution stops at t.back().
  bool domain_exit = false;
  std::string exit_reason;
};

/// Adaptive Dormand-Prince 5(4) from t0 to t1 (either direction).
///
/// A DomainError from the right-hand side is treated as a rejected step;
/// if the step collapses because of repeated domain failures the result is
/// truncated with domain_exit set. Collapse under ordinary error control
/// throws StiffnessError.
Result dopri5(const Rhs& f, double t0, const Vec& y0, double t1, const Options& opts);

}  // namespace finsler::ode
