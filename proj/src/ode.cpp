#include "finsler/ode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace finsler::ode {

namespace {

// Dormand & Prince (1980) tableau and Shampine's dense-output weights.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

double error_norm(const Vec& err, const Vec& y0, const Vec& y1, const Options& o) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc = o.atol + o.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = err[i] / sc;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(err.size()));
}

double rms_scaled(const Vec& v, const Vec& y, const Options& o) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double r = v[i] / (o.atol + o.rtol * std::abs(y[i]));
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace

Vec Segment::eval(double t) const {
  const double th = (t - t0) / h;
  const double th1 = 1.0 - th;
  return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
}

Result dopri5(const Rhs& f, double t0, const Vec& y0, double t1, const Options& opts) {
  Result res;
  res.t.push_back(t0);
  res.y.push_back(y0);
  if (t1 == t0) return res;

  const double dir = t1 > t0 ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);
  const double min_step = 1e-13 * std::max(1.0, std::abs(t0) + span);

  auto eval = [&](double t, const Vec& y) {
    ++res.evaluations;
    return f(t, y);
  };

  Vec k1;
  try {
    k1 = eval(t0, y0);
  } catch (const DomainError& e) {
    res.domain_exit = true;
    res.exit_reason = e.what();
    return res;
  }

  // Initial step after Hairer, Norsett & Wanner (II.4).
  double h;
  {
    const double dn0 = rms_scaled(y0, y0, opts);
    const double dn1 = rms_scaled(k1, y0, opts);
    h = (dn0 < 1e-5 || dn1 < 1e-5) ? 1e-6 : 0.01 * dn0 / dn1;
    h = std::min({h, span, opts.max_step});
    try {
      const Vec y1 = y0 + dir * h * k1;
      const Vec k2 = eval(t0 + dir * h, y1);
      const double dn2 = rms_scaled(k2 - k1, y0, opts) / h;
      const double dmax = std::max(dn1, dn2);
      const double h1 = dmax <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / dmax, 0.2);
      h = std::min({100.0 * h, h1, span, opts.max_step});
    } catch (const DomainError&) {
      h *= 0.1;
    }
  }

  double t = t0;
  Vec y = y0;
  bool last_failed_domain = false;
  double fac_max = 10.0;

  while (dir * (t1 - t) > 0.0) {
    if (res.steps + res.rejected >= opts.max_steps) {
      std::ostringstream os;
      os << "step budget exhausted at t=" << t;
      throw StiffnessError(os.str());
    }
    bool final_step = false;
    if (h >= std::abs(t1 - t)) {
      h = std::abs(t1 - t);
      final_step = true;
    }
    if (h < min_step) {
      if (last_failed_domain) {
        res.domain_exit = true;
        if (res.exit_reason.empty()) res.exit_reason = "left the patch";
        return res;
      }
      if (!final_step) {
        std::ostringstream os;
        os << "step size underflow at t=" << t;
        throw StiffnessError(os.str());
      }
    }
    const double hs = dir * h;

    Vec k2, k3, k4, k5, k6, k7, ynew;
    try {
      k2 = eval(t + c2 * hs, y + hs * (a21 * k1));
      k3 = eval(t + c3 * hs, y + hs * (a31 * k1 + a32 * k2));
      k4 = eval(t + c4 * hs, y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
      k5 = eval(t + c5 * hs, y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      k6 = eval(t + hs, y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      ynew = y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      k7 = eval(t + hs, ynew);
    } catch (const DomainError& e) {
      ++res.rejected;
      last_failed_domain = true;
      res.exit_reason = e.what();
      h *= 0.25;
      fac_max = 1.0;
      continue;
    }
    last_failed_domain = false;

    const Vec err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = error_norm(err, y, ynew, opts);
    if (!std::isfinite(en)) {
      ++res.rejected;
      h *= 0.25;
      continue;
    }
    const double fac = std::clamp(0.9 * std::pow(std::max(en, 1e-10), -0.2), 0.2, fac_max);

    if (en <= 1.0) {
      if (opts.dense) {
        Segment seg;
        seg.t0 = t;
        seg.h = hs;
        seg.r1 = y;
        seg.r2 = ynew - y;
        seg.r3 = hs * k1 - seg.r2;
        seg.r4 = seg.r2 - hs * k7 - seg.r3;
        seg.r5 = hs * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
        res.segments.push_back(std::move(seg));
      }
      t = final_step ? t1 : t + hs;
      y = ynew;
      k1 = k7;
      ++res.steps;
      res.t.push_back(t);
      res.y.push_back(y);
      fac_max = 10.0;
      h = std::min(h * fac, opts.max_step);
    } else {
      ++res.rejected;
      h *= std::min(1.0, fac);
      fac_max = 1.0;
    }
  }
  res.exit_reason.clear();
  return res;
}

}  // namespace finsler::ode
