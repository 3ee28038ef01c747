#pragma once

#include <doctest.h>

#include <initializer_list>

#include "finsler/numcore.hpp"

namespace testing {

inline finsler::Vec vec(std::initializer_list<double> xs) {
  finsler::Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline finsler::Mat mat2(double a, double b, double c, double d) {
  return (finsler::Mat(2, 2) << a, b, c, d).finished();
}

inline double max_abs_diff(const finsler::Mat& a, const finsler::Mat& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace testing
