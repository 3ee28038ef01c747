#include <cmath>

#include "finsler/distchart.hpp"
#include "helpers.hpp"

using namespace finsler;
using testing::vec;

namespace {

// ∇_q arccosh(1 + |p - q|² / (2 p2 q2))
Vec hyperbolic_gradient(const Vec& p, const Vec& q) {
  const double u = 1 + (p - q).squaredNorm() / (2 * p[1] * q[1]);
  Vec du = (q - p) / (p[1] * q[1]);
  du[1] -= (p - q).squaredNorm() / (2 * p[1] * q[1] * q[1]);
  return du / std::sqrt(u * u - 1);
}

void check_triangular(const DistanceChart& chart) {
  const ChartCertificate cert = certify(chart);
  CHECK(cert.off_triangle < 1e-6);
  CHECK(cert.min_diagonal > 0.0);
  CHECK(cert.diagonal_mismatch < 1e-4);
}

}  // namespace

TEST_CASE("distance gradients") {
  auto e = make_euclidean();
  CHECK((distance_gradient(*e, vec({-1, 0}), vec({0, 0})) - vec({1, 0})).norm() < 1e-8);
  auto h = make_hyperbolic();
  const Vec base = vec({-0.2, 0.9}), p = vec({0.1, 1.1});
  CHECK((distance_gradient(*h, base, p) - hyperbolic_gradient(base, p)).norm() < 1e-7);
}

TEST_CASE("sphere tangent basis") {
  auto e = make_euclidean();
  const auto one = sphere_tangent_basis(*e, vec({0, 0}), {vec({-1, 0})});
  REQUIRE(one.size() == 1);
  CHECK(std::abs(one[0][0]) < 1e-8);
  CHECK(sphere_tangent_basis(*e, vec({0, 0}), {vec({-1, 0}), vec({0, -1})}).empty());
}

TEST_CASE("euclidean chart") {
  auto m = make_euclidean();
  const DistanceChart chart = build_distance_chart(m, vec({0, 0}), 1.0, 5);
  REQUIRE(chart.dim() == 2);
  check_triangular(chart);
  CHECK(chart.certified_radius > 0.0);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(chart.directions[i].norm() == doctest::Approx(1.0));
    CHECK((chart.base_points[i] - chart.center).norm() == doctest::Approx(chart.radii[i]));
  }
  // coordinates are Euclidean distances to the base points
  const Vec a = vec({0.1, -0.05});
  const Vec theta = evaluate_chart(chart, a);
  for (int i = 0; i < 2; ++i)
    CHECK(theta[i] == doctest::Approx((a - chart.base_points[i]).norm()).epsilon(1e-10));
  CHECK((invert_chart(chart, theta).x - a).norm() < 1e-8);
  const Vec at_center = evaluate_chart(chart, chart.center);
  for (int i = 0; i < 2; ++i) CHECK(at_center[i] == doctest::Approx(chart.radii[i]));
}

TEST_CASE("hyperbolic chart evaluates to closed-form distances") {
  auto m = make_hyperbolic();
  const Vec p = vec({0.1, 1.2});
  const DistanceChart chart = build_distance_chart(m, p, 0.4, 2);
  check_triangular(chart);
  Rng rng(6);
  for (int k = 0; k < 5; ++k) {
    const Vec a = rng.in_ball(p, 0.5 * chart.certified_radius);
    const Vec theta = evaluate_chart(chart, a);
    for (int i = 0; i < 2; ++i) {
      const double rho = std::acosh(1 + (a - chart.base_points[i]).squaredNorm() /
                                            (2 * a[1] * chart.base_points[i][1]));
      CHECK(theta[i] == doctest::Approx(rho).epsilon(1e-9));
    }
    CHECK((invert_chart(chart, theta, 1e-11).x - a).norm() < 1e-7);
  }
  // the Jacobian rows are the gradients of the coordinate functions on the seeds
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(chart.jacobian(i, j) ==
            doctest::Approx(hyperbolic_gradient(chart.base_points[i], p).dot(chart.directions[j]))
                .epsilon(1e-6));
}

TEST_CASE("charts on asymmetric and anisotropic metrics") {
  for (const auto& m : {make_randers(vec({0.5, 0})), make_minkowski_norm(),
                        make_randers(vec({0.2, 0.1}), testing::mat2(0, 0.15, -0.1, 0.05), 1.5)}) {
    CAPTURE(m->name());
    const DistanceChart chart = build_distance_chart(m, m->reference_region().center, 0.5, 3);
    check_triangular(chart);
    for (std::size_t i = 0; i < 2; ++i)
      CHECK(m->F(chart.center, chart.directions[i]) == doctest::Approx(1.0));
  }
}

TEST_CASE("chart JSON round trip") {
  auto m = make_round_sphere();
  const DistanceChart chart = build_distance_chart(m, vec({0.2, 0.1}), 0.5, 4);
  const DistanceChart back = chart_from_json(to_json(chart));
  CHECK(back.metric->descriptor() == m->descriptor());
  CHECK(testing::max_abs_diff(back.jacobian, chart.jacobian) == 0.0);
  CHECK(back.certified_radius == chart.certified_radius);
  const Vec a = vec({0.21, 0.09});
  CHECK((evaluate_chart(back, a) - evaluate_chart(chart, a)).norm() < 1e-14);
}

TEST_CASE("degenerate chart requests") {
  CHECK_THROWS_AS(build_distance_chart(make_euclidean(), vec({0, 0}), -1.0, 1), Error);
  CHECK_THROWS_AS(build_distance_chart(make_hyperbolic(), vec({0, -1}), 0.5, 1), Error);
}
