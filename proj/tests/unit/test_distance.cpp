#include <cmath>
#include <sstream>

#include "finsler/distance.hpp"
#include "helpers.hpp"

using namespace finsler;
using testing::vec;

namespace {

double hyperbolic_distance(const Vec& p, const Vec& q) {
  return std::acosh(1 + (p - q).squaredNorm() / (2 * p[1] * q[1]));
}

}  // namespace

TEST_CASE("euclidean shooting and distance") {
  auto m = make_euclidean();
  const ShootingResult s = invert_exp(*m, vec({0, 0}), vec({3, 4}));
  CHECK((s.v - vec({3, 4})).norm() < 1e-10);
  CHECK(distance(*m, vec({0, 0}), vec({3, 4})) == doctest::Approx(5.0));
  CHECK(distance(*m, vec({1, 1}), vec({1, 1})) == 0.0);
}

TEST_CASE("hyperbolic distances match the arccosh formula") {
  auto m = make_hyperbolic();
  Rng rng(8);
  for (int k = 0; k < 10; ++k) {
    const Vec p = rng.in_ball(vec({0, 1}), 0.4), q = rng.in_ball(vec({0, 1}), 0.4);
    CHECK(distance(*m, p, q) == doctest::Approx(hyperbolic_distance(p, q)).epsilon(1e-9));
  }
}

TEST_CASE("flat Randers distance is |q - p| + b·(q - p)") {
  const Vec b = vec({0.5, 0});
  auto m = make_randers(b);
  Rng rng(9);
  for (int k = 0; k < 10; ++k) {
    const Vec p = rng.in_ball(vec({0, 0}), 1), q = rng.in_ball(vec({0, 0}), 1);
    const Vec d = q - p;
    CHECK(distance(*m, p, q) == doctest::Approx(d.norm() + b.dot(d)).epsilon(1e-10));
  }
}

TEST_CASE("radial identity rho(p, exp_p(tv)) = t F(v)") {
  auto m = make_riemannian(testing::mat2(2, 0.5, 0.5, 1), vec({0.3, -0.2}));
  const Vec p = vec({0.1, 0.2}), v = vec({0.4, -0.3});
  for (double t : {0.1, 0.5, 1.0}) {
    const Vec q = exponential(*m, p, t * v, precise_geodesic_options());
    CHECK(distance(*m, p, q) == doctest::Approx(t * m->F(p, v)).epsilon(1e-9));
  }
}

TEST_CASE("shooting failure is an InversionError") {
  ShootingOptions opts;
  opts.max_iterations = 1;
  CHECK_THROWS_AS(invert_exp(*make_hyperbolic(), vec({0, 1}), vec({1.5, 0.4}), opts),
                  InversionError);
}

TEST_CASE("arc length") {
  auto m = make_euclidean();
  CHECK(arc_length(*m, std::vector<Vec>{vec({0, 0}), vec({3, 4})}) ==
        doctest::Approx(5.0).epsilon(1e-12));
  Curve circle;
  circle.position = [](double t) { return vec({std::cos(2 * M_PI * t), std::sin(2 * M_PI * t)}); };
  CHECK(std::abs(arc_length(*m, circle) - 2 * M_PI) < 1e-6);

  // A polyline with a corner is no shorter than the straight segment, for an asymmetric metric too.
  auto randers = make_randers(vec({0.5, 0}));
  const std::vector<Vec> bent{vec({0, 0}), vec({0.3, 0.4}), vec({1, 0})};
  CHECK(arc_length(*randers, bent) >= distance(*randers, vec({0, 0}), vec({1, 0})));
  // hyperbolic length of a vertical segment from 1 to e is 1
  CHECK(arc_length(*make_hyperbolic(), std::vector<Vec>{vec({0, 1}), vec({0, std::exp(1.0)})}) ==
        doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("arc length of a geodesic equals its F-length") {
  auto m = make_hyperbolic();
  const Vec v = vec({0.4, 0.3});
  const GeodesicPath path =
      integrate_geodesic(m, vec({0, 1}), v, {0.0, 1.0}, precise_geodesic_options());
  CHECK(arc_length(*m, Curve::from_path(path)) ==
        doctest::Approx(m->F(vec({0, 1}), v)).epsilon(1e-9));
}

TEST_CASE("Busemann-Mayer quotient recovers F") {
  auto e = make_euclidean();
  const double bm = busemann_mayer_F(metric_oracle(e), [](double t) { return vec({t, t}); });
  CHECK(std::abs(bm - std::sqrt(2.0)) < 1e-4);

  auto h = make_hyperbolic();
  const Vec p = vec({0.2, 0.8}), v = vec({0.3, -0.5});
  const double F = h->F(p, v);
  const double rec = busemann_mayer_F(metric_oracle(h), [&](double t) { return Vec(p + t * v); });
  CHECK(std::abs(rec - F) < 1e-6 * F);

  // along a curve, only the initial velocity matters
  auto curve = [&](double t) { return Vec(p + t * v + t * t * vec({1, 1})); };
  CHECK(std::abs(busemann_mayer_F(metric_oracle(h), curve) - F) < 1e-6 * F);
}

TEST_CASE("oracle tables round trip") {
  auto m = make_randers(vec({0.3, -0.1}));
  const auto rho = metric_oracle(m);
  std::vector<std::pair<Vec, Vec>> pairs{
      {vec({0, 0}), vec({1, 0})}, {vec({1, 0}), vec({0, 0})}, {vec({0.2, 0.3}), vec({-0.4, 0.1})}};
  std::stringstream ss;
  write_oracle_table(ss, rho, pairs);
  CHECK(ss.str().rfind("p1,p2,q1,q2,rho\n", 0) == 0);
  const auto table = read_oracle_table(ss, 2, false);
  CHECK(table.provenance() == OracleProvenance::external);
  for (const auto& [p, q] : pairs) CHECK(table(p, q) == rho(p, q));
  CHECK_THROWS_AS(table(vec({5, 5}), vec({0, 0})), DomainError);
}

TEST_CASE("sphere samples lie on the distance sphere") {
  auto m = make_euclidean();
  const SphereSample s = sphere_sample(*m, vec({0, 0}), 1.0, 12, 3);
  REQUIRE(s.points.size() == 12);
  for (const auto& x : s.points) CHECK(x.norm() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(s.max_distance_error < 1e-9);

  auto h = make_hyperbolic();
  const SphereSample hs = sphere_sample(*h, vec({0, 1}), 0.5, 8, 3);
  for (const auto& x : hs.points)
    CHECK(hyperbolic_distance(vec({0, 1}), x) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("quasi-metric audits") {
  auto e = make_euclidean();
  const auto rep = quasimetric_audit(metric_oracle(e), e->patch(), {vec({0, 0}), 0.5}, 20, 20, 1);
  CHECK(rep.passed());
  CHECK(rep.reversible);

  auto r = make_randers(vec({0.5, 0}));
  const auto rr = quasimetric_audit(metric_oracle(r), r->patch(), {vec({0, 0}), 0.5}, 20, 20, 1);
  CHECK(rr.passed());
  CHECK_FALSE(rr.reversible);

  // an oracle that violates the triangle inequality is caught
  QuasiMetricOracle squared([](const Vec& p, const Vec& q) { return (p - q).squaredNorm(); }, true,
                            OracleProvenance::external);
  CHECK_FALSE(quasimetric_audit(squared, e->patch(), {vec({0, 0}), 1.0}, 20, 50, 1).passed());
}

TEST_CASE("triangle inequality holds for computed hyperbolic distances") {
  auto m = make_hyperbolic();
  Rng rng(12);
  for (int k = 0; k < 10; ++k) {
    const Vec a = rng.in_ball(vec({0, 1}), 0.3), b = rng.in_ball(vec({0, 1}), 0.3),
              c = rng.in_ball(vec({0, 1}), 0.3);
    CHECK(distance(*m, a, c) <= distance(*m, a, b) + distance(*m, b, c) + 1e-10);
  }
}
