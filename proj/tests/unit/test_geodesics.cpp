#include <cmath>
#include <sstream>

#include "finsler/geodesics.hpp"
#include "helpers.hpp"

using namespace finsler;
using testing::vec;

TEST_CASE("euclidean geodesics are straight lines") {
  auto m = make_euclidean();
  const GeodesicPath path = integrate_geodesic(m, vec({0, 0}), vec({1, 2}), {0.0, 1.0});
  for (double t : {0.0, 0.25, 0.5, 0.9, 1.0})
    CHECK((path.position(t) - vec({t, 2 * t})).norm() < 1e-12);
  CHECK((exponential(*m, vec({1, 1}), vec({2, 0})) - vec({3, 1})).norm() < 1e-12);
  CHECK((exponential(*m, vec({1, 1}), vec({0, 0})) - vec({1, 1})).norm() == 0.0);
  CHECK(rescaling_defect(*m, vec({0, 0}), vec({1, 2}), 0.7, 1.3) < 1e-12);
}

TEST_CASE("hyperbolic geodesics") {
  auto m = make_hyperbolic();
  SUBCASE("vertical line: x2(t) = exp(t)") {
    const GeodesicPath path = integrate_geodesic(m, vec({0, 1}), vec({0, 1}), {-1.0, 1.0});
    for (double t : {-1.0, -0.3, 0.4, 1.0}) {
      CHECK(std::abs(path.position(t)[0]) < 1e-12);
      CHECK(path.position(t)[1] == doctest::Approx(std::exp(t)).epsilon(1e-8));
    }
  }
  SUBCASE("horizontal start follows the unit semicircle with x1 = tanh t") {
    const GeodesicPath path = integrate_geodesic(m, vec({0, 1}), vec({1, 0}), {-1.0, 1.0});
    for (double t : {-1.0, -0.5, 0.2, 1.0}) {
      const Vec x = path.position(t);
      CHECK(x.norm() == doctest::Approx(1.0).epsilon(1e-8));
      CHECK(x[0] == doctest::Approx(std::tanh(t)).epsilon(1e-8));
    }
    CHECK(path.max_speed_drift(*m) < 1e-7);
  }
  SUBCASE("rescaling identity") {
    CHECK(rescaling_defect(*m, vec({0.2, 1.1}), vec({0.5, -0.3}), 0.6, 1.4,
                           precise_geodesic_options()) < 1e-9);
  }
}

TEST_CASE("sphere radial geodesic from the chart origin: x(t) = tan(|v| t) v/|v|") {
  auto m = make_round_sphere(2, 1.0);
  const Vec v = vec({0.3, 0.4});
  const GeodesicEndpoint end = geodesic_flow(*m, vec({0, 0}), v, 1.0, precise_geodesic_options());
  CHECK((end.x - std::tan(0.5) * v / 0.5).norm() < 1e-9);
}

TEST_CASE("leaving the patch truncates the path") {
  auto m = make_round_sphere(2, 1.0, 10.0);
  const GeodesicPath path = integrate_geodesic(m, vec({0, 0}), vec({1, 0}), {0.0, 3.0});
  CHECK(path.exited_patch());
  CHECK_FALSE(path.exit_reason().empty());
  // tan(t) reaches the chart bound 10 at t = atan(10)
  CHECK(path.t_plus() < std::atan(10.0));
  CHECK(path.t_plus() > std::atan(10.0) - 0.05);
  CHECK_THROWS_AS(geodesic_flow(*m, vec({0, 0}), vec({1, 0}), 3.0), DomainError);
}

TEST_CASE("geodesic CSV has a header and one row per step") {
  auto m = make_hyperbolic();
  const GeodesicPath path = integrate_geodesic(m, vec({0, 1}), vec({1, 0}), {-0.5, 0.5});
  std::ostringstream os;
  write_csv(os, path);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,x1,x2,v1,v2");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == path.samples().size());
}

TEST_CASE("speed is conserved on every family") {
  const std::vector<MetricPtr> metrics{
      make_minkowski_norm(), make_riemannian(testing::mat2(2, 0.5, 0.5, 1), vec({0.3, -0.2})),
      make_randers(vec({0.2, 0.1}), testing::mat2(0, 0.15, -0.1, 0.05), 1.5), make_hyperbolic(),
      make_round_sphere()};
  Rng rng(4);
  for (const auto& m : metrics) {
    CAPTURE(m->name());
    const Vec p = m->reference_region().center;
    const Vec v = rng.unit_vector(2) * 0.5;
    const GeodesicPath path = integrate_geodesic(m, p, v, {-1.0, 1.0});
    CHECK(path.max_speed_drift(*m) < 1e-6);
  }
}

TEST_CASE("normal radius and emanating points") {
  auto flat = make_euclidean();
  const auto est = normal_radius(*flat, vec({0, 0}), 10.0);
  CHECK(est.radius == doctest::Approx(10.0));
  CHECK(est.reached_cap);

  const EmanatingPoint e = emanating_point(*flat, vec({0, 0}), vec({1, 0}), 0.5);
  CHECK((e.q - vec({-0.5, 0})).norm() < 1e-12);
  CHECK((e.w - vec({1, 0})).norm() < 1e-12);
  CHECK(e.lambda == doctest::Approx(1.0));
  CHECK((exponential(*flat, e.q, 0.5 * e.w) - vec({0, 0})).norm() < 1e-12);

  // curved case: the returned data must reproduce p and λv
  auto hyp = make_hyperbolic();
  const Vec p = vec({0.1, 1.2}), v = vec({0.6, -0.3});
  const EmanatingPoint h = emanating_point(*hyp, p, v);
  const GeodesicEndpoint end =
      geodesic_flow(*hyp, h.q, h.w, h.delta / h.lambda, precise_geodesic_options());
  CHECK((end.x - p).norm() < 1e-9);
  CHECK((end.v - h.lambda * v).norm() < 1e-8);
  CHECK(h.lambda > 0.0);
  CHECK(h.lambda <= 1.0);
}

TEST_CASE("sphere normal radius stays below the conjugate distance") {
  auto m = make_round_sphere(2, 1.0);
  const auto est = normal_radius(*m, vec({0, 0}), 5.0);
  CHECK(est.radius > 0.5);
  CHECK(est.radius < M_PI);
}
