#include <cmath>

#include "finsler/numcore.hpp"
#include "helpers.hpp"

using namespace finsler;
using testing::vec;

TEST_CASE("gradient matches the analytic gradient") {
  auto f = [](const Vec& x) { return std::sin(x[0]) * std::cos(x[1]) + x[0] * x[0] * x[1]; };
  const Vec p = vec({0.4, -1.1});
  const Vec exact = vec(
      {std::cos(0.4) * std::cos(-1.1) + 2 * 0.4 * -1.1, -std::sin(0.4) * std::sin(-1.1) + 0.16});
  CHECK((gradient(f, p) - exact).norm() < 1e-9);
  CHECK((gradient(f, p, DiffConfig{1e-3, 3}) - exact).norm() < 1e-11);
}

TEST_CASE("Richardson levels raise the order of accuracy") {
  auto f = [](const Vec& x) { return std::exp(3 * x[0]); };
  const Vec p = vec({0.2}), e = vec({1.0});
  const double exact = 3 * std::exp(0.6);
  const double plain = std::abs(directional_derivative(f, p, e, DiffConfig{1e-2, 1}) - exact);
  const double deep = std::abs(directional_derivative(f, p, e, DiffConfig{1e-2, 3}) - exact);
  CHECK(plain > 1e-4);
  CHECK(deep < 1e-9);
}

TEST_CASE("jacobian and second directional derivative of a polynomial map") {
  auto map = [](const Vec& x) { return vec({x[0] * x[1], x[0] * x[0] - 3 * x[1]}); };
  const Vec p = vec({1.5, -2.0});
  const Mat J = jacobian(map, p);
  CHECK(testing::max_abs_diff(J, testing::mat2(-2.0, 1.5, 3.0, -3.0)) < 1e-8);
  // d²/dt² of map(p + t v) = (2 v0 v1, 2 v0²)
  const Vec v = vec({0.5, 2.0});
  CHECK((second_directional_derivative(map, p, v, nested_diff_config()) - vec({2.0, 0.5})).norm() <
        1e-7);
}

TEST_CASE("invalid difference settings are refused") {
  auto f = [](const Vec& x) { return x[0]; };
  CHECK_THROWS_AS(gradient(f, vec({0.0}), DiffConfig{0.0, 1}), DegenerateInputError);
  CHECK_THROWS_AS(gradient(f, vec({0.0}), DiffConfig{1e-3, 0}), DegenerateInputError);
  CHECK_THROWS_AS(directional_derivative(f, vec({0.0}), vec({0.0})), DegenerateInputError);
}

TEST_CASE("null space basis") {
  SUBCASE("one row in the plane") {
    const auto basis = null_space_basis({vec({1.0, 0.0})}, 2);
    REQUIRE(basis.size() == 1);
    CHECK(std::abs(basis[0][0]) < 1e-14);
    CHECK(std::abs(std::abs(basis[0][1]) - 1.0) < 1e-14);
  }
  SUBCASE("two independent rows leave nothing") {
    CHECK(null_space_basis({vec({1.0, 0.0}), vec({0.0, 1.0})}, 2).empty());
  }
  SUBCASE("dependent rows count once") {
    const auto basis = null_space_basis({vec({1.0, 1.0, 0.0}), vec({2.0, 2.0, 0.0})}, 3);
    CHECK(basis.size() == 2);
  }
  SUBCASE("output is orthonormal and annihilated by the rows") {
    Rng rng(5);
    const std::vector<Vec> rows{rng.unit_vector(4), rng.unit_vector(4)};
    const auto basis = null_space_basis(rows, 4);
    REQUIRE(basis.size() == 2);
    for (const auto& b : basis) {
      CHECK(std::abs(b.norm() - 1.0) < 1e-12);
      for (const auto& r : rows) CHECK(std::abs(r.dot(b)) < 1e-12);
    }
    CHECK(std::abs(basis[0].dot(basis[1])) < 1e-12);
  }
}

TEST_CASE("condition number of symmetric matrices") {
  CHECK(spd_condition_number(testing::mat2(4, 0, 0, 1)) == doctest::Approx(4.0));
  CHECK(std::isinf(spd_condition_number(testing::mat2(1, 0, 0, -1))));
}

TEST_CASE("Rng is reproducible and samples the ball") {
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) CHECK(a.uniform() == b.uniform());
  Rng rng(7);
  const Vec c = vec({1.0, -2.0});
  double mean_r = 0.0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    const Vec x = rng.in_ball(c, 0.5);
    CHECK((x - c).norm() <= 0.5);
    mean_r += (x - c).norm() / n;
  }
  // uniform in a disk: E|x - c| = 2R/3
  CHECK(mean_r == doctest::Approx(1.0 / 3.0).epsilon(0.02));
  for (int i = 0; i < 20; ++i) CHECK(std::abs(rng.unit_vector(3).norm() - 1.0) < 1e-14);
}

TEST_CASE("patch membership and boundary slack") {
  PatchSpec half(2, {}, Constraint{[](const Vec& x) { return x[1]; }, "x2 > 0"});
  CHECK(half.contains(vec({0.0, 1.0})));
  CHECK_FALSE(half.contains(vec({0.0, -1.0})));
  CHECK_FALSE(half.contains(vec({0.0, 0.05}), 0.1));
  CHECK(half.slack(vec({3.0, 0.25})) == doctest::Approx(0.25));
  CHECK_THROWS_AS(half.require(vec({0.0, -1.0})), DomainError);
  CHECK_THROWS_AS(half.require(vec({0.0, 1.0, 2.0})), DomainError);
  CHECK_THROWS_AS(half.require(vec({NAN, 1.0})), DomainError);

  PatchSpec box(2, {{-1.0, 1.0}, {0.0, 2.0}});
  CHECK(box.slack(vec({0.5, 1.0})) == doctest::Approx(0.5));
  CHECK(std::isinf(PatchSpec(2).slack(vec({1e6, 1e6}))));
}
