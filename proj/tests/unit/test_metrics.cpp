#include <cmath>

#include "finsler/metrics.hpp"
#include "helpers.hpp"

using namespace finsler;
using testing::mat2;
using testing::max_abs_diff;
using testing::vec;

namespace {

// ½ Hessian of F² in y by a 4th-order five-point stencil.
Mat hessian_oracle(const FinslerMetric& m, const Vec& x, const Vec& y) {
  const double h = 1e-3;
  const auto n = y.size();
  auto E = [&](const Vec& w) { return 0.5 * std::pow(m.F(x, w), 2); };
  Mat H(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      auto shifted = [&](double a, double b) {
        Vec w = y;
        w[i] += a * h;
        w[j] += b * h;
        return E(w);
      };
      // mixed fourth-order stencil
      double s = 0.0;
      const int k[4] = {1, -1, 2, -2};
      const double c[4] = {8, -8, -1, 1};
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) s += c[a] * c[b] * shifted(k[a], k[b]);
      H(i, j) = s / (144 * h * h);
    }
  return H;
}

std::vector<MetricPtr> every_family() {
  return {make_euclidean(),
          make_minkowski_norm(),
          make_riemannian(mat2(2, 0.5, 0.5, 1), vec({0.3, -0.2})),
          make_randers(vec({0.2, 0.1}), mat2(0, 0.15, -0.1, 0.05), 1.5),
          make_hyperbolic(),
          make_round_sphere()};
}

}  // namespace

TEST_CASE("family names round trip and unknown names are config errors") {
  REQUIRE(all_families().size() == 6);
  for (Family f : all_families()) CHECK(family_from_name(family_name(f)) == f);
  CHECK_THROWS_AS(family_from_name("klein-bottle"), ConfigError);
}

TEST_CASE("euclidean norm and tensor") {
  auto m = make_euclidean();
  CHECK(m->F(vec({7, -2}), vec({3, 4})) == doctest::Approx(5.0));
  CHECK(max_abs_diff(m->fundamental_tensor(vec({0, 0}), vec({1, 0})), Mat::Identity(2, 2)) < 1e-14);
  CHECK_THROWS_AS(m->fundamental_tensor(vec({0, 0}), vec({0, 0})), SingularityError);
  CHECK(m->F(vec({0, 0}), vec({0, 0})) == 0.0);
}

TEST_CASE("Randers fundamental tensor at y = (0, 1)") {
  // F = |y| + b·y, b = (0.5, 0): g = (F/|y|)(I - ŷŷᵀ) + (ŷ + b)(ŷ + b)ᵀ
  auto m = make_randers(vec({0.5, 0.0}));
  CHECK(max_abs_diff(m->fundamental_tensor(vec({0, 0}), vec({0, 1})), mat2(1.25, 0.5, 0.5, 1.0)) <
        1e-12);
  CHECK(m->F(vec({0, 0}), vec({1, 0})) == doctest::Approx(1.5));
  CHECK(m->F(vec({0, 0}), vec({-1, 0})) == doctest::Approx(0.5));
}

TEST_CASE("closed-form tensors of the curved families") {
  const Vec y = vec({0.3, -0.7});
  SUBCASE("hyperbolic: g = I / x2²") {
    auto m = make_hyperbolic(2, 1.0);
    CHECK(max_abs_diff(m->fundamental_tensor(vec({0.4, 0.5}), y), Mat::Identity(2, 2) / 0.25) <
          1e-12);
    auto scaled = make_hyperbolic(2, 2.0);
    CHECK(scaled->F(vec({0, 1}), vec({1, 0})) == doctest::Approx(2.0));
  }
  SUBCASE("sphere: g = 4R² / (1 + |x|²)² I") {
    auto m = make_round_sphere(2, 1.5);
    const Vec x = vec({0.6, 0.2});
    const double c = 4 * 2.25 / std::pow(1 + x.squaredNorm(), 2);
    CHECK(max_abs_diff(m->fundamental_tensor(x, y), c * Mat::Identity(2, 2)) < 1e-12);
  }
  SUBCASE("conformal Riemannian: g = exp(2 s·x) A") {
    const Mat A = mat2(2, 0.5, 0.5, 1);
    auto m = make_riemannian(A, vec({0.3, -0.2}));
    const Vec x = vec({0.5, 0.25});
    CHECK(max_abs_diff(m->fundamental_tensor(x, y), std::exp(2 * (0.15 - 0.05)) * A) < 1e-12);
  }
}

TEST_CASE("fundamental tensor agrees with an independent Hessian of F²") {
  Rng rng(3);
  for (const auto& m : every_family()) {
    CAPTURE(m->name());
    for (int k = 0; k < 5; ++k) {
      const Vec x = rng.in_ball(m->reference_region().center, 0.5 * m->reference_region().radius);
      const Vec y = rng.unit_vector(2) * rng.uniform(0.5, 2.0);
      const Mat g = m->fundamental_tensor(x, y);
      CHECK(max_abs_diff(g, hessian_oracle(*m, x, y)) < 1e-6 * (1 + g.norm()));
    }
  }
}

TEST_CASE("closed-form energy jets match the finite-difference rebuild") {
  Rng rng(11);
  for (const auto& m : every_family()) {
    CAPTURE(m->name());
    for (int k = 0; k < 5; ++k) {
      const Vec x = rng.in_ball(m->reference_region().center, 0.5 * m->reference_region().radius);
      const Vec y = rng.unit_vector(2);
      const EnergyJet a = m->energy_jet(x, y), b = energy_jet_fd(*m, x, y);
      CHECK(std::abs(a.E - b.E) < 1e-12);
      CHECK(max_abs_diff(a.E_x, b.E_x) < 1e-7);
      CHECK(max_abs_diff(a.E_y, b.E_y) < 1e-7);
      CHECK(max_abs_diff(a.E_yy, b.E_yy) < 1e-6);
      CHECK(max_abs_diff(a.E_xy, b.E_xy) < 1e-6);
    }
  }
}

TEST_CASE("positive homogeneity and Euler identity E_y·y = 2E") {
  Rng rng(17);
  for (const auto& m : every_family()) {
    CAPTURE(m->name());
    const Vec x = m->reference_region().center;
    for (int k = 0; k < 10; ++k) {
      const Vec y = rng.unit_vector(2);
      const double lambda = rng.uniform(0.01, 50.0);
      CHECK(m->F(x, lambda * y) == doctest::Approx(lambda * m->F(x, y)).epsilon(1e-12));
      const EnergyJet j = m->energy_jet(x, y);
      CHECK(j.E_y.dot(y) == doctest::Approx(2 * j.E).epsilon(1e-12));
    }
  }
}

TEST_CASE("validation report") {
  SUBCASE("euclidean passes and is reversible") {
    const auto rep = validate_finsler(*make_euclidean(), 100, 1);
    CHECK(rep.passed());
    CHECK(rep.reversible);
  }
  SUBCASE("Randers is measured non-reversible, consistent with its declaration") {
    const auto rep = validate_finsler(*make_randers(vec({0.5, 0.0})), 100, 1);
    CHECK(rep.passed());
    CHECK_FALSE(rep.reversible);
    CHECK_FALSE(rep.reversible_declared);
    CHECK(rep.witness_a.size() == 2);
  }
  SUBCASE("every family validates") {
    for (const auto& m : every_family()) {
      CAPTURE(m->name());
      CHECK(validate_finsler(*m, 100, 2).passed());
    }
  }
}

TEST_CASE("descriptors round trip through metric_from_json") {
  for (const auto& m : every_family()) {
    CAPTURE(m->name());
    const auto d = m->descriptor();
    CHECK(metric_from_json(d)->descriptor() == d);
  }
  CHECK_THROWS_AS(metric_from_json({{"family", "euclidean"}, {"colour", 1}}), ConfigError);
  CHECK_THROWS_AS(metric_from_json({{"dim", 2}}), ConfigError);
  CHECK_THROWS_AS(metric_from_json({{"family", "randers"}, {"drift", "fast"}}), ConfigError);
}

TEST_CASE("invalid parameters surface as validation failures") {
  // |b| = 1.2: along y = -b, F = |y|(1 - 1.2) < 0 and g loses definiteness
  auto m = make_randers(vec({1.2, 0.0}));
  const Vec x = vec({0, 0});
  double min_eig = 1.0;
  for (int k = 0; k < 360; ++k) {
    const Vec y = vec({std::cos(k * M_PI / 180), std::sin(k * M_PI / 180)});
    min_eig = std::min(
        min_eig, Eigen::SelfAdjointEigenSolver<Mat>(hessian_oracle(*m, x, y)).eigenvalues()[0]);
  }
  REQUIRE(min_eig <= 0.0);
  const auto rep = validate_finsler(*m, 200, 1);
  CHECK_FALSE(rep.passed());
  CHECK_FALSE(rep.check("ellipticity").passed);

  CHECK_FALSE(validate_finsler(*make_riemannian(mat2(1, 2, 2, 1), vec({0, 0})), 100, 1).passed());
  CHECK_THROWS_AS(make_hyperbolic()->F(vec({0, -1}), vec({1, 0})), DomainError);
  CHECK_THROWS_AS(make_hyperbolic(2, -1.0), DegenerateInputError);
}

TEST_CASE("tensor invariants") {
  CHECK(make_hyperbolic()->F(vec({0, 2}), vec({0, 1})) == doctest::Approx(0.5));
  auto riem = make_riemannian(mat2(2, 0.5, 0.5, 1), vec({0.3, -0.2}));
  const Vec x = vec({0.2, -0.1});
  CHECK(testing::max_abs_diff(riem->fundamental_tensor(x, vec({1, 0})),
                              riem->fundamental_tensor(x, vec({0.3, -2}))) < 1e-9);
  Rng rng(31);
  for (const auto& m : every_family()) {
    CAPTURE(m->name());
    const Vec p = m->reference_region().center;
    const Vec y = rng.unit_vector(2);
    const Mat g = m->fundamental_tensor(p, y);
    CHECK(testing::max_abs_diff(g, m->fundamental_tensor(p, 7.5 * y)) < 1e-8 * g.norm());
    CHECK(testing::max_abs_diff(g * y, m->energy_jet(p, y).E_y) < 1e-10);
  }
}
