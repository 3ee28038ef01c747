#include <cmath>

#include "finsler/maps.hpp"
#include "helpers.hpp"

using namespace finsler;
using testing::mat2;
using testing::vec;

TEST_CASE("isometry defect") {
  auto e = make_euclidean();
  CHECK(isometry_defect(rotation_probe(e, M_PI / 2), 30, 1).value < 1e-9);
  CHECK(isometry_defect(translation_probe(e, vec({1, -2})), 30, 1).value < 1e-9);
  CHECK(isometry_defect(scaling_probe(e, 2.0), 30, 1).value == doctest::Approx(1.0).epsilon(1e-9));

  auto r = make_randers(vec({0.5, 0}));
  CHECK(isometry_defect(translation_probe(r, vec({0.3, 0.2})), 30, 1).value < 1e-9);
  // rotation by 90°: |0.5 (v2 - v1) ... | maximised on the Euclidean circle is 0.5·√2
  const MapDefect rot =
      isometry_defect(rotation_probe(r, M_PI / 2), 30, 1, DirectionNorm::euclidean);
  CHECK(rot.value == doctest::Approx(0.5 * std::sqrt(2.0)).epsilon(1e-9));
  CHECK(std::abs(std::abs(rot.vector[0]) - std::sqrt(0.5)) < 1e-6);

  auto h = make_hyperbolic();
  CHECK(isometry_defect(translation_probe(h, vec({0.7, 0})), 30, 1).value < 1e-9);
  CHECK(isometry_defect(scaling_probe(h, 2.0), 30, 1).value <
        1e-9);  // dilations are hyperbolic isometries
  CHECK(isometry_defect(translation_probe(h, vec({0, 0.3})), 30, 1).value > 1e-2);
}

TEST_CASE("spray pushforward defect") {
  auto e = make_euclidean();
  CHECK(spray_pushforward_defect(rotation_probe(e, 0.4), 20, 1).value < 1e-6);
  // affine maps send straight lines to straight lines
  CHECK(spray_pushforward_defect(shear_probe(e, 1.0), 20, 1).value < 1e-6);
  // the bend has D²φ(v, v) = (0, 2k v1²)
  const MapDefect bend = spray_pushforward_defect(bend_probe(e, 0.5), 20, 1);
  CHECK(bend.value > 0.01);
  CHECK(bend.value <= 1.0 + 1e-6);

  auto h = make_hyperbolic();
  CHECK(spray_pushforward_defect(translation_probe(h, vec({0.5, 0})), 20, 1).value < 1e-5);
  CHECK(spray_pushforward_defect(translation_probe(h, vec({0, 0.5})), 20, 1).value > 1e-2);
}

TEST_CASE("geodesic image defect is necessary but not sufficient") {
  auto e = make_euclidean();
  const GeodesicPath line = integrate_geodesic(e, vec({0, 0}), vec({1, 0.5}), {-0.5, 0.5});
  CHECK(geodesic_image_defect(rotation_probe(e, 1.0), line).gap < 1e-8);
  CHECK(geodesic_image_defect(scaling_probe(e, 2.0), line).gap < 1e-8);
  CHECK(geodesic_image_defect(bend_probe(e, 0.5), line).gap > 1e-3);

  auto h = make_hyperbolic();
  const GeodesicPath arc = integrate_geodesic(h, vec({0, 1}), vec({0.5, 0.2}), {-0.5, 0.5});
  CHECK(geodesic_image_defect(translation_probe(h, vec({0.4, 0})), arc).gap < 1e-8);
}

TEST_CASE("propagation from a derivative") {
  auto e = make_euclidean();
  const auto out =
      propagate_from_derivative(*e, vec({0, 0}), *e, vec({0, 0}), mat2(0, -1, 1, 0), {vec({1, 0})});
  CHECK((out[0] - vec({0, 1})).norm() < 1e-10);
  CHECK_THROWS_AS(propagate_from_derivative(*e, vec({0, 0}), *e, vec({0, 0}),
                                            2 * Mat::Identity(2, 2), {vec({1, 0})}),
                  MapError);

  // hyperbolic: identity derivative at p, image p + c → the horizontal translation
  auto h = make_hyperbolic();
  const Vec p = vec({0, 1}), c = vec({0.3, 0});
  const auto moved = propagate_from_derivative(*h, p, *h, p + c, Mat::Identity(2, 2),
                                               {vec({0.2, 1.1}), vec({-0.1, 0.8})});
  CHECK((moved[0] - vec({0.5, 1.1})).norm() < 1e-8);
  CHECK((moved[1] - vec({0.2, 0.8})).norm() < 1e-8);
}

TEST_CASE("distance preservation audit") {
  auto e = make_euclidean();
  CHECK(audit_distance_preservation(rotation_probe(e, 0.3), vec({0, 0}), 0.5, 10, 1).passed);
  const DistanceAudit bad =
      audit_distance_preservation(scaling_probe(e, 2.0), vec({0, 0}), 0.5, 10, 1);
  CHECK_FALSE(bad.passed);
  REQUIRE(bad.witness_a.size() == 2);
  // ρ doubles: the worst gap is the witness distance itself
  CHECK(bad.worst == doctest::Approx((bad.witness_a - bad.witness_b).norm()).epsilon(1e-8));
}

TEST_CASE("Myers-Steenrod reconstruction from point maps") {
  auto e = make_euclidean();
  MapProbe rot = rotation_probe(e, M_PI / 2);
  rot.derivative = nullptr;
  rot.preimage = nullptr;
  const MyersSteenrodRecord rec = myers_steenrod_reconstruct(rot, vec({0.1, 0.2}), 0.5, 3);
  REQUIRE(rec.audit.passed);
  CHECK(testing::max_abs_diff(rec.derivative, mat2(0, -1, 1, 0)) < 1e-3);
  CHECK(rec.f_defect < 1e-3);
  CHECK(rec.route_agreement < 1e-3);

  MapProbe scale = scaling_probe(e, 2.0);
  scale.derivative = nullptr;
  scale.preimage = nullptr;
  const MyersSteenrodRecord no = myers_steenrod_reconstruct(scale, vec({0, 0}), 0.5, 3);
  CHECK_FALSE(no.audit.passed);
  CHECK(no.audit.witness_a.size() == 2);
  CHECK_FALSE(no.chart.has_value());
}

TEST_CASE("submetry ball image of the distance to the origin") {
  auto e = make_euclidean();
  const SubmetryProbe sp = make_submetry_probe(e, distance_function(e, vec({0, 0})), 0.1, "r0");
  const BallImage img = submetry_ball_image(sp, vec({1, 0}), 0.25, 4000, 1);
  CHECK(img.contained);
  CHECK(img.covered);
  CHECK(img.min == doctest::Approx(0.75).epsilon(0.01));
  CHECK(img.max == doctest::Approx(1.25).epsilon(0.01));

  // x ↦ x1² is not a submetry: the image interval is not ε-wide
  const SubmetryProbe sq =
      make_submetry_probe(e, [](const Vec& x) { return x[0] * x[0]; }, 0.1, "x1^2");
  CHECK_FALSE(submetry_ball_image(sq, vec({0.1, 0}), 0.25, 2000, 1).covered);
}

TEST_CASE("submetry differential from sandwich functions") {
  auto e = make_euclidean();
  const SubmetryProbe sp = make_submetry_probe(e, distance_function(e, vec({0, 0})), 0.1, "r0");
  const SubmetryDifferential d = submetry_differential(sp, vec({3, 4}), 1, 32);
  CHECK((d.gradient - vec({0.6, 0.8})).norm() < 1e-3);
  CHECK(d.residual < 1e-3);
  CHECK(d.direct_mismatch < 1e-3);
  CHECK(d.sandwich_violation < 1e-9);
  CHECK(d.touching_gap < 1e-6);
}

TEST_CASE("submetry tools refuse non-reversible metrics") {
  auto r = make_randers(vec({0.5, 0}));
  CHECK_THROWS_AS(make_submetry_probe(r, [](const Vec& x) { return x[0]; }, 0.1, "x1"), MapError);
}

TEST_CASE("maps from JSON") {
  auto e = make_euclidean();
  const MapProbe rot = map_from_json(e, {{"kind", "rotation"}, {"angle", M_PI / 2}});
  CHECK((rot(vec({1, 0})) - vec({0, 1})).norm() < 1e-15);
  CHECK((map_from_json(e, {{"kind", "translation"}, {"offset", {1, 2}}})(vec({0, 0})) - vec({1, 2}))
            .norm() == 0.0);
  CHECK_THROWS_AS(map_from_json(e, {{"kind", "teleport"}}), ConfigError);
  CHECK_THROWS_AS(map_from_json(e, {{"kind", "translation"}}), ConfigError);
  CHECK_THROWS_AS(map_from_json(e, {{"kind", "rotation"}, {"centre", {0, 0}}}), ConfigError);
  CHECK_THROWS_AS(map_from_json(e, {{"kind", "scaling"}, {"factor", "big"}}), ConfigError);
}
