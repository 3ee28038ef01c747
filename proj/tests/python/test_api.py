import math

import numpy as np
import pytest

import finsler


def test_metric_construction_and_evaluation():
    e = finsler.metric("euclidean")
    assert e.family == "euclidean"
    assert e.F([0.0, 0.0], [3.0, 4.0]) == pytest.approx(5.0)
    r = finsler.metric("randers", drift=[0.5, 0.0])
    assert r.F([0, 0], [1.0, 0.0]) == pytest.approx(1.5)
    assert r.F([0, 0], [-1.0, 0.0]) == pytest.approx(0.5)
    assert not r.declared_reversible
    g = r.fundamental_tensor([0.0, 0.0], [0.0, 1.0])
    np.testing.assert_allclose(g, [[1.25, 0.5], [0.5, 1.0]], atol=1e-12)
    assert finsler.descriptor(r)["drift"] == [0.5, 0.0]


def test_errors_are_typed():
    with pytest.raises(finsler.ConfigError):
        finsler.metric("flat-earth")
    h = finsler.metric("hyperbolic-half-plane")
    with pytest.raises(finsler.DomainError):
        h.F([0.0, -1.0], [1.0, 0.0])
    with pytest.raises(finsler.SingularityError):
        h.fundamental_tensor([0.0, 1.0], [0.0, 0.0])
    assert issubclass(finsler.MapError, finsler.FinslerError)


def test_hyperbolic_spray_and_geodesic():
    h = finsler.metric("hyperbolic-half-plane")
    np.testing.assert_allclose(finsler.spray(h, [0.0, 1.0], [1.0, 0.0]), [0.0, 0.5], atol=1e-12)
    path = finsler.geodesic(h, [0.0, 1.0], [1.0, 0.0], -1.0, 1.0)
    radii = np.linalg.norm(path["x"], axis=1)
    np.testing.assert_allclose(radii, 1.0, atol=1e-8)
    assert not path["exited_patch"]
    res = finsler.spray_residuals(h, [0.2, 1.1], [0.4, -0.3])
    assert np.abs(res["rapcsak"]).max() < 1e-6 * res["F"]


def test_distance_log_and_exp():
    h = finsler.metric("hyperbolic-half-plane")
    p, q = np.array([0.1, 1.0]), np.array([-0.2, 1.3])
    exact = math.acosh(1 + np.sum((p - q) ** 2) / (2 * p[1] * q[1]))
    assert finsler.distance(h, p, q) == pytest.approx(exact, rel=1e-9)
    v = finsler.log(h, p, q)
    np.testing.assert_allclose(finsler.exp(h, p, v), q, atol=1e-10)
    assert finsler.busemann_mayer(h, p, [0.3, 0.2]) == pytest.approx(h.F(p, [0.3, 0.2]), rel=1e-6)


def test_distance_chart_round_trip():
    m = finsler.metric("round-sphere-patch")
    chart = finsler.distance_chart(m, [0.2, 0.1], 0.5, seed=3)
    J = np.array(chart["jacobian"])
    assert abs(J[0, 1]) < 1e-6 * np.linalg.norm(J)
    assert np.all(np.diag(J) > 0)
    a = np.array([0.205, 0.098])
    theta = finsler.chart_evaluate(chart, a)
    np.testing.assert_allclose(finsler.chart_invert(chart, theta), a, atol=1e-8)


def test_randers_rotation_defect():
    r = finsler.metric("randers", drift=[0.5, 0.0])
    assert finsler.isometry_defect(r, {"kind": "translation", "offset": [0.3, 0.1]}) < 1e-9


def test_catalog_and_scenarios(tmp_path):
    cat = finsler.catalog()
    assert len(cat["families"]) == 6
    assert [o["name"] for o in finsler.catalog("submetry")["operations"]] == [
        "submetry-ball-image",
        "submetry-differential",
    ]
    report = finsler.run_scenario(
        {
            "schema_version": 1,
            "name": "py",
            "metric": {"family": "euclidean"},
            "operation": "spray-suite",
            "seed": 1,
        },
        tmp_path,
    )
    assert report["passed"]
    assert (tmp_path / "py.report.json").exists()
