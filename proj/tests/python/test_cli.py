"""Exit-code and file-format contract of the command-line harness."""

import csv
import json
import os
import subprocess
from pathlib import Path

import pytest

CLI = os.environ.get("FINSLER_CLI")
CONFIGS = Path(os.environ.get("FINSLER_CONFIGS", Path(__file__).parents[2] / "configs"))

pytestmark = pytest.mark.skipif(not CLI, reason="FINSLER_CLI not set")


def run(*args):
    return subprocess.run([CLI, *map(str, args)], capture_output=True, text=True)


def write(tmp_path, name, doc):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(doc))
    return path


def test_catalog_filter():
    out = run("catalog", "submetry")
    assert out.returncode == 0
    listing = json.loads(out.stdout)
    assert [o["name"] for o in listing["operations"]] == ["submetry-ball-image", "submetry-differential"]
    assert [s["name"] for s in listing["suites"]] == ["submetry-suite"]


def test_passing_scenario_and_artifacts(tmp_path):
    out = run("run", "--out", tmp_path, CONFIGS / "randers-asymmetry.json")
    assert out.returncode == 0, out.stdout + out.stderr
    rows = list(csv.reader((tmp_path / "randers-asymmetry.asymmetry.csv").open()))
    assert rows[0] == ["p1", "p2", "q1", "q2", "rho_pq", "rho_qp"]
    for row in rows[1:]:
        p1, _, q1, _, pq, qp = map(float, row)
        assert abs((pq - qp) - (q1 - p1)) < 1e-7
    report = json.loads((tmp_path / "randers-asymmetry.report.json").read_text())
    assert report["passed"] and report["artifacts"] == ["randers-asymmetry.asymmetry.csv"]


def test_myers_steenrod_writes_derivative(tmp_path):
    out = run("run", "--out", tmp_path, CONFIGS / "hyperbolic-myers-steenrod.json")
    assert out.returncode == 0, out.stdout + out.stderr
    D = json.loads((tmp_path / "hyperbolic-myers-steenrod.derivative.json").read_text())["derivative"]
    assert abs(D[0][0] - 1) < 1e-3 and abs(D[1][1] - 1) < 1e-3 and abs(D[0][1]) < 1e-3


def test_failing_check_exits_1(tmp_path):
    out = run("run", "--out", tmp_path, "--tol-scale", "1e-12", CONFIGS / "randers-asymmetry.json")
    assert out.returncode == 1


def test_config_errors_exit_2(tmp_path):
    bad_op = write(tmp_path, "bad-op", {"schema_version": 1, "operation": "teleport", "seed": 1})
    assert run("run", "--out", tmp_path, bad_op).returncode == 2
    bad_family = write(
        tmp_path,
        "bad-family",
        {"schema_version": 1, "metric": {"family": "torus"}, "operation": "geodesic", "seed": 1},
    )
    assert run("run", "--out", tmp_path, bad_family).returncode == 2
    no_seed = write(tmp_path, "no-seed", {"schema_version": 1, "operation": "isometry-suite"})
    assert run("run", "--out", tmp_path, no_seed).returncode == 2
    assert run("run", tmp_path / "missing.json").returncode == 2
    assert run("launch").returncode == 2


def test_shared_output_paths_are_rejected_upfront(tmp_path):
    cfg = CONFIGS / "euclidean-submetry.json"
    out = run("run", "--out", tmp_path, cfg, cfg)
    assert out.returncode == 2
    assert not (tmp_path / "euclidean-submetry.report.json").exists()


def test_reports_are_reproducible(tmp_path):
    cfg = CONFIGS / "isometry-suite.json"
    texts = []
    for sub in ("a", "b"):
        assert run("run", "--out", tmp_path / sub, cfg).returncode == 0
        lines = (tmp_path / sub / "isometry-suite.report.json").read_text().splitlines()
        texts.append([line for line in lines if '"wall_time_s"' not in line])
    assert texts[0] == texts[1]


def test_seed_override_is_echoed(tmp_path):
    assert run("run", "--out", tmp_path, "--seed", "77", CONFIGS / "euclidean-geodesic-suite.json").returncode == 0
    report = json.loads((tmp_path / "euclidean-geodesic-suite.report.json").read_text())
    assert report["scenario"]["seed"] == 77
