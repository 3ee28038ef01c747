"""Python access to the finsler library.

Vectors are numpy arrays; structured results (charts, catalogs, reports)
come back as plain dicts.
"""

import json

import numpy as np

from . import _finsler
from ._finsler import (
    ChartError,
    ConfigError,
    DomainError,
    FinslerError,
    InversionError,
    MapError,
    Metric,
    SingularityError,
    busemann_mayer,
    distance,
    exp,
    log,
    normal_radius,
    spray,
)

__all__ = [
    "ChartError",
    "ConfigError",
    "DomainError",
    "FinslerError",
    "InversionError",
    "MapError",
    "Metric",
    "busemann_mayer",
    "catalog",
    "chart_evaluate",
    "chart_invert",
    "descriptor",
    "distance",
    "distance_chart",
    "exp",
    "geodesic",
    "isometry_defect",
    "log",
    "metric",
    "normal_radius",
    "run_scenario",
    "spray",
    "spray_residuals",
]


def metric(family, **params):
    """Builds a metric, e.g. ``metric("randers", drift=[0.5, 0])``."""
    return _finsler.metric_from_json(json.dumps({"family": family, **params}))


def descriptor(m):
    return json.loads(m.descriptor_json())


def spray_residuals(m, x, y):
    rapcsak, sf, F = _finsler.spray_residuals(m, x, y)
    return {"rapcsak": np.asarray(rapcsak), "SF": sf, "F": F}


def geodesic(m, p, v, t_minus=0.0, t_plus=1.0):
    """Step end points (t, x, xdot) and whether the curve left the patch."""
    t, x, xdot, exited = _finsler.geodesic(m, p, v, t_minus, t_plus)
    return {"t": t, "x": x, "xdot": xdot, "exited_patch": exited}


def distance_chart(m, center, budget, seed=0):
    return json.loads(_finsler.distance_chart(m, center, budget, seed))


def chart_evaluate(chart, a):
    return _finsler.chart_evaluate(json.dumps(chart), a)


def chart_invert(chart, theta):
    return _finsler.chart_invert(json.dumps(chart), theta)


def isometry_defect(m, map_spec, samples=50, seed=0):
    return _finsler.isometry_defect(m, json.dumps(map_spec), samples, seed)


def catalog(filter=""):
    return json.loads(_finsler.catalog(filter))


def run_scenario(config, out_dir):
    """Runs a scenario dict and writes its report; returns the report."""
    return json.loads(_finsler.run_scenario(json.dumps(config), str(out_dir)))
