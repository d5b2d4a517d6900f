"""Ricci flow on homogeneous model geometries, with explicit-constant checks."""

import json

import numpy as np

from . import _rflab
from ._rflab import ConfigError, DomainError, Error, SchemaError, check_names, solve_root

__all__ = [
    "ConfigError",
    "DomainError",
    "Error",
    "SchemaError",
    "check",
    "check_names",
    "constants",
    "exact_moser_sums",
    "flow",
    "holder_suite",
    "solve_root",
]


def flow(config, overrides=(), seed=None):
    """Integrate the configured flow. Returns (columns, data, meta) with one
    row of ``data`` per recorded state."""
    out = json.loads(_rflab.flow_json(str(config), list(overrides), seed))
    records = out["trajectory"]
    columns = list(records[0].keys()) if records else []
    data = np.array(
        [[np.nan if r[c] is None else r[c] for c in columns] for r in records], dtype=float
    )
    return columns, data, out["meta"]


def check(config, trajectory, checks=(), overrides=()):
    """Run the check suite on a trajectory CSV; one dict per report."""
    return json.loads(_rflab.check_json(str(config), str(trajectory), list(checks), list(overrides)))


def constants(config, overrides=()):
    return json.loads(_rflab.constants_json(str(config), list(overrides)))


def exact_moser_sums(n, terms=32):
    return json.loads(_rflab.exact_moser_sums_json(n, terms))


def holder_suite(seed=20211104, measures=1000):
    return json.loads(_rflab.holder_suite_json(seed, measures))
