"""Python front end for the federated data market simulator."""

import json

from ._fedcdc import (
    AllianceRecord,
    ConfigError,
    Event,
    MetricsTrace,
    ParseError,
    RoundRecord,
    ShapeError,
    distill_loss,
    kl_div,
    max_weight_clique,
    read_dimacs,
    recovered_gap,
    teacher_weights,
)
from . import _fedcdc

__all__ = [
    "AllianceRecord",
    "ConfigError",
    "Event",
    "MetricsTrace",
    "ParseError",
    "RoundRecord",
    "ShapeError",
    "compare",
    "config",
    "default_config",
    "distill_loss",
    "kl_div",
    "max_weight_clique",
    "read_dimacs",
    "recovered_gap",
    "run",
    "teacher_weights",
]


def default_config():
    return json.loads(_fedcdc.default_config_json())


def config(overrides=None, **kwargs):
    """Defaults merged with nested `overrides` and top-level keyword keys."""
    raw = dict(overrides or {})
    raw.update(kwargs)
    return json.loads(_fedcdc.normalize_config(json.dumps(raw)))


def run(cfg=None, **kwargs):
    """Run one scenario and return its MetricsTrace."""
    return _fedcdc.run_scenario(json.dumps(config(cfg, **kwargs)))


def compare(cfg=None, **kwargs):
    """Run all three scenarios on one seed; returns a dict with the table."""
    return _fedcdc.compare_scenarios(json.dumps(config(cfg, **kwargs)))
