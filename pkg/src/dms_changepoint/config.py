"""Experiment configuration files (TOML or JSON).

A config is a flat document of top-level keys plus an optional list of
``[[cells]]`` tables. Scenario keys given at the top level act as defaults
for every cell; a list value in a cell expands into a grid::

    reps = 1000
    alpha = 0.05
    seed = 20240521
    methods = ["max0", "dms0", "max05", "sum", "wzwy", "dms05"]

    [[cells]]
    scenario = "I"
    n = 200
    p = [100, 200, 300]
"""

from __future__ import annotations

import itertools
import json
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .adaptive import METHODS
from .exceptions import ConfigError
from .simulation import SCENARIOS, ScenarioConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["ExperimentPlan", "CalibrationPlan", "load_document", "parse_experiment", "parse_calibration"]

CELL_KEYS = {
    "scenario", "n", "p", "covariance", "noise", "tau_frac", "k", "sparsity_k",
    "delta", "delta_norm_sq", "rho", "block", "offdiag", "df",
}
EXPERIMENT_KEYS = {"reps", "alpha", "seed", "methods", "lambda_n", "threads", "cells"}
CALIBRATION_KEYS = {"reps", "seed", "lambda_n", "threads", "scales"}
_ALIASES = {"k": "sparsity_k", "delta": "delta_norm_sq"}
BUNDLED = ("table2", "figure1", "calibrate")


def _bundled_path(name: str):
    return resources.files("dms_changepoint") / "data" / f"{name}.toml"


def load_document(path) -> dict:
    """Read a TOML or JSON config; bundled names (``table2``, ...) are accepted."""
    p = Path(path)
    if not p.exists() and str(path) in BUNDLED:
        text, suffix = _bundled_path(str(path)).read_text(), ".toml"
    else:
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        suffix = p.suffix.lower()
    try:
        if suffix == ".json":
            doc = json.loads(text)
        else:
            doc = tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a key/value document")
    return doc


def _expand_cell(cell: dict, seed: int) -> list:
    cell = {_ALIASES.get(k, k): v for k, v in cell.items()}
    keys = sorted(cell)
    axes = [v if isinstance(v, list) else [v] for v in (cell[k] for k in keys)]
    out = []
    for combo in itertools.product(*axes):
        kw = dict(zip(keys, combo))
        name = kw.pop("scenario", None)
        if name is not None:
            if name not in SCENARIOS:
                raise ConfigError(f"unknown scenario {name!r}; expected one of {sorted(SCENARIOS)}")
            kw = {**SCENARIOS[name], **kw, "name": name}
        if "n" not in kw or "p" not in kw:
            raise ConfigError("every cell needs n and p")
        try:
            out.append(ScenarioConfig(seed=seed, **kw))
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
    return out


def _check_keys(doc: dict, allowed: set, where: str):
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ConfigError(f"unknown {where} keys: {', '.join(unknown)}")


def _positive_int(doc, key, default):
    v = doc.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ConfigError(f"{key} must be a positive integer, got {v!r}")
    return v


@dataclass
class ExperimentPlan:
    cells: list
    methods: tuple
    reps: int
    alpha: float
    seed: int
    lambda_n: int | None = None
    threads: int = 1


def parse_experiment(doc: dict, seed: int | None = None) -> ExperimentPlan:
    """Validate a simulate config and expand its grid."""
    _check_keys(doc, EXPERIMENT_KEYS | CELL_KEYS, "config")
    reps = _positive_int(doc, "reps", 1000)
    alpha = doc.get("alpha", 0.05)
    if not isinstance(alpha, (int, float)) or not 0 < alpha <= 1:
        raise ConfigError(f"alpha must lie in (0, 1], got {alpha!r}")
    base_seed = int(doc.get("seed", 0) if seed is None else seed)
    methods = tuple(doc.get("methods", METHODS))
    bad = sorted(set(methods) - set(METHODS))
    if bad:
        raise ConfigError(f"unknown methods: {', '.join(bad)}")
    lambda_n = doc.get("lambda_n")
    if lambda_n is not None:
        lambda_n = _positive_int(doc, "lambda_n", None)
    threads = _positive_int(doc, "threads", 1)
    defaults = {k: v for k, v in doc.items() if k in CELL_KEYS}
    raw_cells = doc.get("cells", [{}])
    if not isinstance(raw_cells, list) or not raw_cells:
        raise ConfigError("cells must be a non-empty list of tables")
    cells = []
    for raw in raw_cells:
        if not isinstance(raw, dict):
            raise ConfigError("each cell must be a table")
        _check_keys(raw, CELL_KEYS, "cell")
        cells.extend(_expand_cell({**defaults, **raw}, base_seed))
    return ExperimentPlan(cells, methods, reps, float(alpha), base_seed, lambda_n, threads)


@dataclass
class CalibrationPlan:
    config: ScenarioConfig
    reps: int
    lambda_n: int | None = None
    scales: str = "difference"
    threads: int = 1


def parse_calibration(doc: dict, seed: int | None = None) -> CalibrationPlan:
    """Validate a calibrate config (a single null cell)."""
    _check_keys(doc, CALIBRATION_KEYS | CELL_KEYS, "config")
    reps = _positive_int(doc, "reps", 2000)
    base_seed = int(doc.get("seed", 0) if seed is None else seed)
    cell = {k: v for k, v in doc.items() if k in CELL_KEYS}
    cells = _expand_cell(cell, base_seed)
    if len(cells) != 1:
        raise ConfigError("calibrate takes a single cell (no list values)")
    lambda_n = doc.get("lambda_n")
    if lambda_n is not None:
        lambda_n = _positive_int(doc, "lambda_n", None)
    scales = doc.get("scales", "difference")
    if scales not in ("difference", "exact"):
        raise ConfigError(f"scales must be 'difference' or 'exact', got {scales!r}")
    return CalibrationPlan(cells[0], reps, lambda_n, scales, _positive_int(doc, "threads", 1))
