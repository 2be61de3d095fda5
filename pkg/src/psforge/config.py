"""Job configuration: one JSON document per run.

Example::

    {
      "potentials": {"kind": "revolution", "q": 0.8, "ell": 8},
      "window": {"N": 32, "M": 32},
      "lambda": [1.0, 1.5],
      "tolerances": {"geometric": 1e-9, "algebraic": 1e-10}
    }

Normalized potentials give each of alpha, beta, p, q as a list (a table
indexed from 0), {"constant": x} or {"periodic": [x0, x1, ...]}. A constant
alpha still has alpha(0) = 0.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dalembert import GeneralizedPotentials, NormalizedPotentials, revolution_potentials

MODES = ("generate", "verify", "sweep", "oracle-compare")

DEFAULT_TOLERANCES = {
    "coplanarity_max": 1e-9,
    "opposite_edge_max": 1e-9,
    "hirota_residual_max": 1e-10,
    "unitarity_max": 1e-10,
    "frame_cross_check_max": 1e-10,
}
GROUPS = {
    "geometric": ("coplanarity_max", "opposite_edge_max"),
    "algebraic": ("hirota_residual_max", "unitarity_max", "frame_cross_check_max"),
}
DEFAULT_OUTPUT = {
    "mesh": "mesh_lambda_{lambda}.obj",
    "report": "report.json",
    "oracle": "oracle_compare.json",
    "sweep": "sweep.json",
}


class ConfigError(ValueError):
    pass


@dataclass
class JobConfig:
    mode: str
    potentials: NormalizedPotentials | GeneralizedPotentials
    N: int
    M: int
    lambdas: list
    lambda_is_list: bool
    output: dict = field(default_factory=lambda: dict(DEFAULT_OUTPUT))
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    fit_lambdas: tuple = (0.5, 1.0, 2.0)
    threads: int | None = None

    @property
    def kind(self) -> str:
        return "normalized" if isinstance(self.potentials, NormalizedPotentials) else "revolution"

    def signs(self):
        """Sign conventions (p, q) that the frames cannot see."""
        if isinstance(self.potentials, NormalizedPotentials):
            return np.sign(self.potentials.p[: self.N]), np.sign(self.potentials.q[: self.M])
        return 1.0, 1.0

    def mesh_path(self, lam: float) -> str:
        return self.output["mesh"].format(**{"lambda": repr(float(lam))})


def _number(x, what):
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        raise ConfigError(f"{what} must be a finite number, got {x!r}")
    return float(x)


def _table(entry, length, what, pin_zero=False):
    if isinstance(entry, list):
        vals = [_number(v, what) for v in entry]
        if len(vals) < length:
            raise ConfigError(f"{what} table has {len(vals)} entries, window needs {length}")
        return vals[:length]
    if isinstance(entry, dict) and set(entry) == {"constant"}:
        vals = [_number(entry["constant"], what)] * length
        if pin_zero and length:
            vals[0] = 0.0
        return vals
    if isinstance(entry, dict) and set(entry) == {"periodic"}:
        period = entry["periodic"]
        if not isinstance(period, list) or not period:
            raise ConfigError(f"{what}.periodic must be a non-empty list")
        period = [_number(v, what) for v in period]
        return [period[i % len(period)] for i in range(length)]
    raise ConfigError(f"{what} must be a list, {{'constant': x}} or {{'periodic': [...]}}")


def _potentials(entry, N, M):
    if not isinstance(entry, dict) or "kind" not in entry:
        raise ConfigError("potentials must be an object with a 'kind'")
    kind = entry["kind"]
    if kind == "normalized":
        missing = {"alpha", "beta", "p", "q"} - set(entry)
        if missing:
            raise ConfigError(f"normalized potentials missing {sorted(missing)}")
        try:
            return NormalizedPotentials(
                _table(entry["alpha"], N, "alpha", pin_zero=True),
                _table(entry["beta"], M, "beta"),
                _table(entry["p"], N, "p"),
                _table(entry["q"], M, "q"),
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc
    if kind == "revolution":
        q = _number(entry.get("q"), "revolution q")
        ell = entry.get("ell")
        if isinstance(ell, bool) or not isinstance(ell, int) or ell < 1:
            raise ConfigError(f"revolution ell must be a positive integer, got {ell!r}")
        if not 0 < abs(q / 2) < 1:
            raise ConfigError("revolution q violates 0 < |q/2| < 1")
        return revolution_potentials(q, ell)
    raise ConfigError(f"unknown potentials kind {kind!r}")


def _window(entry):
    if isinstance(entry, dict):
        N, M = entry.get("N"), entry.get("M")
    elif isinstance(entry, list) and len(entry) == 2:
        N, M = entry
    else:
        raise ConfigError("window must be {'N': int, 'M': int} or [N, M]")
    for v in (N, M):
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise ConfigError(f"window sizes must be positive integers, got {entry!r}")
    return N, M


def parse_config(doc: dict, mode: str) -> JobConfig:
    if mode not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; expected one of {MODES}")
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    if "mode" in doc and doc["mode"] != mode:
        raise ConfigError(f"config is for mode {doc['mode']!r}, invoked as {mode!r}")
    N, M = _window(doc.get("window"))
    pot = _potentials(doc.get("potentials"), N, M)

    raw = doc.get("lambda", 1.0)
    is_list = isinstance(raw, list)
    lams = [_number(l, "lambda") for l in (raw if is_list else [raw])]
    if not lams or any(l <= 0 for l in lams):
        raise ConfigError("lambda values must be positive")
    if mode == "sweep" and not is_list:
        raise ConfigError("sweep needs a list of lambda values")

    tol = dict(DEFAULT_TOLERANCES)
    for key, val in (doc.get("tolerances") or {}).items():
        if key in GROUPS:
            for k in GROUPS[key]:
                tol[k] = _number(val, f"tolerance {key}")
        elif key in tol:
            tol[key] = _number(val, f"tolerance {key}")
        else:
            raise ConfigError(f"unknown tolerance {key!r}")

    output = dict(DEFAULT_OUTPUT)
    for key, val in (doc.get("output") or {}).items():
        if key not in output or not isinstance(val, str):
            raise ConfigError(f"bad output entry {key!r}")
        output[key] = val

    fit = doc.get("fit_lambdas", [0.5, 1.0, 2.0])
    if not isinstance(fit, list) or len(set(fit)) < 2:
        raise ConfigError("fit_lambdas needs at least two distinct values")
    fit = tuple(_number(l, "fit_lambdas") for l in fit)
    if any(l <= 0 for l in fit):
        raise ConfigError("fit_lambdas must be positive")

    threads = doc.get("threads")
    if threads is not None and (isinstance(threads, bool) or not isinstance(threads, int) or threads < 1):
        raise ConfigError("threads must be a positive integer")

    if mode == "oracle-compare" and not isinstance(pot, NormalizedPotentials):
        raise ConfigError("oracle-compare needs normalized potentials")
    return JobConfig(mode, pot, N, M, lams, is_list, output, tol, fit, threads)


def load_config(path, mode: str) -> JobConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(doc, mode)
