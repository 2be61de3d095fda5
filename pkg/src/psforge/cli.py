"""``psforge <mode> --config job.json [--out DIR]``

Exit status: 0 success, 1 a verification residual exceeded its tolerance,
2 invalid configuration, 3 I/O failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .config import MODES, ConfigError, JobConfig, load_config
from .dalembert import FrameGrid, default_threads
from .surface import HirotaOracle, hirota_residual, mesh_from_frames, verify_frames

log = logging.getLogger("psforge")

EXIT_OK, EXIT_RESIDUAL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


def _threads(cfg: JobConfig) -> int:
    cap = default_threads()
    return min(cfg.threads, cap) if cfg.threads else cap


def _generate(cfg, grid):
    files = {}
    for lam in cfg.lambdas:
        files[cfg.mesh_path(lam)] = io.obj_text(mesh_from_frames(grid, lam))
    return files, EXIT_OK


def _sweep(cfg, grid):
    files, _ = _generate(cfg, grid)
    manifest = {
        "window": {"N": cfg.N, "M": cfg.M},
        "members": [{"lambda": lam, "mesh": cfg.mesh_path(lam)} for lam in cfg.lambdas],
    }
    files[cfg.output["sweep"]] = io.json_text(manifest)
    return files, EXIT_OK


def _verify(cfg, grid):
    p_sign, q_sign = cfg.signs()
    per_lambda = []
    maxima = dict.fromkeys(cfg.tolerances, 0.0)
    for lam in cfg.lambdas:
        _, report = verify_frames(grid, lam, cfg.fit_lambdas, p_sign=p_sign, q_sign=q_sign)
        entry = {"lambda": lam, **report.to_dict()}
        per_lambda.append(entry)
        for k in maxima:
            maxima[k] = max(maxima[k], entry[k])
    failed = sorted(k for k, v in maxima.items() if not v <= cfg.tolerances[k])
    payload = {
        **maxima,
        "failed": failed,
        "passed": not failed,
        "tolerances": cfg.tolerances,
        "window": {"N": cfg.N, "M": cfg.M},
        "potentials": cfg.kind,
        "per_lambda": per_lambda,
    }
    for k in failed:
        log.error("%s = %.3e exceeds tolerance %.1e", k, maxima[k], cfg.tolerances[k])
    return {cfg.output["report"]: io.json_text(payload)}, EXIT_RESIDUAL if failed else EXIT_OK


def _oracle_compare(cfg, grid):
    oracle = HirotaOracle(cfg.potentials, cfg.N, cfg.M)
    per_lambda = []
    for lam in cfg.lambdas:
        frame_dev = np.zeros((cfg.N + 1, cfg.M + 1))
        for n in range(cfg.N + 1):
            for m in range(cfg.M + 1):
                frame_dev[n, m] = np.max(np.abs(grid.evaluate(n, m, lam) - oracle.evaluate(n, m, lam)))
        vert_dev = np.max(np.abs(mesh_from_frames(grid, lam).vertices - oracle.mesh(lam).vertices), axis=-1)
        per_lambda.append(
            {
                "lambda": lam,
                "frame_max_deviation": float(frame_dev.max()),
                "vertex_max_deviation": float(vert_dev.max()),
                "frame_cells": frame_dev.tolist(),
                "vertex_cells": vert_dev.tolist(),
            }
        )
    payload = {
        "frame_max_deviation": max(e["frame_max_deviation"] for e in per_lambda),
        "vertex_max_deviation": max(e["vertex_max_deviation"] for e in per_lambda),
        "oracle_hirota_residual_max": hirota_residual(oracle.grid),
        "window": {"N": cfg.N, "M": cfg.M},
        "per_lambda": per_lambda,
    }
    return {cfg.output["oracle"]: io.json_text(payload)}, EXIT_OK


HANDLERS = {
    "generate": _generate,
    "sweep": _sweep,
    "verify": _verify,
    "oracle-compare": _oracle_compare,
}


def run(cfg: JobConfig, out_dir: Path) -> int:
    grid = FrameGrid(cfg.potentials, cfg.N, cfg.M, threads=_threads(cfg))
    files, status = HANDLERS[cfg.mode](cfg, grid)
    for name, text in files.items():
        io.write_atomic(out_dir / name, text)
        log.info("wrote %s", out_dir / name)
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="psforge", description=__doc__.splitlines()[0])
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", required=True, help="JSON job configuration")
    parser.add_argument("--out", default=".", help="output directory (default: .)")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")

    try:
        cfg = load_config(args.config, args.mode)
    except ConfigError as exc:
        log.error("invalid config: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_IO
    try:
        return run(cfg, Path(args.out))
    except OSError as exc:
        log.error("I/O failure: %s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
