"""OBJ mesh and JSON report serialization, written atomically."""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .surface import SurfaceMesh


def obj_text(mesh: SurfaceMesh) -> str:
    """ASCII OBJ: vertex (n, m) is number n*(M+1) + m + 1, quads counter-ordered in (n, m)."""
    lines = [
        f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in (mesh.vertices.reshape(-1, 3) + 0.0).tolist()
    ]
    lines += ["f {} {} {} {}".format(*q) for q in (mesh.quads() + 1).tolist()]
    return "\n".join(lines) + "\n"


def read_obj(path) -> tuple[np.ndarray, np.ndarray]:
    """(vertices (V, 3), faces (F, 4) 1-based) from an OBJ written by :func:`obj_text`."""
    verts, faces = [], []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(x.split("/")[0]) for x in parts[1:]])
    return np.array(verts), np.array(faces, dtype=int)


def json_text(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
