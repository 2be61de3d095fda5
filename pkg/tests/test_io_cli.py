import json

import numpy as np
import pytest

from psforge import io
from psforge.cli import main
from psforge.config import ConfigError, parse_config
from psforge.dalembert import NormalizedPotentials
from psforge.surface import SurfaceMesh, build_mesh

NORMALIZED = {
    "window": {"N": 3, "M": 2},
    "potentials": {
        "kind": "normalized",
        "alpha": {"constant": 0.3},
        "beta": [0.1, -0.2],
        "p": {"periodic": [1.0, -0.7]},
        "q": {"constant": 0.9},
    },
    "lambda": 1.0,
}
REVOLUTION = {"window": [4, 4], "potentials": {"kind": "revolution", "q": 0.8, "ell": 8}, "lambda": [1.0, 1.5]}


def write_config(tmp_path, doc, name="job.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


# -- OBJ ----------------------------------------------------------------------


def test_obj_format():
    V = np.array([[[0, 0, 0], [0, 1, 0]], [[1, 0, -0.0], [1, 1, 0.5]]], dtype=float)
    text = io.obj_text(SurfaceMesh(1, 1, 1.0, V))
    assert text.splitlines() == ["v 0 0 0", "v 0 1 0", "v 1 0 0", "v 1 1 0.5", "f 1 3 4 2"]
    assert text.endswith("\n")


def test_obj_round_trip(tmp_path):
    mesh = build_mesh(NormalizedPotentials.constant(3, 2, 1.0, 0.8, alpha=0.2), 3, 2, 1.3)
    io.write_atomic(tmp_path / "m.obj", io.obj_text(mesh))
    verts, faces = io.read_obj(tmp_path / "m.obj")
    np.testing.assert_array_equal(verts, mesh.vertices.reshape(-1, 3))
    assert faces.shape == (6, 4) and faces.min() == 1 and faces.max() == 12


def test_write_atomic_leaves_no_temp(tmp_path):
    io.write_atomic(tmp_path / "sub" / "a.json", io.json_text({"b": 1, "a": 2}))
    assert [p.name for p in (tmp_path / "sub").iterdir()] == ["a.json"]
    assert (tmp_path / "sub" / "a.json").read_text() == '{\n  "a": 2,\n  "b": 1\n}\n'


# -- config -------------------------------------------------------------------


def test_parse_config_tables():
    cfg = parse_config(NORMALIZED, "generate")
    assert cfg.potentials.alpha.tolist() == [0.0, 0.3, 0.3]
    assert cfg.potentials.p.tolist() == [1.0, -0.7, 1.0]
    assert cfg.mesh_path(1.0) == "mesh_lambda_1.0.obj"
    assert cfg.kind == "normalized"


@pytest.mark.parametrize(
    "patch, mode",
    [
        ({"window": {"N": 0, "M": 2}}, "generate"),
        ({"window": [3]}, "generate"),
        ({"lambda": -1.0}, "generate"),
        ({"lambda": 1.0}, "sweep"),
        ({"potentials": {"kind": "revolution", "q": 2.5, "ell": 8}}, "generate"),
        ({"potentials": {"kind": "revolution", "q": 0.8, "ell": 8}}, "oracle-compare"),
        ({"potentials": {"kind": "spiral"}}, "generate"),
        ({"tolerances": {"bogus": 1}}, "verify"),
        ({"fit_lambdas": [1.0]}, "verify"),
        ({"threads": 0}, "generate"),
        ({"mode": "verify"}, "generate"),
    ],
)
def test_parse_config_rejects(patch, mode):
    with pytest.raises(ConfigError):
        parse_config({**NORMALIZED, **patch}, mode)


def test_parse_config_rejects_bad_potential_values():
    doc = json.loads(json.dumps(NORMALIZED))
    doc["potentials"]["q"] = [0.9, 2.0]
    with pytest.raises(ConfigError):
        parse_config(doc, "generate")
    doc["potentials"]["q"] = [0.9]
    with pytest.raises(ConfigError):
        parse_config(doc, "generate")


def test_tolerance_groups():
    cfg = parse_config({**NORMALIZED, "tolerances": {"geometric": 1e-6, "unitarity_max": 1e-8}}, "verify")
    assert cfg.tolerances["coplanarity_max"] == cfg.tolerances["opposite_edge_max"] == 1e-6
    assert cfg.tolerances["unitarity_max"] == 1e-8
    assert cfg.tolerances["hirota_residual_max"] == 1e-10


# -- CLI ----------------------------------------------------------------------


def test_generate_one_cell(tmp_path):
    doc = {**NORMALIZED, "window": {"N": 1, "M": 1}}
    assert main(["generate", "--config", write_config(tmp_path, doc), "--out", str(tmp_path / "o")]) == 0
    verts, faces = io.read_obj(tmp_path / "o" / "mesh_lambda_1.0.obj")
    assert verts.shape == (4, 3)
    np.testing.assert_array_equal(faces, [[1, 3, 4, 2]])
    np.testing.assert_array_equal(verts[0], [0, 0, 0])


def test_generate_is_deterministic(tmp_path, monkeypatch):
    cfg = write_config(tmp_path, REVOLUTION)
    assert main(["generate", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    monkeypatch.setenv("PSFORGE_THREADS", "4")
    assert main(["generate", "--config", cfg, "--out", str(tmp_path / "b")]) == 0
    for name in ("mesh_lambda_1.0.obj", "mesh_lambda_1.5.obj"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_verify_passes(tmp_path):
    assert main(["verify", "--config", write_config(tmp_path, REVOLUTION), "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["passed"] and report["failed"] == []
    assert report["potentials"] == "revolution"
    assert len(report["per_lambda"]) == 2
    assert report["coplanarity_max"] <= 1e-9


def test_verify_normalized_passes(tmp_path):
    assert main(["verify", "--config", write_config(tmp_path, NORMALIZED), "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["hirota_residual_max"] <= 1e-10


def test_verify_residual_failure_exit_1(tmp_path):
    doc = {**REVOLUTION, "tolerances": {"opposite_edge_max": 1e-300}}
    assert main(["verify", "--config", write_config(tmp_path, doc), "--out", str(tmp_path)]) == 1
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["failed"] == ["opposite_edge_max"] and not report["passed"]


def test_config_error_exit_2(tmp_path):
    assert main(["generate", "--config", write_config(tmp_path, {"window": [1, 1]})]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["generate", "--config", str(bad)]) == 2


def test_io_error_exit_3(tmp_path):
    assert main(["generate", "--config", str(tmp_path / "missing.json")]) == 3
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["generate", "--config", write_config(tmp_path, REVOLUTION), "--out", str(blocker / "sub")]) == 3


def test_sweep_manifest(tmp_path):
    assert main(["sweep", "--config", write_config(tmp_path, REVOLUTION), "--out", str(tmp_path)]) == 0
    manifest = json.loads((tmp_path / "sweep.json").read_text())
    assert [e["lambda"] for e in manifest["members"]] == [1.0, 1.5]
    for e in manifest["members"]:
        assert (tmp_path / e["mesh"]).exists()


def test_oracle_compare(tmp_path):
    doc = {**NORMALIZED, "lambda": [0.5, 2.0]}
    assert main(["oracle-compare", "--config", write_config(tmp_path, doc), "--out", str(tmp_path)]) == 0
    out = json.loads((tmp_path / "oracle_compare.json").read_text())
    assert out["frame_max_deviation"] <= 1e-9
    assert out["vertex_max_deviation"] <= 1e-8
    assert np.array(out["per_lambda"][0]["vertex_cells"]).shape == (4, 3)


def test_unknown_mode_exits(tmp_path):
    with pytest.raises(SystemExit):
        main(["render", "--config", "x"])
