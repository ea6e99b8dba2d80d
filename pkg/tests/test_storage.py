import json

import numpy as np
import pytest

from pipelines.elasticity import assemble_stiffness, schur_condense
from pipelines.errors import InputValidationError
from pipelines.meshing import MeshParams, order_nodes, triangulate
from pipelines.schemas import IterationRecord, LameParams, MatchConfig, RunManifest
from pipelines.shapes import ellipse, star
from storage.export import read_iterations_csv, read_manifest, write_iterations_csv, write_manifest
from storage.mesh_files import read_off, read_schur, write_off, write_schur
from storage.shapes import load_shape, load_source, write_shape


def _write(path, data):
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def test_shape_file_round_trip(tmp_path):
    p = star()
    write_shape(tmp_path / "star.json", p)
    loaded = load_source(tmp_path / "star.json")
    np.testing.assert_array_equal(loaded.vertices, p.vertices)


def test_clockwise_input_is_canonicalized(tmp_path, unit_square):
    path = _write(tmp_path / "cw.json", {"rings": [{"role": "outer", "points": unit_square.reversed().vertices.tolist()}]})
    assert load_source(path).is_ccw()


def test_csv_with_header(tmp_path):
    path = tmp_path / "tri.csv"
    path.write_text("x,y\n0,0\n2,0\n0,1\n", encoding="utf-8")
    shape = load_shape(path)
    assert len(shape.outers()) == 1
    assert len(shape.outers()[0]) == 3


def test_hole_roles(tmp_path):
    doc = {"rings": [
        {"role": "outer", "points": [[0, 0], [4, 0], [4, 4], [0, 4]]},
        {"role": "hole", "points": [[1, 1], [3, 1], [3, 3], [1, 3]]},
    ]}
    shape = load_shape(_write(tmp_path / "holed.json", doc))
    assert len(shape.holes()) == 1
    assert not shape.holes()[0].is_ccw()
    with pytest.raises(InputValidationError):
        load_source(tmp_path / "holed.json")


@pytest.mark.parametrize("doc", [
    {"rings": []},
    {"rings": [{"role": "outer", "points": [[0, 0], [1, 0]]}]},
    {"rings": [{"role": "inner", "points": [[0, 0], [1, 0], [0, 1]]}]},
    {"rings": [{"role": "outer", "points": [[0, 0], [1, 0], [0, 1]], "extra": 1}]},
    {"rings": [
        {"role": "outer", "points": [[0, 0], [1, 0], [0, 1]]},
        {"role": "hole", "points": [[5, 5], [6, 5], [5, 6]]},
    ]},
])
def test_invalid_documents(tmp_path, doc):
    with pytest.raises(InputValidationError):
        load_shape(_write(tmp_path / "bad.json", doc))


def test_unreadable_inputs(tmp_path):
    with pytest.raises(InputValidationError):
        load_shape(tmp_path / "missing.json")
    bad = tmp_path / "broken.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(InputValidationError):
        load_shape(bad)


def test_bow_tie_source_is_rejected(tmp_path):
    path = _write(tmp_path / "bowtie.json", {"rings": [{"points": [[0, 0], [1, 1], [1, 0], [0, 1]]}]})
    with pytest.raises(InputValidationError):
        load_source(path)


def test_off_round_trip(tmp_path):
    mesh = triangulate(ellipse(n=24), MeshParams(max_triangle_area=0.05))
    write_off(tmp_path / "mesh.off", mesh)
    again = read_off(tmp_path / "mesh.off")
    np.testing.assert_array_equal(again.nodes, mesh.nodes)
    assert again.n_triangles == mesh.n_triangles
    assert sorted(again.boundary_loop.tolist()) == list(range(24))
    assert np.all(again.triangle_areas() > 0)


def test_off_rejects_garbage(tmp_path):
    path = tmp_path / "bad.off"
    path.write_text("PLY\n", encoding="utf-8")
    with pytest.raises(InputValidationError):
        read_off(path)


def test_schur_cache_round_trip(tmp_path):
    mesh = triangulate(ellipse(n=16), MeshParams(max_triangle_area=0.1))
    S = schur_condense(assemble_stiffness(mesh, order_nodes(mesh), LameParams(mu=1.0, lam=0.5)))
    write_schur(tmp_path / "schur.bin", S)
    data = (tmp_path / "schur.bin").read_bytes()
    assert data[:4] == b"SCHR"
    assert len(data) == 16 + 8 * (2 * S.K) ** 2
    again = read_schur(tmp_path / "schur.bin")
    assert again.K == S.K
    np.testing.assert_array_equal(again.S, S.S)

    (tmp_path / "bad.bin").write_bytes(b"XXXX" + data[4:])
    with pytest.raises(InputValidationError):
        read_schur(tmp_path / "bad.bin")


def test_iterations_csv_is_byte_stable(tmp_path):
    rows = [
        IterationRecord(iter=1, area_abs=0.5, area_fraction=0.1, force_norm=0.0,
                        max_cd=1.0, mean_cd=1.0, flipped=0, solver_status="optimal"),
        IterationRecord(iter=2, area_abs=0.1 + 0.2, area_fraction=0.01, force_norm=1.5,
                        max_cd=1.25, mean_cd=1.0625, flipped=0, solver_status="max_iter"),
    ]
    write_iterations_csv(tmp_path / "a.csv", rows)
    write_iterations_csv(tmp_path / "b.csv", rows)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    parsed = read_iterations_csv(tmp_path / "a.csv")
    assert list(parsed[0]) == list(IterationRecord.CSV_FIELDS)
    assert float(parsed[1]["area_abs"]) == 0.1 + 0.2
    assert not list(tmp_path.glob("*.tmp"))


def test_manifest_round_trip(tmp_path):
    cfg = MatchConfig(alpha=3.0, distortion_bound=2.0, lame=LameParams(mu=2.0, lam=1.0))
    manifest = RunManifest(command="match", source="s.json", target="t.json", config=cfg, tool_version="0.1.0")
    write_manifest(tmp_path / "manifest.json", manifest)
    raw = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    assert raw["config"]["lame"]["lambda"] == 1.0
    assert read_manifest(tmp_path / "manifest.json").config == cfg


def test_manifest_requires_target_for_match(tmp_path):
    path = _write(tmp_path / "m.json", {
        "command": "match", "source": "s.json", "config": {}, "tool_version": "0.1.0",
    })
    with pytest.raises(InputValidationError):
        read_manifest(path)
