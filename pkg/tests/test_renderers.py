import numpy as np
import pytest

from app.renderers import arrow_scale, render_mesh, render_overlay
from pipelines.geometry import PolygonSet
from pipelines.meshing import MeshParams, triangulate
from pipelines.shapes import box, ellipse


def test_overlay_is_deterministic_and_labels_scale():
    source = ellipse(n=16)
    target = PolygonSet.from_polygon(box(-1.0, -0.4, 1.0, 0.4))
    forces = np.tile([0.0, 1.0], (16, 1))
    first = render_overlay(source, target, forces, title="t")
    assert first == render_overlay(source, target, forces, title="t")
    assert first.startswith("<svg") and first.rstrip().endswith("</svg>")
    assert "arrow scale" in first


def test_arrow_scale_caps_longest_arrow():
    vectors = np.array([[3.0, 4.0], [0.0, 1.0]])
    assert arrow_scale(vectors, 10.0) * 5.0 == pytest.approx(0.12 * 10.0)
    assert arrow_scale(np.zeros((3, 2)), 10.0) == 0.0


def test_mesh_svg_has_one_path():
    mesh = triangulate(ellipse(n=12), MeshParams(max_triangle_area=0.1))
    svg = render_mesh(mesh.nodes, mesh.triangles, title="mesh")
    assert svg.count("<path") == 1
