import logging

import numpy as np
import pytest

from pipelines.errors import InputValidationError, MeshFailure
from pipelines.geometry import Polygon, signed_area
from pipelines.meshing import (
    MeshParams,
    TriMesh,
    boundary_loop_from_triangles,
    mesh_quality,
    order_nodes,
    triangulate,
)
from pipelines.shapes import ellipse, star


def test_triangulate_keeps_boundary_vertices_first(sampled_square):
    mesh = triangulate(sampled_square, MeshParams(max_triangle_area=0.01))
    K = len(sampled_square)
    np.testing.assert_array_equal(mesh.nodes[:K], sampled_square.vertices)
    np.testing.assert_array_equal(mesh.boundary_loop, np.arange(K))
    assert mesh.n_nodes > K


def test_triangles_are_ccw_and_cover_the_polygon():
    p = ellipse()
    mesh = triangulate(p, MeshParams(max_triangle_area=0.02))
    areas = mesh.triangle_areas()
    assert np.all(areas > 0)
    assert areas.sum() == pytest.approx(signed_area(p), rel=1e-9)
    assert areas.max() <= 0.02 * (1 + 1e-9)


def test_quality_bound_is_met_for_convex_input():
    mesh = triangulate(ellipse(), MeshParams(max_triangle_area=0.01, min_angle_deg=20.0))
    q = mesh_quality(mesh)
    assert q.min_angle_deg >= 20.0 - 1e-6
    assert q.n_boundary == 64
    assert q.n_triangles == mesh.n_triangles


def test_star_mesh_is_valid():
    p = star()
    mesh = triangulate(p, MeshParams(max_triangle_area=0.005))
    assert np.all(mesh.triangle_areas() > 0)
    assert mesh.boundary_polygon().vertices.shape == p.vertices.shape


def test_rejects_clockwise_and_self_intersecting(unit_square):
    with pytest.raises(InputValidationError):
        triangulate(unit_square.reversed())
    with pytest.raises(InputValidationError):
        triangulate(Polygon([(0, 0), (1, 1), (1, 0), (0, 1)]))


def test_sharp_input_angle_is_reported(caplog):
    spike = Polygon([(0.0, 0.0), (1.0, 0.0), (1.0, 0.05)])
    with caplog.at_level(logging.WARNING, logger="pipelines.meshing"):
        triangulate(spike, MeshParams(max_triangle_area=0.01))
    assert "angle shortfall" in caplog.text
    with pytest.raises(MeshFailure) as err:
        triangulate(spike, MeshParams(max_triangle_area=0.01), strict=True)
    assert err.value.region is not None


def test_order_nodes_puts_boundary_first(sampled_square):
    mesh = triangulate(sampled_square, MeshParams(max_triangle_area=0.01))
    order = order_nodes(mesh)
    assert order.K == len(sampled_square)
    np.testing.assert_array_equal(order.perm[mesh.boundary_loop], np.arange(order.K))
    np.testing.assert_array_equal(order.system_points(mesh)[:order.K], sampled_square.vertices)
    np.testing.assert_array_equal(order.perm[order.inverse], np.arange(order.N))


def test_boundary_loop_from_triangles():
    nodes = np.array([(0, 0), (1, 0), (1, 1), (0, 1)], dtype=float)
    loop = boundary_loop_from_triangles(nodes, np.array([[0, 1, 2], [0, 2, 3]]))
    np.testing.assert_array_equal(loop, [0, 1, 2, 3])
    # clockwise faces still give a counter-clockwise loop
    loop = boundary_loop_from_triangles(nodes, np.array([[0, 2, 1], [0, 3, 2]]))
    assert signed_area(Polygon(nodes[loop])) > 0


def test_boundary_loop_rejects_two_components():
    nodes = np.array([(0, 0), (1, 0), (0, 1), (5, 5), (6, 5), (5, 6)], dtype=float)
    with pytest.raises(InputValidationError):
        boundary_loop_from_triangles(nodes, np.array([[0, 1, 2], [3, 4, 5]]))


def test_trimesh_rejects_bad_indices():
    with pytest.raises(ValueError):
        TriMesh(np.zeros((3, 2)), np.array([[0, 1, 3]]), np.arange(3))
