import numpy as np
import pytest
from conftest import scanline_area

from pipelines.errors import DegenerateVertex
from pipelines.geometry import (
    BoolOp,
    Polygon,
    PolygonSet,
    Ring,
    centroid,
    clip,
    interior_angles,
    is_simple,
    outward_normals,
    set_area,
    signed_area,
    symdiff_area,
    rotate_about_centroid,
)
from pipelines.shapes import box, random_star_shaped, regular_polygon


def test_signed_area_orientation(unit_square):
    assert signed_area(unit_square) == pytest.approx(1.0)
    assert signed_area(unit_square.reversed()) == pytest.approx(-1.0)
    assert unit_square.is_ccw()
    assert not unit_square.cw().is_ccw()


def test_signed_area_is_translation_invariant(rng):
    p = random_star_shaped(rng, n=40)
    far = p.translated((1e4, -3e4))
    assert signed_area(far) == pytest.approx(signed_area(p), rel=1e-9)


def test_from_points_drops_closing_vertex_and_duplicates():
    p = Polygon.from_points([(0, 0), (1, 0), (1, 0), (1, 1), (0, 1), (0, 0)])
    assert len(p) == 4


def test_polygon_rejects_bad_vertices():
    with pytest.raises(ValueError):
        Polygon([(0, 0), (0, 0), (1, 1)])
    with pytest.raises(ValueError):
        Polygon([(0, 0), (1, np.nan), (1, 1)])
    with pytest.raises(ValueError):
        Polygon([0.0, 1.0, 2.0])


def test_vertices_are_read_only(unit_square):
    with pytest.raises(ValueError):
        unit_square.vertices[0, 0] = 5.0


@pytest.mark.parametrize(
    "op, expected",
    [
        (BoolOp.intersection, 0.25),
        (BoolOp.union, 1.75),
        (BoolOp.difference, 0.75),
        (BoolOp.symmetric_difference, 1.5),
    ],
)
def test_clip_overlapping_squares(unit_square, op, expected):
    a = PolygonSet.from_polygon(unit_square)
    b = PolygonSet.from_polygon(box(0.5, 0.5, 1.5, 1.5))
    assert set_area(clip(a, b, op)) == pytest.approx(expected, rel=1e-9)


def test_clip_output_is_canonical(unit_square):
    a = PolygonSet.from_polygon(unit_square)
    b = PolygonSet.from_polygon(box(0.25, 0.25, 0.75, 0.75))
    ring = clip(a, b, "difference")
    assert len(ring.outers()) == 1 and len(ring.holes()) == 1
    assert all(p.is_ccw() for p in ring.outers())
    assert all(not p.is_ccw() for p in ring.holes())
    assert set_area(ring) == pytest.approx(0.75)


def test_symdiff_of_identical_shapes_is_zero(rng):
    p = PolygonSet.from_polygon(random_star_shaped(rng))
    assert symdiff_area(p, p) == pytest.approx(0.0, abs=1e-12)


def test_symdiff_is_symmetric(rng):
    a = PolygonSet.from_polygon(random_star_shaped(rng))
    b = PolygonSet.from_polygon(random_star_shaped(rng, center=(0.2, -0.1)))
    assert symdiff_area(a, b) == pytest.approx(symdiff_area(b, a), rel=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_symdiff_matches_scanline_reference(seed):
    rng = np.random.default_rng(seed)
    a = PolygonSet.from_polygon(random_star_shaped(rng, n=30))
    b = PolygonSet.from_polygon(random_star_shaped(rng, n=30, center=(0.3, 0.1)))
    reference = scanline_area(a, b)
    assert symdiff_area(a, b) == pytest.approx(reference, abs=1e-3 * (set_area(a) + set_area(b)))


def test_target_with_hole():
    shape = PolygonSet((
        Ring(box(0, 0, 4, 4), "outer"),
        Ring(box(1, 1, 3, 3).cw(), "hole"),
    ))
    assert set_area(shape) == pytest.approx(12.0)
    assert symdiff_area(shape, shape) == pytest.approx(0.0, abs=1e-12)
    filled = PolygonSet.from_polygon(box(0, 0, 4, 4))
    assert symdiff_area(shape, filled) == pytest.approx(4.0)


def test_canonical_is_idempotent(unit_square):
    s = PolygonSet((Ring(unit_square.reversed(), "outer"),))
    once = s.canonical()
    twice = once.canonical()
    assert once.outers()[0].is_ccw()
    np.testing.assert_array_equal(once.outers()[0].vertices, twice.outers()[0].vertices)


def test_outward_normals_of_square(unit_square):
    n = outward_normals(unit_square)
    s = 1.0 / np.sqrt(2.0)
    np.testing.assert_allclose(n, [[-s, -s], [s, -s], [s, s], [-s, s]], atol=1e-12)
    # a clockwise ring gets the same outward directions
    np.testing.assert_allclose(outward_normals(unit_square.reversed()), n[::-1], atol=1e-12)


def test_outward_normals_point_outward(rng):
    p = random_star_shaped(rng, n=40)
    n = outward_normals(p)
    np.testing.assert_allclose(np.linalg.norm(n, axis=1), 1.0)
    moved = PolygonSet.from_polygon(Polygon(p.vertices + 1e-3 * n))
    assert set_area(moved) > abs(signed_area(p))


def test_antiparallel_edges_raise():
    p = Polygon([(0, 0), (2, 0), (1, 0), (1, 1)])
    with pytest.raises(DegenerateVertex) as err:
        outward_normals(p)
    assert err.value.index == 1


def test_is_simple():
    assert is_simple(regular_polygon(7))
    assert not is_simple(Polygon([(0, 0), (1, 1), (1, 0), (0, 1)]))


def test_interior_angles_of_square(unit_square):
    np.testing.assert_allclose(interior_angles(unit_square), 90.0)
    np.testing.assert_allclose(interior_angles(unit_square.reversed()), 90.0)


def test_rotation_preserves_area_and_centroid(rng):
    p = random_star_shaped(rng, n=25, center=(2.0, 1.0))
    q = rotate_about_centroid(p, 33.0)
    assert signed_area(q) == pytest.approx(signed_area(p), rel=1e-9)
    np.testing.assert_allclose(centroid(q), centroid(p), atol=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_symdiff_triangle_inequality(seed):
    rng = np.random.default_rng(100 + seed)
    a, b, c = (
        PolygonSet.from_polygon(random_star_shaped(rng, center=rng.uniform(-0.3, 0.3, 2)))
        for _ in range(3)
    )
    assert symdiff_area(a, c) <= symdiff_area(a, b) + symdiff_area(b, c) + 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_inclusion_exclusion(seed):
    rng = np.random.default_rng(200 + seed)
    a = PolygonSet.from_polygon(random_star_shaped(rng))
    b = PolygonSet.from_polygon(random_star_shaped(rng, center=rng.uniform(-0.4, 0.4, 2)))
    union = set_area(clip(a, b, BoolOp.union))
    inter = set_area(clip(a, b, BoolOp.intersection))
    assert union == pytest.approx(set_area(a) + set_area(b) - inter, abs=1e-8)
    assert symdiff_area(a, b) == pytest.approx(union - inter, abs=1e-8)


def test_symdiff_is_translation_invariant(rng):
    a = PolygonSet.from_polygon(random_star_shaped(rng))
    b = PolygonSet.from_polygon(random_star_shaped(rng, center=(0.25, -0.15)))
    moved = symdiff_area(a.translated((3.0, -2.0)), b.translated((3.0, -2.0)))
    assert moved == pytest.approx(symdiff_area(a, b), rel=1e-7)


def test_reclipping_against_covering_window_changes_nothing(rng):
    a = PolygonSet.from_polygon(random_star_shaped(rng))
    b = PolygonSet.from_polygon(random_star_shaped(rng, center=(0.3, 0.1)))
    region = clip(a, b, BoolOp.symmetric_difference)
    window = PolygonSet.from_polygon(box(-10.0, -10.0, 10.0, 10.0))
    again = clip(region, window, BoolOp.intersection)
    assert set_area(again) == pytest.approx(set_area(region), abs=1e-6)
