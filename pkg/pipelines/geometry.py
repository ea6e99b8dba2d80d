"""
pipelines/geometry.py

Polygon representation, Boolean clipping, signed areas and vertex normals.

Boolean overlays are delegated to shapely (GEOS OverlayNG, a sweep-based
clipper). Coordinates are snapped to a fixed grid of 2**-31 of the joint
bounding-box diagonal before every overlay, so the sweep runs exactly on
the grid. Rings that are not simple are filled with the even-odd rule.

Public API
----------
signed_area, clip, set_area, symdiff_area, outward_normals, is_simple
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from functools import reduce
from typing import Iterable, Literal, Sequence

import numpy as np
import shapely
from shapely import affinity
from shapely.errors import GEOSException
from shapely.geometry import LinearRing
from shapely.geometry import MultiPolygon as ShapelyMultiPolygon
from shapely.geometry import Polygon as ShapelyPolygon
from shapely.geometry.polygon import orient

from pipelines.errors import ClipDegeneracy, DegenerateVertex

logger = logging.getLogger(__name__)

SNAP_EXPONENT: int = 31
ANTIPARALLEL_TOLERANCE: float = 1e-9

RingRole = Literal["outer", "hole"]


class BoolOp(str, Enum):
    """Boolean combination computed by :func:`clip`."""
    intersection = "intersection"
    union = "union"
    difference = "difference"
    symmetric_difference = "symmetric_difference"


_OVERLAYS = {
    BoolOp.intersection: shapely.intersection,
    BoolOp.union: shapely.union,
    BoolOp.difference: shapely.difference,
    BoolOp.symmetric_difference: shapely.symmetric_difference,
}


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Polygon:
    """Closed ring of 2D vertices; the last vertex connects back to the first."""

    vertices: np.ndarray

    def __post_init__(self) -> None:
        pts = np.array(self.vertices, dtype=float, copy=True)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"Polygon vertices must have shape (n, 2), got {pts.shape}.")
        if not np.all(np.isfinite(pts)):
            raise ValueError("Polygon vertices must be finite.")
        if len(pts) > 1 and np.any(np.all(pts == np.roll(pts, 1, axis=0), axis=1)):
            raise ValueError("Polygon has repeated consecutive vertices.")
        pts.setflags(write=False)
        object.__setattr__(self, "vertices", pts)

    @classmethod
    def from_points(cls, points: Iterable[Sequence[float]]) -> "Polygon":
        """Build a ring, dropping an explicit closing vertex and consecutive duplicates."""
        pts = np.asarray(list(points), dtype=float).reshape(-1, 2)
        if len(pts) > 1 and np.array_equal(pts[0], pts[-1]):
            pts = pts[:-1]
        if len(pts) > 1:
            keep = np.any(pts != np.roll(pts, 1, axis=0), axis=1)
            pts = pts[keep] if keep.any() else pts[:1]
        return cls(pts)

    def __len__(self) -> int:
        return len(self.vertices)

    def is_ccw(self) -> bool:
        return signed_area(self) > 0.0

    def reversed(self) -> "Polygon":
        return Polygon(self.vertices[::-1])

    def ccw(self) -> "Polygon":
        return self if signed_area(self) >= 0.0 else self.reversed()

    def cw(self) -> "Polygon":
        return self if signed_area(self) <= 0.0 else self.reversed()

    def translated(self, offset: Sequence[float]) -> "Polygon":
        return Polygon(self.vertices + np.asarray(offset, dtype=float))

    def bounds(self) -> tuple[float, float, float, float]:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    def to_shapely(self) -> ShapelyPolygon:
        if len(self) < 3:
            return ShapelyPolygon()
        return ShapelyPolygon(self.vertices)


@dataclass(frozen=True)
class Ring:
    polygon: Polygon
    role: RingRole


@dataclass(frozen=True, eq=False)
class PolygonSet:
    """Region bounded by outer rings (CCW) and holes (CW)."""

    rings: tuple[Ring, ...] = ()

    @classmethod
    def empty(cls) -> "PolygonSet":
        return cls(())

    @classmethod
    def from_polygon(cls, polygon: Polygon) -> "PolygonSet":
        return cls((Ring(polygon.ccw(), "outer"),))

    @classmethod
    def from_shapely(cls, geom) -> "PolygonSet":
        rings: list[Ring] = []
        for part in _polygon_parts(geom):
            part = orient(part, sign=1.0)
            outer = Polygon.from_points(part.exterior.coords)
            if len(outer) < 3:
                continue
            rings.append(Ring(outer, "outer"))
            for interior in part.interiors:
                hole = Polygon.from_points(interior.coords)
                if len(hole) >= 3:
                    rings.append(Ring(hole.cw(), "hole"))
        return cls(tuple(rings))

    @property
    def is_empty(self) -> bool:
        return not self.rings

    def outers(self) -> list[Polygon]:
        return [r.polygon for r in self.rings if r.role == "outer"]

    def holes(self) -> list[Polygon]:
        return [r.polygon for r in self.rings if r.role == "hole"]

    def canonical(self) -> "PolygonSet":
        return PolygonSet(tuple(
            Ring(r.polygon.ccw() if r.role == "outer" else r.polygon.cw(), r.role)
            for r in self.rings
        ))

    def translated(self, offset: Sequence[float]) -> "PolygonSet":
        return PolygonSet(tuple(Ring(r.polygon.translated(offset), r.role) for r in self.rings))

    def bounds(self) -> tuple[float, float, float, float] | None:
        if self.is_empty:
            return None
        pts = np.vstack([r.polygon.vertices for r in self.rings])
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    def to_shapely(self, grid_size: float | None = None):
        """Even-odd assembly of all rings into one valid polygonal geometry."""
        parts = [_as_valid(r.polygon.to_shapely()) for r in self.rings if len(r.polygon) >= 3]
        if not parts:
            return ShapelyPolygon()
        if len(parts) == 1:
            return parts[0]
        return reduce(lambda a, b: shapely.symmetric_difference(a, b, grid_size=grid_size), parts)


def _polygon_parts(geom) -> list[ShapelyPolygon]:
    if geom is None or geom.is_empty:
        return []
    if isinstance(geom, ShapelyPolygon):
        return [geom]
    if hasattr(geom, "geoms"):
        out: list[ShapelyPolygon] = []
        for g in geom.geoms:
            out.extend(_polygon_parts(g))
        return out
    return []


def _as_valid(geom):
    """Repair a self-intersecting ring (even-odd fill) and keep polygonal parts only."""
    if geom.is_empty or geom.is_valid:
        return geom
    parts = _polygon_parts(shapely.make_valid(geom))
    if not parts:
        return ShapelyPolygon()
    if len(parts) == 1:
        return parts[0]
    return ShapelyMultiPolygon(parts)


# ---------------------------------------------------------------------------
# Bounding boxes and snapping
# ---------------------------------------------------------------------------


def joint_bounds(*sets: PolygonSet | Polygon) -> tuple[float, float, float, float] | None:
    boxes = []
    for s in sets:
        b = s.bounds() if isinstance(s, PolygonSet) else (s.bounds() if len(s) else None)
        if b is not None:
            boxes.append(b)
    if not boxes:
        return None
    arr = np.asarray(boxes)
    return float(arr[:, 0].min()), float(arr[:, 1].min()), float(arr[:, 2].max()), float(arr[:, 3].max())


def joint_diagonal(*sets: PolygonSet | Polygon) -> float:
    b = joint_bounds(*sets)
    if b is None:
        return 0.0
    return float(np.hypot(b[2] - b[0], b[3] - b[1]))


def snap_grid(*sets: PolygonSet | Polygon) -> float:
    """Snapping quantum: 2**-31 of the joint bounding-box diagonal."""
    return joint_diagonal(*sets) * 2.0 ** -SNAP_EXPONENT


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def signed_area(p: Polygon) -> float:
    """Shoelace (divergence theorem) area; positive iff the ring is CCW."""
    v = p.vertices
    if len(v) < 3:
        return 0.0
    d = v - v[0]
    x, y = d[:, 0], d[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def clip(subject: PolygonSet, clip_set: PolygonSet, op: BoolOp | str) -> PolygonSet:
    """
    Boolean combination of two regions.

    Both inputs are snapped to the fixed grid before the overlay. If GEOS
    cannot resolve a degenerate configuration, the clip operand is shifted
    by one snapping quantum and the overlay retried once.

    Raises:
        ClipDegeneracy: the overlay failed even after the perturbation.
    """
    op = BoolOp(op)
    grid = snap_grid(subject, clip_set) or None
    a = subject.to_shapely(grid)
    b = clip_set.to_shapely(grid)
    overlay = _OVERLAYS[op]
    try:
        result = overlay(a, b, grid_size=grid)
    except GEOSException as exc:
        if grid is None:
            raise ClipDegeneracy(f"{op.value} overlay failed: {exc}") from exc
        logger.debug("Overlay %s failed (%s); retrying with a one-quantum shift.", op.value, exc)
        try:
            result = overlay(a, affinity.translate(b, grid, grid), grid_size=grid)
        except GEOSException as exc2:
            raise ClipDegeneracy(f"{op.value} overlay failed after perturbation: {exc2}") from exc2
    return PolygonSet.from_shapely(result)


def set_area(s: PolygonSet) -> float:
    """Outer ring areas minus hole areas; never negative."""
    outer = sum(abs(signed_area(p)) for p in s.outers())
    holes = sum(abs(signed_area(p)) for p in s.holes())
    return max(0.0, outer - holes)


def symdiff_area(a: PolygonSet, b: PolygonSet) -> float:
    """Lebesgue measure of the symmetric difference of two regions."""
    return set_area(clip(a, b, BoolOp.symmetric_difference))


def outward_normals(p: Polygon) -> np.ndarray:
    """
    Unit vertex normals as the normalized bisector of the two adjacent edge normals.

    Normals point away from the enclosed region for either ring orientation.

    Raises:
        DegenerateVertex: two adjacent edges are anti-parallel.
    """
    v = p.vertices
    edges = np.roll(v, -1, axis=0) - v
    lengths = np.linalg.norm(edges, axis=1)
    edge_normals = np.column_stack([edges[:, 1], -edges[:, 0]]) / lengths[:, None]
    if signed_area(p) < 0.0:
        edge_normals = -edge_normals
    bisectors = np.roll(edge_normals, 1, axis=0) + edge_normals
    norms = np.linalg.norm(bisectors, axis=1)
    bad = np.flatnonzero(norms < ANTIPARALLEL_TOLERANCE)
    if bad.size:
        idx = int(bad[0])
        raise DegenerateVertex(f"Adjacent edges at vertex {idx} are anti-parallel.", index=idx)
    return bisectors / norms[:, None]


def is_simple(p: Polygon) -> bool:
    """True iff no two non-adjacent edges intersect."""
    if len(p) < 3:
        return False
    return bool(LinearRing(p.vertices).is_simple)


def interior_angles(p: Polygon) -> np.ndarray:
    """Interior angle at every vertex in degrees, measured inside the region."""
    q = p.ccw()
    v = q.vertices
    prev = np.roll(v, 1, axis=0) - v
    nxt = np.roll(v, -1, axis=0) - v
    cross = nxt[:, 0] * prev[:, 1] - nxt[:, 1] * prev[:, 0]
    dot = np.einsum("ij,ij->i", nxt, prev)
    angles = np.degrees(np.arctan2(cross, dot)) % 360.0
    if q is not p:
        angles = angles[::-1]
    return angles


def perimeter(p: Polygon) -> float:
    return float(np.linalg.norm(np.roll(p.vertices, -1, axis=0) - p.vertices, axis=1).sum())


def centroid(p: Polygon) -> np.ndarray:
    c = p.to_shapely().centroid
    return np.array([c.x, c.y])


def rotate_about_centroid(p: Polygon, degrees: float) -> Polygon:
    """Rigidly rotate a ring about its centre of mass."""
    c = centroid(p)
    t = np.radians(degrees)
    rot = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
    return Polygon((p.vertices - c) @ rot.T + c)
