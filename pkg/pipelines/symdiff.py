"""
pipelines/symdiff.py

Symmetric-difference area between the displaced source boundary and the
target, and its gradient with respect to the boundary displacement.

The gradient is reduced to normal directions: each node is pushed by h
along its outward normal and the area change is measured with one clip,
so a full gradient costs K + 1 clips instead of 2K.
"""

from __future__ import annotations

import logging
import threading
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
from shapely.geometry import LinearRing

from pipelines.errors import DimensionMismatch, NoOverlapWarning
from pipelines.geometry import (
    Polygon,
    PolygonSet,
    Ring,
    interior_angles,
    joint_diagonal,
    outward_normals,
    set_area,
    signed_area,
    symdiff_area,
)

logger = logging.getLogger(__name__)

DEFAULT_STEP_FACTOR = 1e-3
SHARP_ANGLE_DEG = 30.0
DISJOINT_TOLERANCE = 1e-9


class ClipCounter:
    """Thread-safe tally of clip evaluations."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.count = 0

    def tick(self) -> None:
        with self._lock:
            self.count += 1


@dataclass(frozen=True, eq=False)
class DeformedBoundary:
    """Source ring S displaced by interleaved boundary displacements u_B."""

    base: Polygon
    u_B: np.ndarray

    def __post_init__(self) -> None:
        u = np.asarray(self.u_B, dtype=float).ravel()
        if u.shape != (2 * len(self.base),):
            raise DimensionMismatch(
                f"u_B has {u.size} entries for a ring of {len(self.base)} vertices"
            )
        object.__setattr__(self, "u_B", u)

    @property
    def K(self) -> int:
        return len(self.base)

    @cached_property
    def vertices(self) -> np.ndarray:
        return self.base.vertices + self.u_B.reshape(-1, 2)

    @cached_property
    def is_valid(self) -> bool:
        """Simplicity of the deformed ring; may be False mid-iteration."""
        return bool(LinearRing(self.vertices).is_simple)

    def polygon(self) -> Polygon:
        return Polygon(self.vertices)

    def region(self) -> PolygonSet:
        return _ring_region(self.vertices)


@dataclass(frozen=True, eq=False)
class SymdiffGradient:
    g: np.ndarray  # (2K,), interleaved
    normals: np.ndarray  # (K, 2)
    d: np.ndarray  # (K,) directional derivatives along the normals
    area: float
    h: float
    clip_calls: int


def _ring_region(vertices: np.ndarray) -> PolygonSet:
    # Even-odd fill of self-intersecting rings happens in PolygonSet.to_shapely.
    return PolygonSet((Ring(Polygon.from_points(vertices), "outer"),))


def _area_of(vertices: np.ndarray, target: PolygonSet, counter: Optional[ClipCounter]) -> float:
    if counter is not None:
        counter.tick()
    return symdiff_area(_ring_region(vertices), target)


def default_step(db: DeformedBoundary, target: PolygonSet) -> float:
    """1e-3 of the joint bounding-box diagonal."""
    return DEFAULT_STEP_FACTOR * joint_diagonal(db.polygon(), target)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def area_at(db: DeformedBoundary, target: PolygonSet, counter: Optional[ClipCounter] = None) -> float:
    """Symmetric-difference area of the deformed ring against the target."""
    if db.K < 3:
        raise ValueError("deformed ring needs at least 3 vertices")
    if not db.is_valid:
        logger.debug("Deformed ring self-intersects; using even-odd area.")
    return _area_of(db.vertices, target, counter)


def is_disjoint(db: DeformedBoundary, area: float, target: PolygonSet) -> bool:
    """True when the symmetric difference equals the sum of both areas."""
    total = abs(signed_area(Polygon.from_points(db.vertices))) + set_area(target)
    return total > 0.0 and area >= total * (1.0 - DISJOINT_TOLERANCE)


def gradient(
    db: DeformedBoundary,
    target: PolygonSet,
    h: Optional[float] = None,
    workers: int = 1,
) -> SymdiffGradient:
    """
    Normal-direction forward-difference gradient of area_at.

    d_i = (area_at(node i moved by h * n_i) - area_at) / h and g_i = d_i * n_i.
    Uses exactly K + 1 clip evaluations; with workers > 1 the K perturbed
    clips run on a thread pool and are merged by node index.

    Raises:
        DegenerateVertex: a normal of the deformed ring is undefined.
    """
    if h is None:
        h = default_step(db, target)
    if h <= 0:
        raise ValueError(f"finite-difference step must be positive, got {h}")

    verts = db.vertices
    normals = outward_normals(db.polygon())
    if logger.isEnabledFor(logging.DEBUG):
        angles = interior_angles(db.polygon())
        sharp = np.flatnonzero((angles < SHARP_ANGLE_DEG) | (angles > 360.0 - SHARP_ANGLE_DEG))
        if sharp.size:
            logger.debug("Sharp corners at nodes %s use bisector normals.", sharp.tolist())

    counter = ClipCounter()
    base_area = area_at(db, target, counter)

    def perturbed(i: int) -> float:
        moved = verts.copy()
        moved[i] += h * normals[i]
        return _area_of(moved, target, counter)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            areas = np.fromiter(pool.map(perturbed, range(db.K)), dtype=float, count=db.K)
    else:
        areas = np.array([perturbed(i) for i in range(db.K)])

    d = (areas - base_area) / h
    g = (d[:, None] * normals).ravel()

    if is_disjoint(db, base_area, target):
        msg = "deformed source and target do not overlap; the area gradient only shrinks the source"
        warnings.warn(msg, NoOverlapWarning, stacklevel=2)
        logger.warning("NoOverlap: %s", msg)

    return SymdiffGradient(g=g, normals=normals, d=d, area=base_area, h=float(h), clip_calls=counter.count)


def full_gradient(db: DeformedBoundary, target: PolygonSet, h: Optional[float] = None) -> np.ndarray:
    """Brute-force central differences over all 2K coordinates with step h/2."""
    if h is None:
        h = default_step(db, target)
    base = db.vertices.ravel()
    out = np.empty(base.size)
    for k in range(base.size):
        plus = base.copy()
        minus = base.copy()
        plus[k] += 0.5 * h
        minus[k] -= 0.5 * h
        out[k] = (_area_of(plus.reshape(-1, 2), target, None) - _area_of(minus.reshape(-1, 2), target, None)) / h
    return out


def restoring_force(grad: SymdiffGradient) -> np.ndarray:
    """Negative area gradient, interleaved (2K,)."""
    return -grad.g
