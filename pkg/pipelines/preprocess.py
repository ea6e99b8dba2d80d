"""
pipelines/preprocess.py

Shape preprocessing for matching.
Centres a source/target pair on their joint bounding box and scales it to a
unit diagonal; results are mapped back to the original units afterwards.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from pipelines.errors import InputValidationError
from pipelines.geometry import Polygon, PolygonSet, Ring, joint_bounds

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Normalization:
    """x_normalized = (x - center) / scale."""

    center: tuple[float, float]
    scale: float

    def points(self, pts: np.ndarray) -> np.ndarray:
        return (np.asarray(pts, dtype=float) - np.asarray(self.center)) / self.scale

    def restore_points(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(pts, dtype=float) * self.scale + np.asarray(self.center)

    def polygon(self, p: Polygon) -> Polygon:
        return Polygon(self.points(p.vertices))

    def polygon_set(self, s: PolygonSet) -> PolygonSet:
        return PolygonSet(tuple(Ring(self.polygon(r.polygon), r.role) for r in s.rings))

    # Displacements and forces are vectors: only the scale applies.
    def to_normalized_vector(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=float) / self.scale

    def to_original_vector(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=float) * self.scale

    def to_original_area(self, a: float) -> float:
        return float(a) * self.scale ** 2


def normalize_pair(source: Polygon, target: PolygonSet) -> tuple[Normalization, Polygon, PolygonSet]:
    """
    Map source and target into a frame with unit joint bounding-box diagonal.

    Steps:
      1. Joint bounding box of both shapes.
      2. Translate its centre to the origin.
      3. Divide by its diagonal.
    """
    # Step 1: joint bounds
    bounds = joint_bounds(source, target)
    if bounds is None or len(source) == 0 or target.is_empty:
        raise InputValidationError("cannot normalize empty shapes")
    minx, miny, maxx, maxy = bounds
    diag = float(np.hypot(maxx - minx, maxy - miny))
    if not np.isfinite(diag) or diag <= 0.0:
        raise InputValidationError("shapes have a degenerate bounding box")

    # Step 2 + 3: centre and scale
    norm = Normalization(center=(0.5 * (minx + maxx), 0.5 * (miny + maxy)), scale=diag)
    logger.debug("Normalization: center=%s scale=%.6g", norm.center, norm.scale)
    return norm, norm.polygon(source), norm.polygon_set(target)
