"""
storage/shapes.py

Shape file ingestion and writing.

Formats
-------
- JSON: {"rings": [{"role": "outer" | "hole", "points": [[x, y], ...]}, ...]}
- CSV:  one "x,y" line per vertex of a single outer ring (optional header)

Loaded rings are canonicalized: outer rings CCW, holes CW.
"""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path

from pydantic import ValidationError
from shapely.geometry import Polygon as ShapelyPolygon

from pipelines.errors import InputValidationError
from pipelines.geometry import Polygon, PolygonSet, Ring, is_simple
from pipelines.schemas import RingDocument, ShapeDocument
from storage.export import atomic_write_json

logger = logging.getLogger(__name__)


def parse_shape_document(data: dict) -> PolygonSet:
    try:
        doc = ShapeDocument.model_validate(data)
    except ValidationError as exc:
        raise InputValidationError(f"invalid shape document: {exc}") from exc
    rings = []
    for i, r in enumerate(doc.rings):
        try:
            poly = Polygon.from_points(r.points)
        except ValueError as exc:
            raise InputValidationError(f"ring {i}: {exc}") from exc
        if len(poly) < 3:
            raise InputValidationError(f"ring {i} has fewer than 3 distinct vertices")
        rings.append(Ring(poly, r.role))
    shape = PolygonSet(tuple(rings)).canonical()
    _check_holes(shape)
    return shape


def _check_holes(shape: PolygonSet) -> None:
    outers = [ShapelyPolygon(p.vertices) for p in shape.outers()]
    if not outers:
        raise InputValidationError("shape has no outer ring")
    for i, hole in enumerate(shape.holes()):
        h = ShapelyPolygon(hole.vertices)
        owners = sum(1 for o in outers if o.contains(h))
        if owners != 1:
            raise InputValidationError(f"hole {i} lies inside {owners} outer rings, expected exactly one")


def _read_csv(path: Path) -> PolygonSet:
    points: list[tuple[float, float]] = []
    with path.open("r", encoding="utf-8", newline="") as f:
        for lineno, row in enumerate(csv.reader(f), start=1):
            if not row or not "".join(row).strip():
                continue
            if len(row) != 2:
                raise InputValidationError(f"{path}:{lineno}: expected 'x,y'")
            try:
                points.append((float(row[0]), float(row[1])))
            except ValueError:
                if points:
                    raise InputValidationError(f"{path}:{lineno}: non-numeric coordinates") from None
                continue  # header
    return parse_shape_document({"rings": [{"role": "outer", "points": points}]})


def load_shape(path: Path | str) -> PolygonSet:
    """Load a JSON or CSV shape file as a canonical PolygonSet."""
    path = Path(path)
    try:
        if path.suffix.lower() == ".csv":
            shape = _read_csv(path)
        else:
            shape = parse_shape_document(json.loads(path.read_text(encoding="utf-8")))
    except OSError as exc:
        raise InputValidationError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputValidationError(f"{path}: invalid JSON ({exc})") from exc
    logger.debug("Loaded %s: %d rings", path, len(shape.rings))
    return shape


def load_source(path: Path | str) -> Polygon:
    """A matchable source: exactly one simple outer ring, CCW."""
    shape = load_shape(path)
    if len(shape.rings) != 1:
        raise InputValidationError(f"{path}: a source shape must be a single outer ring")
    ring = shape.outers()[0]
    if not is_simple(ring):
        raise InputValidationError(f"{path}: source ring is not simple")
    return ring


def shape_document(shape: PolygonSet | Polygon) -> dict:
    if isinstance(shape, Polygon):
        shape = PolygonSet.from_polygon(shape)
    doc = ShapeDocument(rings=[
        RingDocument(role=r.role, points=[(float(x), float(y)) for x, y in r.polygon.vertices])
        for r in shape.rings
    ])
    return doc.model_dump()


def write_shape(path: Path | str, shape: PolygonSet | Polygon) -> None:
    atomic_write_json(Path(path), shape_document(shape))
