"""
pipelines/errors.py

Exception and warning types shared by the geometry, meshing, elasticity,
symdiff, conic and matcher layers.

Every error derives from ElastiMatchError so the CLI can map failures onto
exit codes in one place.
"""

from __future__ import annotations

from typing import Any, Optional


class ElastiMatchError(Exception):
    """Base class for all errors raised by this package."""


class InputValidationError(ElastiMatchError):
    """A shape, mesh or configuration document failed validation."""


class ClipDegeneracy(ElastiMatchError):
    """The Boolean overlay could not resolve coincident or overlapping edges."""


class DegenerateVertex(ElastiMatchError):
    """Two adjacent polygon edges are anti-parallel; no bisector normal exists."""

    def __init__(self, message: str, index: int) -> None:
        super().__init__(message)
        self.index = index


class MeshFailure(ElastiMatchError):
    """Triangulation could not produce a mesh meeting the requested parameters."""

    def __init__(self, message: str, region: Optional[tuple[float, float]] = None) -> None:
        super().__init__(message)
        self.region = region


class DegenerateTriangle(ElastiMatchError):
    """A mesh triangle has (numerically) zero area."""

    def __init__(self, message: str, index: int) -> None:
        super().__init__(message)
        self.index = index


class SingularInterior(ElastiMatchError):
    """Factorization of the interior stiffness block A_II failed."""


class DimensionMismatch(ElastiMatchError, ValueError):
    """Array shapes passed to a builder or operator do not agree."""


class NumericalFailure(ElastiMatchError):
    """The conic solver broke down (factorization failure, NaNs)."""

    def __init__(self, message: str, trace: Optional[list[dict[str, Any]]] = None) -> None:
        super().__init__(message)
        self.trace = trace or []


class NoOverlapWarning(UserWarning):
    """Deformed source and target are disjoint; the area gradient carries no information."""
