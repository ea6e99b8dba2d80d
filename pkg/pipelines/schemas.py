"""
pipelines/schemas.py

Pydantic models for everything that crosses a file or process boundary:
- Shape documents (rings with outer/hole roles)
- Material and run configuration (LameParams, MatchConfig)
- Per-iteration log rows and the run manifest
- Method comparison rows
"""

from __future__ import annotations

import math
from typing import ClassVar, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


RingRole = Literal["outer", "hole"]
BilinearForm = Literal["hooke", "navier"]
Termination = Literal["threshold", "max_iters", "solver_failure", "collapse"]
SolverStatus = Literal["optimal", "infeasible", "unbounded", "max_iter", "numerical_failure", "skipped"]
Method = Literal["symdiff", "icp_like"]

DEFAULT_MAX_ITERS = 50
DEFAULT_STOP_FRACTION = 0.01
DEFAULT_MIN_ANGLE_DEG = 25.0
DEFAULT_MAX_TRIANGLE_AREA = 1.5e-3  # unit-diagonal shapes land in the 200-700 triangle range
DEFAULT_SOLVER_TOL = 1e-8
DEFAULT_SOLVER_MAX_ITER = 100
DEFAULT_COLLAPSE_RATIO = 0.25
DEFAULT_STALL_ESCALATION = 1500.0


# ---------------------------------------------------------------------------
# Shape documents
# ---------------------------------------------------------------------------


class RingDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    role: RingRole = "outer"
    points: list[tuple[float, float]] = Field(min_length=3)

    @field_validator("points")
    @classmethod
    def _finite(cls, v: list[tuple[float, float]]) -> list[tuple[float, float]]:
        for x, y in v:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError("ring points must be finite")
        return v


class ShapeDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    rings: list[RingDocument] = Field(min_length=1)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


class LameParams(BaseModel):
    """Lame constants; mu > 0 keeps the operator elliptic."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True, frozen=True)

    mu: float = Field(default=1.0, gt=0)
    lam: float = Field(default=0.0, ge=0, alias="lambda")


class MatchConfig(BaseModel):
    """
    Single run configuration. Weights refer to the problem normalized to a
    unit bounding-box diagonal; alpha=None means 10 / (area(S) + area(T))**2.

    With the default alpha, an iteration that leaves the area fraction
    unchanged multiplies alpha by `stall_escalation` and raises beta to
    alpha / 8, once per run. stall_escalation=None keeps the weights fixed.
    """

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    alpha: Optional[float] = Field(default=None, gt=0)
    beta: float = Field(default=1.0, ge=0)
    max_iters: int = Field(default=DEFAULT_MAX_ITERS, ge=1)
    stop_fraction: float = Field(default=DEFAULT_STOP_FRACTION, gt=0, lt=1)
    fd_step: Optional[float] = Field(default=None, gt=0)
    distortion_bound: Optional[float] = Field(default=None, gt=1)
    lame: LameParams = Field(default_factory=LameParams)
    bilinear_form: BilinearForm = "hooke"
    max_triangle_area: float = Field(default=DEFAULT_MAX_TRIANGLE_AREA, gt=0)
    min_angle_deg: float = Field(default=DEFAULT_MIN_ANGLE_DEG, gt=0, lt=35)
    solver_tol: float = Field(default=DEFAULT_SOLVER_TOL, gt=0)
    solver_max_iter: int = Field(default=DEFAULT_SOLVER_MAX_ITER, ge=1)
    workers: int = Field(default=1, ge=1)
    collapse_ratio: float = Field(default=DEFAULT_COLLAPSE_RATIO, ge=0, lt=1)
    alpha_icp: Optional[float] = Field(default=None, gt=0)
    stall_escalation: Optional[float] = Field(default=DEFAULT_STALL_ESCALATION, gt=1)
    seed: Optional[int] = None  # reserved; every stage is deterministic


# ---------------------------------------------------------------------------
# Logs and results
# ---------------------------------------------------------------------------


class IterationRecord(BaseModel):
    """One row of iterations.csv, in original units."""

    iter: int
    area_abs: float
    area_fraction: float
    force_norm: float
    max_cd: float
    mean_cd: float
    flipped: int
    solver_status: SolverStatus
    area_ratio: float = 1.0
    ring_simple: bool = True

    CSV_FIELDS: ClassVar[tuple[str, ...]] = (
        "iter", "area_abs", "area_fraction", "force_norm",
        "max_cd", "mean_cd", "flipped", "solver_status",
    )

    def csv_row(self) -> list[str]:
        return [
            str(self.iter), repr(self.area_abs), repr(self.area_fraction),
            repr(self.force_norm), repr(self.max_cd), repr(self.mean_cd),
            str(self.flipped), self.solver_status,
        ]


class ComparisonRow(BaseModel):
    method: Method
    iterations: int
    force_norm: float
    max_CD: float
    mean_CD: float
    final_fraction: float

    CSV_FIELDS: ClassVar[tuple[str, ...]] = (
        "method", "iterations", "force_norm", "max_CD", "mean_CD", "final_fraction",
    )

    def csv_row(self) -> list[str]:
        return [
            self.method, str(self.iterations), repr(self.force_norm),
            repr(self.max_CD), repr(self.mean_CD), repr(self.final_fraction),
        ]


class RunManifest(BaseModel):
    command: str
    source: str
    target: Optional[str] = None
    targets: list[str] = Field(default_factory=list)
    mesh: Optional[str] = None
    schur_cache: Optional[str] = None
    config: MatchConfig
    tool_version: str
    stage_seconds: dict[str, float] = Field(default_factory=dict)
    termination: Optional[str] = None

    @model_validator(mode="after")
    def _has_target(self) -> "RunManifest":
        if self.command in ("match", "compare") and self.target is None:
            raise ValueError(f"{self.command} manifest requires a target")
        return self
