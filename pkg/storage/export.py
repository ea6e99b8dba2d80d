"""
storage/export.py

Run outputs: result.json, iterations.csv, compare.csv, gradient CSVs and
manifest.json.

Every file is written atomically (temp file + replace). Floats go through
repr, so identical runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
from pydantic import ValidationError

from pipelines.errors import InputValidationError
from pipelines.schemas import ComparisonRow, IterationRecord, RunManifest

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Atomic writes
# ---------------------------------------------------------------------------


def atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8", newline="")
    tmp.replace(path)


def atomic_write_bytes(path: Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    tmp.replace(path)


def atomic_write_json(path: Path, data: Any) -> None:
    atomic_write_text(path, json.dumps(data, indent=2, ensure_ascii=False) + "\n")


def _csv_text(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# CSV outputs
# ---------------------------------------------------------------------------


def write_iterations_csv(path: Path, records: Sequence[IterationRecord]) -> None:
    atomic_write_text(path, _csv_text(IterationRecord.CSV_FIELDS, (r.csv_row() for r in records)))
    logger.debug("Wrote %d iteration rows to %s", len(records), path)


def read_iterations_csv(path: Path) -> list[dict[str, str]]:
    with Path(path).open("r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


def write_compare_csv(path: Path, rows: Sequence[ComparisonRow]) -> None:
    atomic_write_text(path, _csv_text(ComparisonRow.CSV_FIELDS, (r.csv_row() for r in rows)))


def write_gradient_csv(path: Path, normals: np.ndarray, d: np.ndarray) -> None:
    """Per-node normal directional derivatives: node,nx,ny,d."""
    rows = ([str(i), repr(float(n[0])), repr(float(n[1])), repr(float(v))] for i, (n, v) in enumerate(zip(normals, d)))
    atomic_write_text(path, _csv_text(("node", "nx", "ny", "d"), rows))


# ---------------------------------------------------------------------------
# JSON outputs
# ---------------------------------------------------------------------------


def _pairs(a: np.ndarray) -> list[list[float]]:
    return [[float(x), float(y)] for x, y in np.asarray(a, dtype=float).reshape(-1, 2)]


def result_payload(result) -> dict[str, Any]:
    """JSON-ready view of a MatchResult (original units)."""
    return {
        "method": result.method,
        "termination": result.termination,
        "iterations": result.iterations,
        "final_fraction": result.final_fraction,
        "scale": result.scale,
        "u_B": _pairs(result.u_B),
        "u_I": _pairs(result.u_I),
        "forces": _pairs(result.forces),
        "deformed_source": _pairs(result.source.vertices + result.u_B.reshape(-1, 2)),
    }


def write_result_json(path: Path, result) -> None:
    atomic_write_json(path, result_payload(result))


def write_manifest(path: Path, manifest: RunManifest) -> None:
    atomic_write_json(path, manifest.model_dump(mode="json", by_alias=True))


def read_manifest(path: Path) -> RunManifest:
    try:
        return RunManifest.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValidationError) as exc:
        raise InputValidationError(f"invalid manifest {path}: {exc}") from exc
