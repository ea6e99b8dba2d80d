"""
storage/mesh_files.py

OFF-style mesh files and the binary Schur-complement cache.

OFF layout:  "OFF" / "N F 0" / N lines "x y 0" / F lines "3 i j k".
Schur cache: 16-byte header (magic b"SCHR", little-endian u32 K, 8 reserved
bytes) followed by the 2K x 2K matrix as row-major little-endian doubles.
"""

from __future__ import annotations

import logging
import struct
from pathlib import Path

import numpy as np

from pipelines.elasticity import SchurOperator
from pipelines.errors import InputValidationError
from pipelines.meshing import TriMesh, boundary_loop_from_triangles
from storage.export import atomic_write_bytes, atomic_write_text

logger = logging.getLogger(__name__)

SCHUR_MAGIC = b"SCHR"
_HEADER = struct.Struct("<4sI8x")


def _tokens(text: str) -> list[list[str]]:
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line.split())
    return lines


def read_off(path: Path | str) -> TriMesh:
    path = Path(path)
    try:
        lines = _tokens(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputValidationError(f"cannot read {path}: {exc}") from exc
    if not lines or lines[0] != ["OFF"]:
        raise InputValidationError(f"{path}: missing OFF header")
    try:
        n_nodes, n_faces = int(lines[1][0]), int(lines[1][1])
        body = lines[2:]
        if len(body) < n_nodes + n_faces:
            raise InputValidationError(f"{path}: truncated file")
        nodes = np.array([[float(t[0]), float(t[1])] for t in body[:n_nodes]])
        faces = []
        for t in body[n_nodes:n_nodes + n_faces]:
            if int(t[0]) != 3:
                raise InputValidationError(f"{path}: only triangular faces are supported")
            faces.append([int(t[1]), int(t[2]), int(t[3])])
    except (IndexError, ValueError) as exc:
        raise InputValidationError(f"{path}: malformed OFF ({exc})") from exc

    tris = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    if tris.size and (tris.min() < 0 or tris.max() >= n_nodes):
        raise InputValidationError(f"{path}: face index out of range")
    # orient every face CCW
    p = nodes[tris]
    cross = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
    tris = np.where((cross < 0)[:, None], tris[:, [0, 2, 1]], tris)
    loop = boundary_loop_from_triangles(nodes, tris)
    logger.debug("Read OFF mesh %s: N=%d F=%d K=%d", path, n_nodes, n_faces, len(loop))
    return TriMesh(nodes, tris, loop)


def write_off(path: Path | str, mesh: TriMesh, nodes: np.ndarray | None = None) -> None:
    """Write a mesh; `nodes` overrides the stored positions (e.g. in original units)."""
    pts = mesh.nodes if nodes is None else np.asarray(nodes, dtype=float)
    out = ["OFF", f"{len(pts)} {mesh.n_triangles} 0"]
    out += [f"{float(x)!r} {float(y)!r} 0" for x, y in pts]
    out += [f"3 {i} {j} {k}" for i, j, k in mesh.triangles.tolist()]
    atomic_write_text(Path(path), "\n".join(out) + "\n")


def write_schur(path: Path | str, S: SchurOperator) -> None:
    body = np.ascontiguousarray(S.S, dtype="<f8").tobytes(order="C")
    atomic_write_bytes(Path(path), _HEADER.pack(SCHUR_MAGIC, S.K) + body)


def read_schur(path: Path | str) -> SchurOperator:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise InputValidationError(f"{path}: truncated Schur cache")
    magic, K = _HEADER.unpack_from(data)
    if magic != SCHUR_MAGIC:
        raise InputValidationError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 8 * (2 * K) ** 2
    if len(data) != expected:
        raise InputValidationError(f"{path}: expected {expected} bytes, found {len(data)}")
    S = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(2 * K, 2 * K).astype(float)
    return SchurOperator(S=S, K=int(K))
