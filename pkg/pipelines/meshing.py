"""
pipelines/meshing.py

Constrained Delaunay triangulation of a source polygon's interior and the
boundary-first node numbering used by the condensed elasticity system.

Triangulation is done by Shewchuk's Triangle (python `triangle` bindings)
with quality refinement. Boundary Steiner points are forbidden (`Y`), so
the first K mesh nodes are exactly the input polygon vertices, in order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import triangle as tr

from pipelines.errors import InputValidationError, MeshFailure
from pipelines.geometry import Polygon, is_simple, signed_area
from pipelines.schemas import DEFAULT_MAX_TRIANGLE_AREA, DEFAULT_MIN_ANGLE_DEG

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MeshParams:
    max_triangle_area: float = DEFAULT_MAX_TRIANGLE_AREA
    min_angle_deg: float = DEFAULT_MIN_ANGLE_DEG

    def triangle_opts(self) -> str:
        return f"pYq{self.min_angle_deg:.12g}a{self.max_triangle_area:.12g}Q"


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Triangulated disk: nodes (N, 2), CCW triangles (F, 3), boundary loop (K,)."""

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_loop: np.ndarray

    def __post_init__(self) -> None:
        nodes = np.array(self.nodes, dtype=float)
        tris = np.array(self.triangles, dtype=np.int64).reshape(-1, 3)
        loop = np.array(self.boundary_loop, dtype=np.int64).ravel()
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise ValueError(f"nodes must have shape (N, 2), got {nodes.shape}")
        if tris.size and (tris.min() < 0 or tris.max() >= len(nodes)):
            raise ValueError("triangle index out of range")
        for arr in (nodes, tris, loop):
            arr.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "triangles", tris)
        object.__setattr__(self, "boundary_loop", loop)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def triangle_areas(self) -> np.ndarray:
        """Signed areas; positive for CCW triangles."""
        p = self.nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def triangle_angles(self) -> np.ndarray:
        """Interior angles in degrees, shape (F, 3)."""
        p = self.nodes[self.triangles]
        out = np.empty((len(p), 3))
        for k in range(3):
            a = p[:, (k + 1) % 3] - p[:, k]
            b = p[:, (k + 2) % 3] - p[:, k]
            cos = np.einsum("ij,ij->i", a, b) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            out[:, k] = np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))
        return out

    def edges(self) -> np.ndarray:
        """Unique undirected edges, shape (E, 2), each row sorted."""
        e = np.vstack([self.triangles[:, [0, 1]], self.triangles[:, [1, 2]], self.triangles[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def boundary_polygon(self) -> Polygon:
        return Polygon(self.nodes[self.boundary_loop])


@dataclass(frozen=True, eq=False)
class NodeOrdering:
    """perm[mesh_index] = system_index; boundary nodes take system indices 0..K-1."""

    perm: np.ndarray
    K: int
    N: int

    def __post_init__(self) -> None:
        perm = np.array(self.perm, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(self.N)):
            raise ValueError("node ordering is not a bijection")
        perm.setflags(write=False)
        object.__setattr__(self, "perm", perm)

    @property
    def inverse(self) -> np.ndarray:
        """inverse[system_index] = mesh_index."""
        return np.argsort(self.perm)

    def system_points(self, mesh: TriMesh) -> np.ndarray:
        return mesh.nodes[self.inverse]


@dataclass(frozen=True)
class MeshQuality:
    n_nodes: int
    n_boundary: int
    n_triangles: int
    min_angle_deg: float
    max_area: float
    total_area: float


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def triangulate(p: Polygon, params: Optional[MeshParams] = None, strict: bool = False) -> TriMesh:
    """
    Quality constrained-Delaunay mesh of the interior of a simple CCW polygon.

    An angle shortfall is logged as a warning; with strict=True it raises
    MeshFailure pointing at the worst triangle.
    """
    params = params or MeshParams()
    n = len(p)
    if n < 3:
        raise InputValidationError("cannot mesh a polygon with fewer than 3 vertices")
    if signed_area(p) <= 0.0:
        raise InputValidationError("polygon must be counter-clockwise with positive area")
    if not is_simple(p):
        raise InputValidationError("polygon is not simple")

    segments = np.column_stack([np.arange(n), (np.arange(n) + 1) % n])
    opts = params.triangle_opts()
    try:
        out = tr.triangulate({"vertices": np.array(p.vertices), "segments": segments}, opts)
    except Exception as exc:  # the C extension raises bare RuntimeError/MemoryError
        raise MeshFailure(f"triangulation failed: {exc}") from exc

    nodes = np.asarray(out.get("vertices", np.empty((0, 2))), dtype=float)
    tris = np.asarray(out.get("triangles", np.empty((0, 3))), dtype=np.int64)
    if len(tris) == 0:
        raise MeshFailure("triangulation produced no triangles")
    if len(nodes) < n or not np.array_equal(nodes[:n], p.vertices):
        raise MeshFailure("triangulation did not preserve the boundary vertices")

    mesh = TriMesh(nodes, tris, np.arange(n))
    areas = mesh.triangle_areas()
    flip = areas < 0
    if flip.any():
        mesh = TriMesh(nodes, np.where(flip[:, None], tris[:, [0, 2, 1]], tris), np.arange(n))

    quality = mesh_quality(mesh)
    logger.info("Mesh built: N=%d K=%d F=%d min_angle=%.2f",
                quality.n_nodes, quality.n_boundary, quality.n_triangles, quality.min_angle_deg)
    if quality.min_angle_deg + 1e-9 < params.min_angle_deg:
        angles = mesh.triangle_angles().min(axis=1)
        worst = int(np.argmin(angles))
        region = tuple(float(c) for c in mesh.nodes[mesh.triangles[worst]].mean(axis=0))
        msg = (f"minimum angle {quality.min_angle_deg:.2f} deg below requested "
               f"{params.min_angle_deg:.2f} deg near {region}")
        if strict:
            raise MeshFailure(msg, region=region)
        logger.warning("Mesh angle shortfall: %s", msg)
    return mesh


def order_nodes(m: TriMesh) -> NodeOrdering:
    """Boundary loop first (in loop order), interior nodes after in increasing mesh index."""
    N = m.n_nodes
    K = len(m.boundary_loop)
    perm = np.full(N, -1, dtype=np.int64)
    perm[m.boundary_loop] = np.arange(K)
    interior = np.flatnonzero(perm < 0)
    perm[interior] = np.arange(K, N)
    return NodeOrdering(perm=perm, K=K, N=N)


def mesh_quality(m: TriMesh) -> MeshQuality:
    areas = m.triangle_areas()
    return MeshQuality(
        n_nodes=m.n_nodes,
        n_boundary=len(m.boundary_loop),
        n_triangles=m.n_triangles,
        min_angle_deg=float(m.triangle_angles().min()),
        max_area=float(np.abs(areas).max()),
        total_area=float(areas.sum()),
    )


def boundary_loop_from_triangles(nodes: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """
    Recover the CCW boundary cycle from edges used by exactly one triangle.

    Raises:
        InputValidationError: boundary edges do not form a single cycle.
    """
    tris = np.asarray(triangles, dtype=np.int64)
    e = np.vstack([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    key, counts = np.unique(np.sort(e, axis=1), axis=0, return_counts=True)
    if np.any(counts > 2):
        raise InputValidationError("mesh is not edge-manifold")
    boundary = key[counts == 1]
    if len(boundary) < 3:
        raise InputValidationError("mesh has no boundary cycle")

    adjacency: dict[int, list[int]] = {}
    for a, b in boundary.tolist():
        adjacency.setdefault(a, []).append(b)
        adjacency.setdefault(b, []).append(a)
    if any(len(v) != 2 for v in adjacency.values()):
        raise InputValidationError("boundary edges do not form a simple cycle")

    start = int(boundary[:, 0].min())
    loop = [start]
    prev, cur = start, min(adjacency[start])
    while cur != start:
        loop.append(cur)
        a, b = adjacency[cur]
        prev, cur = cur, (b if a == prev else a)
    if len(loop) != len(adjacency):
        raise InputValidationError("mesh boundary has more than one component")

    loop_arr = np.asarray(loop, dtype=np.int64)
    if signed_area(Polygon(np.asarray(nodes, dtype=float)[loop_arr])) < 0:
        loop_arr = np.concatenate([loop_arr[:1], loop_arr[1:][::-1]])
    return loop_arr
