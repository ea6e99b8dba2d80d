"""
pipelines/elasticity.py

P1 finite-element stiffness assembly for planar linear elasticity, boundary
Schur condensation and harmonic recovery of interior displacements.

Displacement vectors use the interleaved layout (u_1x, u_1y, u_2x, ...) in
system (boundary-first) node order, so boundary DOFs are the first 2K
entries.

Two bilinear forms are available:
- "hooke":  2 mu eps(u):eps(v) + lambda div(u) div(v)   (rigid kernel of dim 3)
- "navier": mu grad(u):grad(v) + (lambda + mu) div(u) div(v)   (kernel = translations)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from pipelines.errors import DegenerateTriangle, DimensionMismatch, SingularInterior
from pipelines.meshing import NodeOrdering, TriMesh
from pipelines.schemas import BilinearForm, LameParams

logger = logging.getLogger(__name__)

DEGENERATE_AREA_FACTOR = 1e-14


# ---------------------------------------------------------------------------
# Element level
# ---------------------------------------------------------------------------


def p1_gradients(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Barycentric basis gradients and signed areas for a stack of triangles.

    points: (F, 3, 2) -> gradients (F, 3, 2), areas (F,)
    """
    p = np.asarray(points, dtype=float)
    x, y = p[..., 0], p[..., 1]
    area = 0.5 * ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0]))
    grads = np.empty_like(p)
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        grads[:, a, 0] = y[:, b] - y[:, c]
        grads[:, a, 1] = x[:, c] - x[:, b]
    grads /= (2.0 * area)[:, None, None]
    return grads, area


def element_matrices(points: np.ndarray, lame: LameParams, form: BilinearForm = "hooke") -> np.ndarray:
    """Closed-form element stiffness matrices, shape (F, 6, 6), DOF order (a, component)."""
    grads, area = p1_gradients(points)
    mu, lam = lame.mu, lame.lam
    eye = np.eye(2)
    dots = np.einsum("fai,fbi->fab", grads, grads)
    laplace = mu * np.einsum("fab,jk->fajbk", dots, eye)
    outer = np.einsum("faj,fbk->fajbk", grads, grads)  # g_a[j] g_b[k]
    if form == "navier":
        ke = laplace + (lam + mu) * outer
    elif form == "hooke":
        swapped = np.einsum("fak,fbj->fajbk", grads, grads)  # g_a[k] g_b[j]
        ke = laplace + mu * swapped + lam * outer
    else:
        raise ValueError(f"unknown bilinear form {form!r}")
    return (area[:, None, None, None, None] * ke).reshape(-1, 6, 6)


def element_stiffness(triangle: np.ndarray, lame: LameParams, form: BilinearForm = "hooke") -> np.ndarray:
    """6x6 stiffness matrix of a single triangle."""
    return element_matrices(np.asarray(triangle, dtype=float)[None], lame, form)[0]


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StiffnessMatrix:
    """Sparse symmetric 2N x 2N system matrix in boundary-first ordering."""

    A: sp.csr_matrix
    K: int
    N: int
    form: BilinearForm = "hooke"

    @classmethod
    def from_matrix(cls, matrix, K: int, form: BilinearForm = "hooke") -> "StiffnessMatrix":
        A = sp.csr_matrix(matrix, dtype=float)
        if A.shape[0] != A.shape[1] or A.shape[0] % 2:
            raise DimensionMismatch(f"stiffness matrix must be square with even size, got {A.shape}")
        N = A.shape[0] // 2
        if not 0 < K <= N:
            raise DimensionMismatch(f"boundary node count {K} outside 1..{N}")
        return cls(A=A, K=K, N=N, form=form)

    @property
    def n_boundary_dofs(self) -> int:
        return 2 * self.K

    @property
    def A_BB(self) -> sp.csr_matrix:
        nb = self.n_boundary_dofs
        return self.A[:nb, :nb]

    @property
    def A_BI(self) -> sp.csr_matrix:
        nb = self.n_boundary_dofs
        return self.A[:nb, nb:]

    @property
    def A_IB(self) -> sp.csr_matrix:
        nb = self.n_boundary_dofs
        return self.A[nb:, :nb]

    @property
    def A_II(self) -> sp.csr_matrix:
        nb = self.n_boundary_dofs
        return self.A[nb:, nb:]

    @cached_property
    def interior_factor(self):
        """Sparse LU of A_II, computed once and reused read-only."""
        if self.N == self.K:
            return None
        try:
            lu = splu(sp.csc_matrix(self.A_II))
        except RuntimeError as exc:
            raise SingularInterior(f"interior block factorization failed: {exc}") from exc
        if not np.all(np.isfinite(lu.U.data)):
            raise SingularInterior("interior block factorization produced non-finite values")
        return lu

    def solve_interior(self, rhs: np.ndarray) -> np.ndarray:
        lu = self.interior_factor
        if lu is None:
            return np.zeros((0,) + np.shape(rhs)[1:])
        out = lu.solve(np.asarray(rhs, dtype=float))
        if not np.all(np.isfinite(out)):
            raise SingularInterior("interior solve produced non-finite values")
        return out

    @cached_property
    def extension(self) -> np.ndarray:
        """Dense harmonic-extension operator R = -A_II^-1 A_IB, shape (2(N-K), 2K)."""
        if self.N == self.K:
            return np.zeros((0, self.n_boundary_dofs))
        return -self.solve_interior(self.A_IB.toarray())


@dataclass(frozen=True, eq=False)
class SchurOperator:
    """Dense symmetric 2K x 2K boundary operator S with S u_B = f_B."""

    S: np.ndarray
    K: int

    def block(self, i: int) -> np.ndarray:
        """The 2 x 2K rows S_i belonging to boundary node i."""
        return self.S[2 * i:2 * i + 2]

    def blocks(self) -> np.ndarray:
        return self.S.reshape(self.K, 2, 2 * self.K)


@dataclass(frozen=True, eq=False)
class DisplacementField:
    u_B: np.ndarray
    u_I: Optional[np.ndarray] = None

    @property
    def K(self) -> int:
        return len(self.u_B) // 2

    def boundary_nodal(self) -> np.ndarray:
        return np.asarray(self.u_B).reshape(-1, 2)

    def interior_nodal(self) -> np.ndarray:
        if self.u_I is None:
            return np.zeros((0, 2))
        return np.asarray(self.u_I).reshape(-1, 2)

    def full(self) -> np.ndarray:
        if self.u_I is None:
            raise ValueError("interior displacement has not been recovered")
        return np.concatenate([self.u_B, self.u_I])


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def assemble_stiffness(
    m: TriMesh,
    order: NodeOrdering,
    lame: Optional[LameParams] = None,
    form: BilinearForm = "hooke",
) -> StiffnessMatrix:
    """
    Assemble the global stiffness matrix from closed-form P1 element integrals.

    Raises:
        DegenerateTriangle: a triangle has area below 1e-14 * bbox_diagonal**2.
    """
    lame = lame or LameParams()
    points = m.nodes[m.triangles]
    span = m.nodes.max(axis=0) - m.nodes.min(axis=0)
    threshold = DEGENERATE_AREA_FACTOR * float(span @ span)
    areas = m.triangle_areas()
    bad = np.flatnonzero(areas < threshold)
    if bad.size:
        idx = int(bad[0])
        raise DegenerateTriangle(f"triangle {idx} has area {areas[idx]:.3e}", index=idx)

    ke = element_matrices(points, lame, form)
    sys_nodes = order.perm[m.triangles]  # (F, 3)
    dofs = (2 * sys_nodes[:, :, None] + np.arange(2)).reshape(-1, 6)
    rows = np.repeat(dofs, 6, axis=1).ravel()
    cols = np.tile(dofs, (1, 6)).ravel()
    n = 2 * order.N
    A = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    A.sum_duplicates()
    logger.debug("Assembled %s stiffness: %d dofs, %d nonzeros", form, n, A.nnz)
    return StiffnessMatrix(A=A, K=order.K, N=order.N, form=form)


def schur_condense(A: StiffnessMatrix) -> SchurOperator:
    """S = A_BB - A_BI A_II^-1 A_IB, dense and symmetrized."""
    S = A.A_BB.toarray()
    if A.N > A.K:
        S = S + A.A_BI @ A.extension
    S = 0.5 * (S + S.T)
    logger.info("Schur complement formed: K=%d (%d interior nodes eliminated)", A.K, A.N - A.K)
    return SchurOperator(S=S, K=A.K)


def recover_interior(A: StiffnessMatrix, u_B) -> DisplacementField:
    """Solve A_II u_I = -A_IB u_B for the force-free interior."""
    u_B = np.asarray(u_B.u_B if isinstance(u_B, DisplacementField) else u_B, dtype=float)
    if u_B.shape != (A.n_boundary_dofs,):
        raise DimensionMismatch(f"u_B must have length {A.n_boundary_dofs}, got {u_B.shape}")
    u_I = A.solve_interior(-(A.A_IB @ u_B)) if A.N > A.K else np.zeros(0)
    return DisplacementField(u_B=u_B, u_I=u_I)


def boundary_forces(S: SchurOperator, u_B) -> np.ndarray:
    """Per-node forces f_i = S_i u_B, shape (K, 2)."""
    u_B = np.asarray(u_B.u_B if isinstance(u_B, DisplacementField) else u_B, dtype=float)
    if u_B.shape != (2 * S.K,):
        raise DimensionMismatch(f"u_B must have length {2 * S.K}, got {u_B.shape}")
    return (S.S @ u_B).reshape(S.K, 2)


def force_norm(forces: np.ndarray) -> float:
    """Sum of per-node force magnitudes."""
    return float(np.linalg.norm(np.asarray(forces).reshape(-1, 2), axis=1).sum())


def rigid_body_modes(points: np.ndarray) -> np.ndarray:
    """Translations along x and y and the infinitesimal rotation (-y, x), shape (3, 2n)."""
    p = np.asarray(points, dtype=float)
    n = len(p)
    modes = np.zeros((3, n, 2))
    modes[0, :, 0] = 1.0
    modes[1, :, 1] = 1.0
    modes[2, :, 0] = -p[:, 1]
    modes[2, :, 1] = p[:, 0]
    return modes.reshape(3, 2 * n)
