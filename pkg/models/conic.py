"""
models/conic.py

Second-order cone programs in standard form and their solver runner.

    minimize    c^T x
    subject to  E x = b
                x[idx] in Q   for every cone index list idx (first entry is t)
                x[j] >= 0     for every nonnegative index

Q is the second-order cone {(t, z) : ||z||_2 <= t}. Builders add auxiliary
variables for affine expressions so every cone lies on variables directly.

`solve` presolves the program (zero rows, fixed variables, Ruiz
equilibration) and hands the reduced problem to cvxopt's conelp, a
primal-dual interior-point method with Nesterov-Todd scaling.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Literal, Optional, Sequence, TextIO

import cvxopt
import numpy as np
import scipy.sparse as sp
from cvxopt import solvers

from pipelines.errors import DimensionMismatch, NumericalFailure

logger = logging.getLogger(__name__)

Status = Literal["optimal", "infeasible", "unbounded", "max_iter"]

DEFAULT_TOL: float = 1e-8
DEFAULT_MAX_ITER: int = 100
RUIZ_PASSES: int = 3


# ---------------------------------------------------------------------------
# Program
# ---------------------------------------------------------------------------


@dataclass
class ConicProgram:
    n: int = 0
    _cost: list[float] = field(default_factory=list)
    _rows: list[np.ndarray] = field(default_factory=list)
    _cols: list[np.ndarray] = field(default_factory=list)
    _vals: list[np.ndarray] = field(default_factory=list)
    _rhs: list[np.ndarray] = field(default_factory=list)
    m: int = 0
    cones: list[np.ndarray] = field(default_factory=list)
    nonneg: list[np.ndarray] = field(default_factory=list)
    blocks: dict[str, np.ndarray] = field(default_factory=dict)
    _in_cone: set[int] = field(default_factory=set)

    def add_variables(self, count: int, name: Optional[str] = None, cost: float | Sequence[float] = 0.0) -> np.ndarray:
        idx = np.arange(self.n, self.n + count)
        costs = np.broadcast_to(np.asarray(cost, dtype=float), (count,))
        self._cost.extend(costs.tolist())
        self.n += count
        if name is not None:
            self.blocks[name] = idx
        return idx

    @property
    def c(self) -> np.ndarray:
        return np.asarray(self._cost, dtype=float)

    def set_cost(self, idx, value) -> None:
        for j, v in zip(np.atleast_1d(idx), np.broadcast_to(np.asarray(value, dtype=float), np.shape(np.atleast_1d(idx)))):
            self._cost[int(j)] = float(v)

    def add_equalities(self, matrix, columns: Sequence[int], rhs) -> None:
        """Append rows matrix @ x[columns] = rhs."""
        M = sp.coo_matrix(np.atleast_2d(matrix) if not sp.issparse(matrix) else matrix)
        columns = np.asarray(columns, dtype=np.int64)
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        if M.shape[1] != len(columns) or M.shape[0] != len(rhs):
            raise DimensionMismatch(
                f"equality block {M.shape} does not match {len(columns)} columns and {len(rhs)} rows"
            )
        if columns.size and (columns.min() < 0 or columns.max() >= self.n):
            raise DimensionMismatch("equality references an unknown variable")
        self._rows.append(M.row.astype(np.int64) + self.m)
        self._cols.append(columns[M.col])
        self._vals.append(M.data.astype(float))
        self._rhs.append(rhs)
        self.m += M.shape[0]

    def add_affine(self, matrix, columns: Sequence[int], offset, name: Optional[str] = None) -> np.ndarray:
        """New variables w with w = matrix @ x[columns] + offset."""
        M = sp.csr_matrix(np.atleast_2d(matrix) if not sp.issparse(matrix) else matrix, dtype=float)
        offset = np.broadcast_to(np.asarray(offset, dtype=float), (M.shape[0],))
        if M.shape[1] != len(columns):
            raise DimensionMismatch(f"affine map has {M.shape[1]} columns for {len(columns)} variables")
        w = self.add_variables(M.shape[0], name=name)
        block = sp.hstack([sp.identity(M.shape[0], format="csr"), -M], format="coo")
        self.add_equalities(block, np.concatenate([w, np.asarray(columns, dtype=np.int64)]), offset)
        return w

    def add_cone(self, indices: Sequence[int]) -> None:
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size < 1:
            raise DimensionMismatch("cone needs at least one entry")
        if idx.min() < 0 or idx.max() >= self.n:
            raise DimensionMismatch("cone references an unknown variable")
        members = set(idx.tolist())
        if len(members) != idx.size or members & self._in_cone:
            raise DimensionMismatch("cone slices must be disjoint")
        self._in_cone |= members
        self.cones.append(idx)

    def add_nonneg(self, indices: Sequence[int]) -> None:
        self.nonneg.append(np.asarray(indices, dtype=np.int64))

    def in_cone(self, j: int) -> bool:
        return int(j) in self._in_cone

    def equality_system(self) -> tuple[sp.csr_matrix, np.ndarray]:
        if not self._rows:
            return sp.csr_matrix((0, self.n)), np.zeros(0)
        E = sp.coo_matrix(
            (np.concatenate(self._vals), (np.concatenate(self._rows), np.concatenate(self._cols))),
            shape=(self.m, self.n),
        ).tocsr()
        E.sum_duplicates()
        E.eliminate_zeros()
        return E, np.concatenate(self._rhs)


@dataclass(frozen=True, eq=False)
class ConicSolution:
    x: np.ndarray
    status: Status
    objective: float
    primal_residual: float
    dual_residual: float
    gap: float
    iterations: int


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def _resolve_columns(p: ConicProgram, L, columns) -> tuple[sp.csr_matrix, np.ndarray]:
    L = sp.csr_matrix(np.atleast_2d(L) if not sp.issparse(L) else L, dtype=float)
    cols = np.arange(p.n) if columns is None else np.asarray(columns, dtype=np.int64)
    if L.shape[1] != len(cols):
        raise DimensionMismatch(f"linear map has {L.shape[1]} columns, expected {len(cols)}")
    return L, cols


def add_norm_epigraph(p: ConicProgram, rows, offset, bound_var: int, columns=None) -> np.ndarray:
    """Append ||rows @ x[columns] + offset||_2 <= x[bound_var]; returns the auxiliary indices."""
    L, cols = _resolve_columns(p, rows, columns)
    offset = np.asarray(offset, dtype=float).ravel()
    if offset.shape != (L.shape[0],):
        raise DimensionMismatch(f"offset has length {offset.size}, map has {L.shape[0]} rows")
    if p.in_cone(bound_var):
        raise DimensionMismatch(f"bound variable {bound_var} already belongs to a cone")
    z = p.add_affine(L, cols, offset)
    p.add_cone(np.concatenate([[bound_var], z]))
    return z


def add_square_epigraph(p: ConicProgram, expr, bound_var: int, columns=None, constant=0.0) -> np.ndarray:
    """
    Append ||expr @ x[columns] + constant||^2 <= x[bound_var] as the cone
    (d + 1, 2 (expr x + constant), d - 1).
    """
    M, cols = _resolve_columns(p, expr, columns)
    constant = np.broadcast_to(np.asarray(constant, dtype=float), (M.shape[0],))
    if p.in_cone(bound_var):
        raise DimensionMismatch(f"bound variable {bound_var} already belongs to a cone")
    d = np.array([bound_var])
    head = p.add_affine([[1.0]], d, 1.0)
    mid = p.add_affine(2.0 * M, cols, 2.0 * constant)
    tail = p.add_affine([[1.0]], d, -1.0)
    p.add_cone(np.concatenate([head, mid, tail]))
    return np.concatenate([head, mid, tail])


# ---------------------------------------------------------------------------
# Presolve
# ---------------------------------------------------------------------------


@dataclass
class _Reduced:
    live: np.ndarray  # bool mask over variables
    fixed: np.ndarray  # values of fixed variables
    rows: np.ndarray  # bool mask over equality rows
    E: sp.csr_matrix
    b: np.ndarray
    status: Optional[Status] = None


def _presolve(p: ConicProgram, tol: float) -> _Reduced:
    E, b = p.equality_system()
    n, m = p.n, p.m
    live = np.ones(n, dtype=bool)
    fixed = np.zeros(n)
    rows = np.ones(m, dtype=bool)
    feas_tol = 1e3 * tol

    for _ in range(n + 1):
        masked = E[:, live] if m else E
        rhs = b - E @ fixed
        nnz = np.diff(sp.csr_matrix(masked).indptr) if m else np.zeros(0, dtype=int)
        empty = rows & (nnz == 0)
        if np.any(np.abs(rhs[empty]) > feas_tol * (1.0 + np.abs(b[empty]))):
            logger.debug("Presolve: inconsistent zero row")
            return _Reduced(live, fixed, rows, E, b, status="infeasible")
        rows &= ~empty

        singles = np.flatnonzero(rows & (nnz == 1))
        if singles.size == 0:
            break
        live_cols = np.flatnonzero(live)
        sub = sp.csr_matrix(masked)
        assigned: dict[int, float] = {}
        for r in singles:
            lo, hi = sub.indptr[r], sub.indptr[r + 1]
            j = int(live_cols[sub.indices[lo]])
            value = rhs[r] / sub.data[lo]
            if j in assigned and abs(assigned[j] - value) > feas_tol * (1.0 + abs(value)):
                return _Reduced(live, fixed, rows, E, b, status="infeasible")
            assigned[j] = value
            rows[r] = False
        for j, value in assigned.items():
            fixed[j] = value
            live[j] = False

    for idx in p.nonneg:
        bad = idx[~live[idx]]
        if np.any(fixed[bad] < -feas_tol):
            return _Reduced(live, fixed, rows, E, b, status="infeasible")

    c = p.c
    in_rows = np.zeros(n, dtype=bool)
    if rows.any():
        in_rows[np.unique(E[rows].indices)] = True
    constrained = in_rows.copy()
    for idx in p.cones:
        constrained[idx] = True
    for idx in p.nonneg:
        constrained[idx] = True
    free = live & ~constrained
    if np.any(c[free] != 0.0):
        return _Reduced(live, fixed, rows, E, b, status="unbounded")
    live &= ~free

    logger.debug("Presolve: %d/%d variables live, %d/%d rows kept", live.sum(), n, rows.sum(), m)
    return _Reduced(live, fixed, rows, E[rows][:, live], (b - E @ fixed)[rows])


def _ruiz(E: sp.csr_matrix, groups: list[np.ndarray], passes: int = RUIZ_PASSES) -> tuple[np.ndarray, np.ndarray]:
    """Row and column equilibration scales; columns in one group share a scale."""
    m, n = E.shape
    r = np.ones(m)
    d = np.ones(n)
    if E.nnz == 0:
        return r, d
    A = abs(E).tocsr()
    for _ in range(passes):
        S = sp.diags(r) @ A @ sp.diags(d)
        row_max = np.asarray(S.max(axis=1).todense()).ravel()
        col_max = np.asarray(S.max(axis=0).todense()).ravel()
        r = r / np.sqrt(np.where(row_max > 0, row_max, 1.0))
        d = d / np.sqrt(np.where(col_max > 0, col_max, 1.0))
        for g in groups:
            if g.size:
                d[g] = np.exp(np.mean(np.log(d[g])))
    return r, d


# ---------------------------------------------------------------------------
# Solve
# ---------------------------------------------------------------------------


def _to_cvxopt(M: sp.spmatrix) -> cvxopt.spmatrix:
    M = sp.coo_matrix(M)
    return cvxopt.spmatrix(M.data.tolist(), M.row.tolist(), M.col.tolist(), size=(int(M.shape[0]), int(M.shape[1])))


def _primal_residual(p: ConicProgram, x: np.ndarray) -> float:
    E, b = p.equality_system()
    res = 0.0
    if p.m:
        res = float(np.abs(E @ x - b).max() / (1.0 + np.abs(b).max()))
    for idx in p.cones:
        t, z = x[idx[0]], x[idx[1:]]
        res = max(res, float(np.linalg.norm(z) - t) / (1.0 + abs(t)))
    for idx in p.nonneg:
        if idx.size:
            res = max(res, float(-x[idx].min()))
    return max(res, 0.0)


def _failed(p: ConicProgram, status: Status) -> ConicSolution:
    return ConicSolution(
        x=np.full(p.n, np.nan), status=status, objective=float("nan"),
        primal_residual=float("nan"), dual_residual=float("nan"), gap=float("nan"), iterations=0,
    )


def solve(p: ConicProgram, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> ConicSolution:
    """
    Solve a conic program to tolerance `tol`.

    Raises:
        NumericalFailure: the interior-point iteration broke down before
            reaching a certificate or the iteration limit.
    """
    red = _presolve(p, tol)
    if red.status is not None:
        logger.info("Presolve decided the program: %s", red.status)
        return _failed(p, red.status)

    live_idx = np.flatnonzero(red.live)
    if live_idx.size == 0:
        # everything fixed by presolve
        x = red.fixed.copy()
        if _primal_residual(p, x) > 1e3 * tol:
            return _failed(p, "infeasible")
        return ConicSolution(
            x=x, status="optimal", objective=float(p.c @ x), primal_residual=_primal_residual(p, x),
            dual_residual=0.0, gap=0.0, iterations=0,
        )
    pos = np.full(p.n, -1, dtype=np.int64)
    pos[live_idx] = np.arange(live_idx.size)

    groups = [pos[idx][pos[idx] >= 0] for idx in p.cones]
    r, d = _ruiz(red.E, groups)
    E_s = sp.diags(r) @ red.E @ sp.diags(d) if red.E.shape[0] else sp.csr_matrix((0, live_idx.size))
    b_s = r * red.b
    c_live = p.c[live_idx] * d
    c_scale = (float(np.abs(c_live).max()) if c_live.size else 0.0) or 1.0
    c_s = c_live / c_scale

    # G rows: nonnegativity first, then one block per cone.
    g_rows: list[int] = []
    g_cols: list[int] = []
    h: list[float] = []
    n_lin = 0
    for idx in p.nonneg:
        for j in idx:
            if pos[j] >= 0:
                g_rows.append(n_lin)
                g_cols.append(int(pos[j]))
                h.append(0.0)
                n_lin += 1
    q_dims: list[int] = []
    row = n_lin
    for idx, g in zip(p.cones, groups):
        sigma = float(d[g[0]]) if g.size else 1.0
        if g.size == 0:
            vals = red.fixed[idx]
            if np.linalg.norm(vals[1:]) > vals[0] + 1e3 * tol * (1.0 + abs(vals[0])):
                return _failed(p, "infeasible")
            continue
        for j in idx:
            if pos[j] >= 0:
                g_rows.append(row)
                g_cols.append(int(pos[j]))
                h.append(0.0)
            else:
                h.append(red.fixed[j] / sigma)
            row += 1
        q_dims.append(len(idx))

    n_live = live_idx.size
    G = sp.coo_matrix((-np.ones(len(g_rows)), (g_rows, g_cols)), shape=(row, n_live))
    dims = {"l": n_lin, "q": q_dims, "s": []}
    options = {"abstol": tol, "reltol": tol, "feastol": tol, "maxiters": max_iter, "show_progress": False}
    logger.debug("Conic solve: %d variables, %d equalities, %d cones", n_live, E_s.shape[0], len(q_dims))

    try:
        sol = solvers.conelp(
            cvxopt.matrix(c_s), _to_cvxopt(G), cvxopt.matrix(np.asarray(h, dtype=float)), dims,
            _to_cvxopt(E_s), cvxopt.matrix(b_s.reshape(-1, 1) if b_s.size else np.zeros((0, 1))),
            options=options,
        )
    except (ArithmeticError, ValueError) as exc:
        raise NumericalFailure(f"interior-point solve failed: {exc}",
                               trace=[{"variables": n_live, "equalities": int(E_s.shape[0])}]) from exc

    trace: list[dict[str, Any]] = [{
        "status": sol["status"],
        "iterations": sol.get("iterations"),
        "gap": sol.get("gap"),
        "primal_infeasibility": sol.get("primal infeasibility"),
        "dual_infeasibility": sol.get("dual infeasibility"),
    }]
    iterations = int(sol.get("iterations") or 0)
    raw = sol["status"]
    if raw == "optimal":
        status: Status = "optimal"
    elif raw == "primal infeasible":
        return _failed(p, "infeasible")
    elif raw == "dual infeasible":
        return _failed(p, "unbounded")
    elif iterations >= max_iter:
        status = "max_iter"
    else:
        raise NumericalFailure("interior-point iteration stalled (singular KKT system)", trace=trace)

    if sol["x"] is None:
        raise NumericalFailure("solver returned no primal point", trace=trace)
    y = np.asarray(sol["x"], dtype=float).ravel()
    x = red.fixed.copy()
    x[live_idx] = d * y
    if not np.all(np.isfinite(x)):
        raise NumericalFailure("solver returned non-finite values", trace=trace)

    return ConicSolution(
        x=x,
        status=status,
        objective=float(p.c @ x),
        primal_residual=_primal_residual(p, x),
        dual_residual=float(sol.get("dual infeasibility") or 0.0),
        gap=float(sol.get("gap") or 0.0) * c_scale,
        iterations=iterations,
    )


# ---------------------------------------------------------------------------
# Debug dump
# ---------------------------------------------------------------------------


def dump_program(p: ConicProgram, stream: TextIO) -> None:
    """Plain-text listing: sizes, costs, equality triplets, right-hand side, cones."""
    E, b = p.equality_system()
    coo = E.tocoo()
    stream.write(f"CONIC {p.n} {p.m} {len(p.cones)} {sum(len(i) for i in p.nonneg)}\n")
    stream.write("c " + " ".join(repr(float(v)) for v in p.c) + "\n")
    for i, j, v in zip(coo.row, coo.col, coo.data):
        stream.write(f"E {i} {j} {float(v)!r}\n")
    stream.write("b " + " ".join(repr(float(v)) for v in b) + "\n")
    for idx in p.cones:
        stream.write("Q " + " ".join(str(int(j)) for j in idx) + "\n")
    for idx in p.nonneg:
        stream.write("L " + " ".join(str(int(j)) for j in idx) + "\n")
