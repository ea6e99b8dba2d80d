"""
models/matcher.py

Elastic shape matching: deforms a source polygon onto a target by repeatedly
solving a second-order cone program over boundary displacements.

Each outer iteration linearizes the symmetric-difference area around the
current displacement u0 and minimizes

    sum_i ||S_i u||  +  alpha * F(u)**2  +  beta * ||u - u0||**2

where S is the condensed boundary stiffness and F the linearized area. An
optional per-triangle cone keeps every element's conformal distortion below
a bound. The ICP-like baseline replaces F by closest-point distances.

All work happens on the pair normalized to a unit bounding-box diagonal;
MatchResult reports displacements, forces and areas in original units.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from models.conic import ConicProgram, ConicSolution, add_norm_epigraph, add_square_epigraph, solve
from pipelines.elasticity import (
    SchurOperator,
    StiffnessMatrix,
    assemble_stiffness,
    boundary_forces,
    force_norm,
    p1_gradients,
    recover_interior,
    schur_condense,
)
from pipelines.errors import InputValidationError, NumericalFailure
from pipelines.geometry import Polygon, PolygonSet, is_simple, perimeter, set_area, signed_area
from pipelines.meshing import MeshParams, NodeOrdering, TriMesh, order_nodes, triangulate
from pipelines.preprocess import Normalization, normalize_pair
from pipelines.schemas import IterationRecord, MatchConfig, Method, SolverStatus, Termination
from pipelines.symdiff import DeformedBoundary, SymdiffGradient, area_at, gradient

logger = logging.getLogger(__name__)

ALPHA_NUMERATOR = 10.0
STALL_TOLERANCE = 1e-3  # relative change in area fraction
ESCALATED_BETA_RATIO = 0.125
DISTORTION_MARGIN = 1e-3  # fraction of (bound - 1) held back from the cone

ProgramHook = Callable[[int, ConicProgram], None]


# ---------------------------------------------------------------------------
# Distortion
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TriangleJacobianMaps:
    """M[t] maps u_B to the entries (J11, J12, J21, J22) of J_t - I; shape (F, 4, 2K)."""

    M: np.ndarray

    def evaluate(self, u_B: np.ndarray) -> np.ndarray:
        """Deformation gradients, shape (F, 2, 2)."""
        return np.eye(2) + (self.M @ np.asarray(u_B, dtype=float)).reshape(-1, 2, 2)


def triangle_jacobian_maps(mesh: TriMesh, order: NodeOrdering, A: StiffnessMatrix) -> TriangleJacobianMaps:
    """Compose the P1 gradient of every triangle with the harmonic extension [I; R]."""
    grads, _ = p1_gradients(mesh.nodes[mesh.triangles])  # (F, 3, 2)
    P = np.vstack([np.eye(A.n_boundary_dofs), A.extension])  # (2N, 2K)
    sys_nodes = order.perm[mesh.triangles]  # (F, 3)
    rows = P[2 * sys_nodes[:, :, None] + np.arange(2)]  # (F, 3, 2, 2K): displacement comp j of node a
    M = np.einsum("fajm,fak->fjkm", rows, grads)
    return TriangleJacobianMaps(M.reshape(len(grads), 4, -1))


def similarity_parts(J: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """J = [[a, -b], [b, a]] + [[c, d], [d, -c]]; works on (..., 2, 2) stacks."""
    j11, j12, j21, j22 = J[..., 0, 0], J[..., 0, 1], J[..., 1, 0], J[..., 1, 1]
    return 0.5 * (j11 + j22), 0.5 * (j21 - j12), 0.5 * (j11 - j22), 0.5 * (j12 + j21)


def conformal_distortion(J: np.ndarray) -> float:
    """sigma_max / sigma_min of a 2x2 matrix; inf when singular."""
    cd, _ = distortion_stats(np.asarray(J, dtype=float)[None])
    return float(cd[0])


def distortion_stats(J: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-triangle conformal distortion and flipped flag (det J <= 0)."""
    a, b, c, d = similarity_parts(J)
    sim = np.hypot(a, b)
    anti = np.hypot(c, d)
    s_max = sim + anti
    s_min = np.abs(sim - anti)
    with np.errstate(divide="ignore", invalid="ignore"):
        cd = np.where(s_min > 0, s_max / np.where(s_min > 0, s_min, 1.0), np.inf)
    flipped = np.linalg.det(J) <= 0.0
    return cd, flipped


def distortion_frames(maps: TriangleJacobianMaps, u0: np.ndarray) -> np.ndarray:
    """Rotation angle of the similarity part of each J_t at u0."""
    a, b, _, _ = similarity_parts(maps.evaluate(u0))
    return np.arctan2(b, a)


def add_distortion_constraints(
    p: ConicProgram,
    maps: TriangleJacobianMaps,
    bound: float,
    frames: np.ndarray,
    columns: np.ndarray,
) -> np.ndarray:
    """
    Per triangle, ||(c, d)|| <= k (cos(theta) a + sin(theta) b) with
    k = (b - 1) / (b + 1) for b slightly inside `bound`, so iterates stay
    within the bound up to the solver's feasibility tolerance. Returns the
    auxiliary variable indices.
    """
    if bound <= 1.0:
        raise ValueError("distortion bound must exceed 1")
    inner = 1.0 + (bound - 1.0) * (1.0 - DISTORTION_MARGIN)
    k = (inner - 1.0) / (inner + 1.0)
    M = maps.M
    Ma = 0.5 * (M[:, 0] + M[:, 3])
    Mb = 0.5 * (M[:, 2] - M[:, 1])
    Mc = 0.5 * (M[:, 0] - M[:, 3])
    Md = 0.5 * (M[:, 1] + M[:, 2])
    cos, sin = np.cos(frames)[:, None], np.sin(frames)[:, None]
    rhs = k * (cos * Ma + sin * Mb)
    block = np.stack([rhs, Mc, Md], axis=1).reshape(-1, M.shape[2])  # (3F, 2K)
    offset = np.stack([k * cos[:, 0], np.zeros(len(M)), np.zeros(len(M))], axis=1).ravel()
    w = p.add_affine(block, columns, offset, name="distortion")
    for t in range(len(M)):
        p.add_cone(w[3 * t:3 * t + 3])
    return w


# ---------------------------------------------------------------------------
# Prepared source and state
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ElasticSource:
    """Normalized source polygon with its mesh, condensed stiffness and Jacobian maps."""

    polygon: Polygon
    mesh: TriMesh
    order: NodeOrdering
    stiffness: StiffnessMatrix
    schur: SchurOperator
    jacobians: TriangleJacobianMaps
    area: float
    stage_seconds: dict[str, float] = field(default_factory=dict)

    @property
    def K(self) -> int:
        return self.order.K


@dataclass
class MatchState:
    u0: np.ndarray
    iteration: int
    source: ElasticSource


@dataclass(frozen=True, eq=False)
class Linearization:
    """Affine model F(u) = F0 + grad . (u - u0) of the symmetric-difference area."""

    F0: float
    grad: np.ndarray
    u0: np.ndarray
    detail: Optional[SymdiffGradient] = None

    def value_at(self, u: np.ndarray) -> float:
        return float(self.F0 + self.grad @ (np.asarray(u, dtype=float) - self.u0))


@dataclass(frozen=True, eq=False)
class Fidelity:
    """Squared fidelity ||M u + m0||^2 with its objective weight."""

    M: np.ndarray
    m0: np.ndarray
    weight: float


@dataclass(eq=False)
class MatchResult:
    u_B: np.ndarray
    u_I: np.ndarray
    forces: np.ndarray
    log: list[IterationRecord]
    termination: Termination
    method: Method
    source: Polygon
    target: PolygonSet
    normalization: Normalization
    elastic: ElasticSource
    target_normalized: PolygonSet
    history: list[np.ndarray] = field(default_factory=list)
    stage_seconds: dict[str, float] = field(default_factory=dict)

    @property
    def scale(self) -> float:
        return self.normalization.scale

    @property
    def iterations(self) -> int:
        return len(self.log)

    @property
    def final_fraction(self) -> float:
        return self.log[-1].area_fraction if self.log else float("nan")

    def deformed_source(self) -> Polygon:
        return Polygon(self.source.vertices + self.u_B.reshape(-1, 2))

    def mesh_nodes(self) -> np.ndarray:
        """Mesh node positions in original units."""
        return self.normalization.restore_points(self.elastic.mesh.nodes)

    def mesh_displacements(self) -> np.ndarray:
        """Per mesh node displacement in original units, shape (N, 2)."""
        full = np.concatenate([self.u_B, self.u_I]).reshape(-1, 2)
        return full[self.elastic.order.perm]


# ---------------------------------------------------------------------------
# Setup
# ---------------------------------------------------------------------------


def _aligned_mesh(mesh: TriMesh, polygon: Polygon) -> TriMesh:
    """Rotate a supplied mesh's boundary loop so it starts at the polygon's first vertex."""
    loop = mesh.boundary_loop
    if len(loop) != len(polygon):
        raise InputValidationError(
            f"mesh boundary has {len(loop)} nodes, source has {len(polygon)} vertices"
        )
    tol = 1e-9 * max(1.0, float(np.abs(polygon.vertices).max()))
    hits = np.flatnonzero(np.all(np.abs(mesh.nodes[loop] - polygon.vertices[0]) <= tol, axis=1))
    if hits.size != 1:
        raise InputValidationError("mesh boundary does not contain the source's first vertex")
    loop = np.roll(loop, -int(hits[0]))
    if not np.allclose(mesh.nodes[loop], polygon.vertices, atol=tol, rtol=0.0):
        raise InputValidationError("mesh boundary nodes do not coincide with the source vertices")
    return TriMesh(mesh.nodes, mesh.triangles, loop)


def prepare_source(
    polygon: Polygon,
    cfg: MatchConfig,
    mesh: Optional[TriMesh] = None,
    schur: Optional[SchurOperator] = None,
) -> ElasticSource:
    """
    Mesh (unless supplied), assemble, condense and build Jacobian maps for a
    normalized source. A cached `schur` replaces the condensation; it must
    belong to a mesh with the same boundary node count.
    """
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    if mesh is None:
        mesh = triangulate(polygon, MeshParams(cfg.max_triangle_area, cfg.min_angle_deg))
    else:
        mesh = _aligned_mesh(mesh, polygon)
    timings["mesh"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    order = order_nodes(mesh)
    A = assemble_stiffness(mesh, order, cfg.lame, cfg.bilinear_form)
    if schur is None:
        S = schur_condense(A)
    elif schur.K != order.K or schur.S.shape != (2 * order.K, 2 * order.K):
        raise InputValidationError(
            f"cached Schur complement has K={schur.K}, the source mesh has K={order.K}"
        )
    else:
        logger.info("Using cached Schur complement (K=%d).", schur.K)
        S = schur
    maps = triangle_jacobian_maps(mesh, order, A)
    timings["condense"] = time.perf_counter() - t0
    return ElasticSource(
        polygon=polygon, mesh=mesh, order=order, stiffness=A, schur=S, jacobians=maps,
        area=abs(signed_area(polygon)), stage_seconds=timings,
    )


def default_alpha(area_sum: float) -> float:
    return ALPHA_NUMERATOR / area_sum ** 2


def default_alpha_icp(alpha: float, source: Polygon) -> float:
    return alpha * perimeter(source) ** 2 / len(source)


# ---------------------------------------------------------------------------
# Subproblem
# ---------------------------------------------------------------------------


def linearized_fidelity(
    state: MatchState,
    target: PolygonSet,
    h: Optional[float] = None,
    workers: int = 1,
) -> Linearization:
    """Area at u0 and its normal-reduced gradient."""
    db = DeformedBoundary(state.source.polygon, state.u0)
    grad = gradient(db, target, h=h, workers=workers)
    return Linearization(F0=grad.area, grad=grad.g, u0=np.array(state.u0, dtype=float), detail=grad)


def symdiff_fidelity(lin: Linearization, alpha: float) -> Fidelity:
    return Fidelity(M=lin.grad[None, :], m0=np.array([lin.F0 - lin.grad @ lin.u0]), weight=alpha)


def closest_points_on_boundary(points: np.ndarray, target: PolygonSet) -> np.ndarray:
    """Point-to-segment closest points on all target ring edges."""
    starts = np.vstack([r.polygon.vertices for r in target.rings])
    ends = np.vstack([np.roll(r.polygon.vertices, -1, axis=0) for r in target.rings])
    seg = ends - starts  # (M, 2)
    rel = points[:, None, :] - starts[None, :, :]  # (K, M, 2)
    t = np.clip(np.einsum("kmi,mi->km", rel, seg) / np.einsum("mi,mi->m", seg, seg), 0.0, 1.0)
    proj = starts[None] + t[..., None] * seg[None]
    dist = np.einsum("kmi,kmi->km", points[:, None, :] - proj, points[:, None, :] - proj)
    best = np.argmin(dist, axis=1)
    return proj[np.arange(len(points)), best]


def icp_fidelity(source: Polygon, u0: np.ndarray, target: PolygonSet, weight: float) -> Fidelity:
    """sum_i ||(s_i + u_i) - nn_T(s_i + u0_i)||^2 with correspondences frozen at u0."""
    q = closest_points_on_boundary(source.vertices + u0.reshape(-1, 2), target)
    return Fidelity(M=np.eye(u0.size), m0=(source.vertices - q).ravel(), weight=weight)


def build_subproblem(
    state: MatchState,
    fidelity: Fidelity,
    cfg: MatchConfig,
    beta: Optional[float] = None,
) -> ConicProgram:
    """
    Variables (u, f_1..f_K, d, e); objective sum f_i + weight * d + beta * e,
    with beta defaulting to cfg.beta.

    The d and e epigraphs are always present so every displacement
    coordinate enters a cone, even with zero weights.
    """
    src = state.source
    K = src.K
    p = ConicProgram()
    u = p.add_variables(2 * K, name="u")
    f = p.add_variables(K, name="f", cost=1.0)
    d = p.add_variables(1, name="d", cost=fidelity.weight)
    e = p.add_variables(1, name="e", cost=cfg.beta if beta is None else beta)

    blocks = src.schur.blocks()
    for i in range(K):
        add_norm_epigraph(p, blocks[i], np.zeros(2), int(f[i]), columns=u)
    add_square_epigraph(p, fidelity.M, int(d[0]), columns=u, constant=fidelity.m0)
    add_square_epigraph(p, np.eye(2 * K), int(e[0]), columns=u, constant=-state.u0)

    if cfg.distortion_bound is not None:
        frames = distortion_frames(src.jacobians, state.u0)
        add_distortion_constraints(p, src.jacobians, cfg.distortion_bound, frames, u)
    return p


# ---------------------------------------------------------------------------
# Outer loop
# ---------------------------------------------------------------------------


def _evaluate(
    src: ElasticSource,
    target: PolygonSet,
    norm: Normalization,
    u: np.ndarray,
    iteration: int,
    status: SolverStatus,
    area_sum: float,
) -> IterationRecord:
    db = DeformedBoundary(src.polygon, u)
    area = area_at(db, target)
    forces = boundary_forces(src.schur, u)
    cd, flipped = distortion_stats(src.jacobians.evaluate(u))
    finite = cd[np.isfinite(cd)]
    region_area = db.region().to_shapely().area
    return IterationRecord(
        iter=iteration,
        area_abs=norm.to_original_area(area),
        area_fraction=area / area_sum,
        force_norm=force_norm(forces) * norm.scale,
        max_cd=float(cd.max()),
        mean_cd=float(finite.mean()) if finite.size else float("inf"),
        flipped=int(flipped.sum()),
        solver_status=status,
        area_ratio=float(region_area / src.area),
        ring_simple=db.is_valid,
    )


def recompute_record(result: MatchResult, index: int) -> IterationRecord:
    """Rebuild a logged IterationRecord from its stored displacement alone."""
    rec = result.log[index]
    area_sum = result.elastic.area + set_area(result.target_normalized)
    return _evaluate(
        result.elastic, result.target_normalized, result.normalization,
        result.history[index], rec.iter, rec.solver_status, area_sum,
    )


def _run(
    src: ElasticSource,
    target: PolygonSet,
    norm: Normalization,
    cfg: MatchConfig,
    method: Method,
    source_original: Polygon,
    target_original: PolygonSet,
    initial: Optional[np.ndarray] = None,
    on_program: Optional[ProgramHook] = None,
) -> MatchResult:
    K = src.K
    area_sum = src.area + set_area(target)
    alpha = cfg.alpha or default_alpha(area_sum)
    alpha_icp = cfg.alpha_icp or default_alpha_icp(alpha, src.polygon)
    beta = cfg.beta
    can_escalate = cfg.alpha is None and cfg.stall_escalation is not None
    u0 = np.zeros(2 * K) if initial is None else np.asarray(initial, dtype=float).copy()
    if u0.shape != (2 * K,):
        raise InputValidationError(f"initial displacement must have length {2 * K}")

    log: list[IterationRecord] = []
    history: list[np.ndarray] = []
    best_u, best_fraction = u0.copy(), np.inf
    termination: Termination = "max_iters"
    t_loop = time.perf_counter()

    for it in range(1, cfg.max_iters + 1):
        state = MatchState(u0=u0, iteration=it, source=src)
        if method == "symdiff":
            lin = linearized_fidelity(state, target, h=cfg.fd_step, workers=cfg.workers)
            F0 = lin.F0
        else:
            F0 = area_at(DeformedBoundary(src.polygon, u0), target)
        fraction0 = F0 / area_sum
        if fraction0 < best_fraction:
            best_u, best_fraction = u0.copy(), fraction0
        if it == 1 and fraction0 < cfg.stop_fraction:
            log.append(_evaluate(src, target, norm, u0, it, "skipped", area_sum))
            history.append(u0.copy())
            termination = "threshold"
            break

        if method == "symdiff":
            fidelity = symdiff_fidelity(lin, alpha)
        else:
            fidelity = icp_fidelity(src.polygon, u0, target, alpha_icp)
        program = build_subproblem(state, fidelity, cfg, beta=beta)
        if on_program is not None:
            on_program(it, program)

        try:
            sol: ConicSolution = solve(program, tol=cfg.solver_tol, max_iter=cfg.solver_max_iter)
            status: SolverStatus = sol.status
        except NumericalFailure as exc:
            logger.error("Iteration %d: solver failure (%s); trace=%s", it, exc, exc.trace)
            status = "numerical_failure"
        if status in ("infeasible", "unbounded", "numerical_failure"):
            log.append(_evaluate(src, target, norm, u0, it, status, area_sum))
            history.append(u0.copy())
            termination = "solver_failure"
            break
        if status == "max_iter":
            logger.warning("Iteration %d: conic solver hit its iteration limit; accepting iterate.", it)

        u0 = sol.x[program.blocks["u"]]
        record = _evaluate(src, target, norm, u0, it, status, area_sum)
        log.append(record)
        history.append(u0.copy())
        logger.info(
            "[%s] iter %d: fraction=%.5f force=%.4g max_cd=%.3f status=%s",
            method, it, record.area_fraction, record.force_norm, record.max_cd, status,
        )
        if record.area_fraction < best_fraction:
            best_u, best_fraction = u0.copy(), record.area_fraction
        if not record.ring_simple:
            logger.warning("Iteration %d: deformed boundary self-intersects.", it)
        if record.area_fraction < cfg.stop_fraction:
            termination = "threshold"
            break
        if record.area_ratio < cfg.collapse_ratio:
            logger.warning("Iteration %d: source area collapsed to %.3f of its original.", it, record.area_ratio)
            termination = "collapse"
            break
        if can_escalate and record.area_fraction > (1.0 - STALL_TOLERANCE) * fraction0:
            # stalled: continue with stiffer weights
            alpha *= cfg.stall_escalation
            beta = max(beta, ESCALATED_BETA_RATIO * alpha)
            if cfg.alpha_icp is None:
                alpha_icp = default_alpha_icp(alpha, src.polygon)
            can_escalate = False
            logger.info("[%s] iter %d: no progress at fraction %.5f; alpha -> %.4g, beta -> %.4g",
                        method, it, record.area_fraction, alpha, beta)

    final_u = best_u if termination == "solver_failure" else u0
    recovered = recover_interior(src.stiffness, final_u)
    forces = boundary_forces(src.schur, final_u)
    logger.info("[%s] finished after %d iterations: %s", method, len(log), termination)

    timings = dict(src.stage_seconds)
    timings["iterations"] = time.perf_counter() - t_loop
    return MatchResult(
        u_B=norm.to_original_vector(final_u),
        u_I=norm.to_original_vector(recovered.u_I),
        forces=norm.to_original_vector(forces),
        log=log,
        termination=termination,
        method=method,
        source=source_original,
        target=target_original,
        normalization=norm,
        elastic=src,
        target_normalized=target,
        history=history,
        stage_seconds=timings,
    )


def _prepare_pair(source: Polygon, target: Polygon | PolygonSet):
    if not is_simple(source):
        raise InputValidationError("source polygon is not simple")
    if signed_area(source) <= 0.0:
        raise InputValidationError("source polygon must be counter-clockwise")
    target_set = target if isinstance(target, PolygonSet) else PolygonSet.from_polygon(target)
    if target_set.is_empty:
        raise InputValidationError("target is empty")
    return target_set


def _normalized_mesh(mesh: Optional[TriMesh], norm: Normalization) -> Optional[TriMesh]:
    if mesh is None:
        return None
    return TriMesh(norm.points(mesh.nodes), mesh.triangles, mesh.boundary_loop)


def _match(source, target, cfg, mesh, initial, method: Method, schur=None, on_program=None) -> MatchResult:
    cfg = cfg or MatchConfig()
    target_set = _prepare_pair(source, target)
    norm, src, tgt = normalize_pair(source, target_set)
    elastic = prepare_source(src, cfg, _normalized_mesh(mesh, norm), schur)
    init = None if initial is None else norm.to_normalized_vector(initial)
    return _run(elastic, tgt, norm, cfg, method, source, target_set, init, on_program=on_program)


def match(
    source: Polygon,
    target: Polygon | PolygonSet,
    cfg: Optional[MatchConfig] = None,
    mesh: Optional[TriMesh] = None,
    initial: Optional[np.ndarray] = None,
    schur: Optional[SchurOperator] = None,
    on_program: Optional[ProgramHook] = None,
) -> MatchResult:
    """
    Symmetric-difference elastic matching from the given alignment (u0 = 0
    unless `initial`). `on_program(iteration, program)` sees every subproblem
    before it is solved.
    """
    return _match(source, target, cfg, mesh, initial, "symdiff", schur, on_program)


def icp_like_match(
    source: Polygon,
    target: Polygon | PolygonSet,
    cfg: Optional[MatchConfig] = None,
    mesh: Optional[TriMesh] = None,
    initial: Optional[np.ndarray] = None,
    schur: Optional[SchurOperator] = None,
    on_program: Optional[ProgramHook] = None,
) -> MatchResult:
    """Same loop with closest-point fidelity; correspondences are recomputed every iteration."""
    return _match(source, target, cfg, mesh, initial, "icp_like", schur, on_program)


def track(
    source: Polygon,
    targets: Sequence[Polygon | PolygonSet],
    cfg: Optional[MatchConfig] = None,
    mesh: Optional[TriMesh] = None,
    method: Method = "symdiff",
    schur: Optional[SchurOperator] = None,
) -> list[MatchResult]:
    """Match a sequence of targets, warm-starting each frame from the previous displacement."""
    cfg = cfg or MatchConfig()
    if not targets:
        return []
    target_sets = [_prepare_pair(source, t) for t in targets]
    joint = PolygonSet(tuple(r for t in target_sets for r in t.rings))
    norm, src, _ = normalize_pair(source, joint)
    elastic = prepare_source(src, cfg, _normalized_mesh(mesh, norm), schur)

    results: list[MatchResult] = []
    u = None
    for frame, tgt in enumerate(target_sets):
        res = _run(elastic, norm.polygon_set(tgt), norm, cfg, method, source, tgt, u)
        logger.info("Frame %d: %s after %d iterations", frame, res.termination, res.iterations)
        results.append(res)
        u = norm.to_normalized_vector(res.u_B)
    return results


def initial_forces(
    source: Polygon,
    target: Polygon | PolygonSet,
    cfg: Optional[MatchConfig] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Driving forces at u = 0 in original units, shape (K, 2) each: the
    symmetric-difference restoring force and the closest-point force.
    """
    cfg = cfg or MatchConfig()
    target_set = _prepare_pair(source, target)
    norm, src, tgt = normalize_pair(source, target_set)
    grad = gradient(DeformedBoundary(src, np.zeros(2 * len(src))), tgt, h=cfg.fd_step, workers=cfg.workers)
    # area gradients scale with length: d(area)/d(u) ~ scale
    restoring = norm.to_original_vector(-grad.g).reshape(-1, 2)
    closest = closest_points_on_boundary(src.vertices, tgt) - src.vertices
    return restoring, norm.to_original_vector(closest)
