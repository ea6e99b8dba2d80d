import io

import numpy as np
import pytest

from models.conic import ConicProgram, add_norm_epigraph, add_square_epigraph, dump_program, solve
from pipelines.errors import DimensionMismatch


def test_linear_objective_over_unit_disk():
    p = ConicProgram()
    x = p.add_variables(2, name="x", cost=1.0)
    t = p.add_variables(1, name="t")
    p.add_equalities([[1.0]], t, [1.0])
    add_norm_epigraph(p, np.eye(2), np.zeros(2), int(t[0]), columns=x)

    sol = solve(p)
    assert sol.status == "optimal"
    np.testing.assert_allclose(sol.x[x], -np.sqrt(0.5), atol=1e-6)
    assert sol.objective == pytest.approx(-np.sqrt(2.0), abs=1e-6)
    assert sol.primal_residual < 1e-6


def test_square_epigraph():
    # minimize (x - 2)^2 + x  ->  x = 1.5, value 1.75
    p = ConicProgram()
    x = p.add_variables(1, name="x", cost=1.0)
    d = p.add_variables(1, name="d", cost=1.0)
    add_square_epigraph(p, [[1.0]], int(d[0]), columns=x, constant=-2.0)

    sol = solve(p)
    assert sol.status == "optimal"
    assert sol.x[x][0] == pytest.approx(1.5, abs=1e-5)
    assert sol.objective == pytest.approx(1.75, abs=1e-5)


def test_sum_of_norms_with_proximity():
    # minimize ||x - a|| + ||x - b|| + (x - c)^2 in 2D: the minimizer lies on segment ab
    a, b = np.array([0.0, 0.0]), np.array([2.0, 0.0])
    p = ConicProgram()
    x = p.add_variables(2, name="x")
    f = p.add_variables(2, name="f", cost=1.0)
    e = p.add_variables(1, name="e", cost=1.0)
    add_norm_epigraph(p, np.eye(2), -a, int(f[0]), columns=x)
    add_norm_epigraph(p, np.eye(2), -b, int(f[1]), columns=x)
    add_square_epigraph(p, np.eye(2), int(e[0]), columns=x, constant=-np.array([0.5, 0.0]))

    sol = solve(p)
    assert sol.status == "optimal"
    np.testing.assert_allclose(sol.x[x], [0.5, 0.0], atol=1e-5)
    assert sol.objective == pytest.approx(2.0, abs=1e-5)


def test_conflicting_equalities_are_infeasible():
    p = ConicProgram()
    x = p.add_variables(1, cost=1.0)
    p.add_equalities([[1.0]], x, [1.0])
    p.add_equalities([[1.0]], x, [2.0])
    assert solve(p).status == "infeasible"


def test_fixed_cone_violation_is_infeasible():
    p = ConicProgram()
    v = p.add_variables(3)
    p.add_equalities(np.eye(3), v, [1.0, 2.0, 0.0])
    p.add_cone(v)
    assert solve(p).status == "infeasible"


def test_free_variable_with_cost_is_unbounded():
    p = ConicProgram()
    p.add_variables(1, cost=-1.0)
    sol = solve(p)
    assert sol.status == "unbounded"
    assert np.all(np.isnan(sol.x))


def test_cone_slices_must_be_disjoint():
    p = ConicProgram()
    v = p.add_variables(4)
    p.add_cone(v[:3])
    with pytest.raises(DimensionMismatch):
        p.add_cone(v[2:])
    with pytest.raises(DimensionMismatch):
        p.add_cone([7])


def test_equality_shape_is_checked():
    p = ConicProgram()
    v = p.add_variables(2)
    with pytest.raises(DimensionMismatch):
        p.add_equalities(np.eye(2), v, [1.0])
    with pytest.raises(DimensionMismatch):
        p.add_equalities(np.eye(3), np.arange(3), np.zeros(3))


def test_dump_program_header():
    p = ConicProgram()
    x = p.add_variables(2, cost=1.0)
    t = p.add_variables(1)
    add_norm_epigraph(p, np.eye(2), np.zeros(2), int(t[0]), columns=x)
    buf = io.StringIO()
    dump_program(p, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == f"CONIC {p.n} {p.m} 1 0"
    assert lines[1].startswith("c ")
    assert any(line.startswith("Q ") for line in lines)


def test_norm_of_fixed_vector():
    # t >= ||(3, 4)||  ->  t = 5
    p = ConicProgram()
    t = p.add_variables(1, name="t", cost=1.0)
    z = p.add_variables(2, name="z")
    p.add_equalities([[1.0, 1.0], [1.0, -1.0]], z, [7.0, -1.0])
    p.add_cone(np.concatenate([t, z]))

    sol = solve(p)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(5.0, abs=1e-7)


def test_free_center_reaches_zero_norm():
    p = ConicProgram()
    x = p.add_variables(2, name="x")
    t = p.add_variables(1, name="t", cost=1.0)
    add_norm_epigraph(p, np.eye(2), -np.ones(2), int(t[0]), columns=x)

    sol = solve(p)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(0.0, abs=1e-7)
    np.testing.assert_allclose(sol.x[x], [1.0, 1.0], atol=1e-6)


@pytest.mark.parametrize("constant, expected", [(1.0, 1.0), (0.0, 0.0), (3.0, 9.0)])
def test_square_epigraph_of_constant(constant, expected):
    p = ConicProgram()
    x = p.add_variables(1, name="x")
    d = p.add_variables(1, name="d", cost=1.0)
    add_square_epigraph(p, [[0.0]], int(d[0]), columns=x, constant=constant)

    sol = solve(p)
    assert sol.status == "optimal"
    assert sol.x[d][0] == pytest.approx(expected, abs=1e-7)


def test_negative_bound_on_a_norm_is_infeasible():
    # t <= -1 and t >= ||z||
    p = ConicProgram()
    t = p.add_variables(1, name="t", cost=1.0)
    z = p.add_variables(2, name="z")
    s = p.add_variables(1, name="s")
    p.add_nonneg(s)
    p.add_equalities([[1.0, 1.0]], np.concatenate([t, s]), [-1.0])
    p.add_cone(np.concatenate([t, z]))

    sol = solve(p)
    assert sol.status == "infeasible"
    assert np.all(np.isnan(sol.x))


def test_two_group_lasso_optimality():
    # minimize ||x_1|| + ||x_2|| subject to the four entries summing to 2
    p = ConicProgram()
    x = p.add_variables(4, name="x")
    f = p.add_variables(2, name="f", cost=1.0)
    p.add_equalities([[1.0, 1.0, 1.0, 1.0]], x, [2.0])
    for g in range(2):
        add_norm_epigraph(p, np.eye(2), np.zeros(2), int(f[g]), columns=x[2 * g:2 * g + 2])

    sol = solve(p)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(np.sqrt(2.0), abs=1e-7)
    xs = sol.x[x].reshape(2, 2)
    assert xs.sum() == pytest.approx(2.0, abs=1e-8)
    # stationarity: every active group points along the multiplier direction (1, 1) / sqrt(2)
    for group in xs:
        if np.linalg.norm(group) > 1e-4:
            np.testing.assert_allclose(group / np.linalg.norm(group), [np.sqrt(0.5)] * 2, atol=1e-4)


def _group_lasso_program(A, b, rho, groups):
    p = ConicProgram()
    x = p.add_variables(A.shape[1], name="x")
    f = p.add_variables(len(groups), name="f", cost=rho)
    d = p.add_variables(1, name="d", cost=1.0)
    for k, g in enumerate(groups):
        add_norm_epigraph(p, np.eye(len(g)), np.zeros(len(g)), int(f[k]), columns=x[g])
    add_square_epigraph(p, A, int(d[0]), columns=x, constant=-b)
    return p, x


def _group_lasso_reference(A, b, rho, groups, iterations=20000):
    """Proximal gradient with block soft-thresholding."""
    L = 2.0 * np.linalg.norm(A, 2) ** 2
    x = np.zeros(A.shape[1])
    for _ in range(iterations):
        v = x - 2.0 * A.T @ (A @ x - b) / L
        for g in groups:
            norm = np.linalg.norm(v[g])
            v[g] = 0.0 if norm <= rho / L else (1.0 - rho / (L * norm)) * v[g]
        x = v
    return x


def _group_lasso_value(A, b, rho, groups, x):
    return float(np.sum((A @ x - b) ** 2) + rho * sum(np.linalg.norm(x[g]) for g in groups))


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_random_group_lasso_matches_proximal_gradient(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(12, 8))
    b = rng.normal(size=12)
    groups = [np.arange(2 * k, 2 * k + 2) for k in range(4)]
    p, x = _group_lasso_program(A, b, 0.5, groups)
    assert p.n <= 50

    sol = solve(p)
    assert sol.status == "optimal"
    reference = _group_lasso_reference(A, b, 0.5, groups)
    value = _group_lasso_value(A, b, 0.5, groups, reference)
    assert sol.objective == pytest.approx(value, rel=1e-6, abs=1e-7)
    np.testing.assert_allclose(sol.x[x], reference, atol=1e-4)


def test_repeated_solves_are_identical():
    rng = np.random.default_rng(11)
    A, b = rng.normal(size=(12, 8)), rng.normal(size=12)
    groups = [np.arange(2 * k, 2 * k + 2) for k in range(4)]
    p, _ = _group_lasso_program(A, b, 0.5, groups)
    first, second = solve(p), solve(p)
    assert np.array_equal(first.x, second.x)
    assert first.iterations == second.iterations
    assert first.objective == second.objective


@pytest.mark.parametrize("factor", [4.0, 7.3])
def test_scaled_cost_keeps_the_minimizer(factor):
    rng = np.random.default_rng(5)
    A, b = rng.normal(size=(12, 8)), rng.normal(size=12)
    groups = [np.arange(2 * k, 2 * k + 2) for k in range(4)]
    p, x = _group_lasso_program(A, b, 0.5, groups)
    base = solve(p)

    scaled, _ = _group_lasso_program(A, b, 0.5, groups)
    scaled.set_cost(np.arange(scaled.n), scaled.c * factor)
    sol = solve(scaled)
    assert sol.status == base.status == "optimal"
    np.testing.assert_allclose(sol.x[x], base.x[x], atol=1e-7)
    assert sol.objective == pytest.approx(factor * base.objective, rel=1e-6)
