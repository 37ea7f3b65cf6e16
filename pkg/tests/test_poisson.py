import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fdppr.errors import ConfigError, ConstraintViolation, InterfaceNotResolved, NoConvergence
from fdppr.grid import FdGrid
from fdppr.media import Constant, PiecewiseConstant
from fdppr.poisson import (PoissonProblem, assemble, assemble_discontinuous, assemble_fourth_order,
                           assemble_second_order, second_difference_1d, solve, solve_direct)
from fdppr.problems import checkerboard

from oracles import dense_poisson, rate, two_material_profile

PI = np.pi


def sines(x, y):
    return np.sin(PI * x) * np.sin(PI * y)


SINES = PoissonProblem(lambda x, y: 2 * PI ** 2 * sines(x, y), lambda x, y: 0 * x)


def nodes(n):
    x = np.arange(n + 1) / n
    return np.meshgrid(x, x, indexing="ij")


def test_five_point_weights():
    n = 8
    A = assemble_second_order(SINES, FdGrid(2, n - 1)).matrix.toarray()
    m = n - 1
    row = (m // 2) * m + m // 2
    assert A[row, row] == pytest.approx(4 * n ** 2)
    for k in (row - 1, row + 1, row - m, row + m):
        assert A[row, k] == pytest.approx(-n ** 2)
    assert np.count_nonzero(A[row]) == 5


def test_quadratic_exactness():
    p = lambda x, y: x ** 2 + y ** 2
    sol = solve(assemble_second_order(PoissonProblem(lambda x, y: -4 + 0 * x, p), FdGrid(2, 7)))
    X, Y = nodes(8)
    assert sol.residual <= 1e-12
    assert np.abs(sol.values - p(X, Y)).max() <= 1e-10


@pytest.mark.parametrize("order", [2, 4])
@pytest.mark.parametrize("n", [5, 6, 9])
def test_matrix_matches_hand_assembly(order, n):
    f = lambda x, y: np.cos(x) + y
    g = lambda x, y: x * x - y
    prob = PoissonProblem(f, g)
    system = assemble(prob, FdGrid(2, n - 1), order)
    A, b, _, _ = dense_poisson(n, order, f, g)
    assert np.abs(system.matrix.toarray() - A).max() <= 1e-9 * np.abs(A).max()
    assert np.abs(system.rhs_vector - b).max() <= 1e-9 * np.abs(b).max()


def test_fourth_order_needs_five_intervals():
    with pytest.raises(ConfigError):
        assemble_fourth_order(SINES, FdGrid(2, 3))


def test_dense_and_krylov_agree_small():
    prob = PoissonProblem(lambda x, y: 1 + 0 * x, lambda x, y: 0 * x)
    system = assemble_second_order(prob, FdGrid(2, 3))
    A, b, _, _ = dense_poisson(4, 2, prob.rhs, prob.dirichlet)
    oracle = np.linalg.solve(A, b)
    krylov = solve(system).values[1:-1, 1:-1].ravel(order="F")
    assert np.abs(krylov - oracle).max() <= 1e-10
    assert np.abs(solve_direct(system).values - solve(system).values).max() <= 1e-10


def test_quartic_stencil_exact():
    n = 10
    x = np.arange(n + 1) / n
    D = second_difference_1d(n + 1, 1 / n, 4).toarray()
    out = -(D @ x ** 4)
    assert np.allclose(out[1:-1], 12 * x[2:-2] ** 2, atol=1e-9)


@pytest.mark.parametrize("order,degree", [(2, 3), (4, 5)])
def test_stencil_consistency(order, degree, rng):
    n = 12
    X, Y = nodes(n)
    for _ in range(5):
        c = rng.normal(size=(degree + 1, degree + 1))
        c[np.add.outer(np.arange(degree + 1), np.arange(degree + 1)) > degree] = 0.0
        p = lambda x, y: np.polynomial.polynomial.polyval2d(x, y, c)
        lap = (np.polynomial.polynomial.polyval2d(X, Y, np.polynomial.polynomial.polyder(c, 2, axis=0))
               + np.polynomial.polynomial.polyval2d(X, Y, np.polynomial.polynomial.polyder(c, 2, axis=1)))
        system = assemble(PoissonProblem(lambda x, y: 0 * x, p), FdGrid(2, n - 1), order)
        interior = p(X, Y)[1:-1, 1:-1].ravel(order="F")
        applied = system.matrix @ interior - system.rhs_vector
        expect = -lap[1:-1, 1:-1].ravel(order="F")
        assert np.abs(applied - expect).max() <= 1e-9 * max(1.0, np.abs(expect).max())


@pytest.mark.parametrize("order,ns,target", [(2, (16, 32, 64), 2.0), (4, (16, 32, 64), 4.0)])
def test_manufactured_convergence(order, ns, target):
    errs = []
    for n in ns:
        X, Y = nodes(n)
        errs.append(np.abs(solve(assemble(SINES, FdGrid(2, n - 1), order)).values - sines(X, Y)).max())
    assert rate(errs, [1 / n for n in ns]) == pytest.approx(target, abs=0.2)


def test_constant_coefficient_reduces_to_five_point():
    unit = PiecewiseConstant(lambda x, y: 1.0 + 0 * x, {0: [0.5]}, 1.0)
    grid = FdGrid(2, 7)
    a = assemble_discontinuous(PoissonProblem(SINES.rhs, SINES.dirichlet, unit), grid).matrix
    b = assemble_second_order(SINES, grid).matrix
    assert abs(a - b).max() <= 1e-12


@pytest.mark.parametrize("mean", ["arithmetic", "harmonic"])
def test_two_material_profile_exact(mean):
    u = two_material_profile(0.5, 10.0)
    coef = PiecewiseConstant(lambda x, y: np.where(x <= 0.5, 0.5, 10.0), {0: [0.5]}, 10.0)
    prob = PoissonProblem(lambda x, y: 0 * x, lambda x, y: u(x), coef, edge_mean=mean)
    n = 8
    sol = solve(assemble(prob, FdGrid(2, n - 1)))
    X, _ = nodes(n)
    assert np.abs(sol.values - u(X)).max() <= 1e-10


def checker_problem():
    coef = PiecewiseConstant(checkerboard, {0: [0.5], 1: [0.5]}, 10.0)
    return PoissonProblem(sines, lambda x, y: 0 * x, coef)


def test_checkerboard_self_convergence():
    prob = checker_problem()
    ref = solve(assemble(prob, FdGrid(2, 255))).values
    errs = []
    ns = (16, 32, 64)
    for n in ns:
        s = solve(assemble(prob, FdGrid(2, n - 1)))
        assert s.residual <= 1e-12
        step = 256 // n
        errs.append(np.abs(s.values - ref[::step, ::step]).max())
    assert rate(errs, [1 / n for n in ns]) == pytest.approx(2.0, abs=0.3)


def test_interface_must_be_resolved():
    with pytest.raises(InterfaceNotResolved):
        assemble(checker_problem(), FdGrid(2, 6))


def test_fourth_order_rejects_variable_coefficient():
    with pytest.raises(ConstraintViolation):
        assemble(checker_problem(), FdGrid(2, 7), order=4)


def test_boundary_values_are_dirichlet_data():
    g = lambda x, y: 1 + x - 2 * y
    sol = solve(assemble_second_order(PoissonProblem(lambda x, y: 0 * x, g), FdGrid(2, 9)))
    X, Y = nodes(10)
    edge = np.ones_like(X, dtype=bool)
    edge[1:-1, 1:-1] = False
    assert np.array_equal(sol.values[edge], g(X, Y)[edge])


def test_solver_errors():
    system = assemble_second_order(SINES, FdGrid(2, 63))
    with pytest.raises(ConfigError):
        solve(system, tol=0.0)
    with pytest.raises(NoConvergence) as info:
        solve(system, tol=1e-14, max_iter=1, restart=1)
    assert info.value.iterations >= 1


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10 ** 6), sign=st.sampled_from([1, -1]),
       variable=st.booleans())
def test_discrete_maximum_principle(seed, sign, variable):
    # -Lu = f with f >= 0 keeps u above the boundary minimum; f <= 0 keeps it below the maximum
    n = 10
    r = np.random.default_rng(seed)
    F = sign * r.uniform(0, 5, size=(n + 1, n + 1))
    Gb = r.uniform(-1, 1, size=(n + 1, n + 1))
    coef = (PiecewiseConstant(checkerboard, {0: [0.5], 1: [0.5]}, 10.0) if variable else Constant(1.0))
    prob = PoissonProblem(lambda x, y: F, lambda x, y: Gb, coef)
    u = solve(assemble(prob, FdGrid(2, n - 1))).values
    edge = np.ones((n + 1, n + 1), dtype=bool)
    edge[1:-1, 1:-1] = False
    if sign > 0:
        assert u.min() >= Gb[edge].min() - 1e-12
    else:
        assert u.max() <= Gb[edge].max() + 1e-12


def test_variable_coefficient_solve_converges_at_64():
    s = solve(assemble(checker_problem(), FdGrid(2, 63)), tol=1e-12)
    assert 0 < s.iterations < 1000 and s.residual <= 1e-12
