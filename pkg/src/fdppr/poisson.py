"""Finite-difference discretisations of the Dirichlet Poisson problem on the unit square.

Unknowns are the N^2 interior nodes in i-fastest order.  Every assembler
first builds the operator on the full node set and then splits columns into
interior (matrix) and boundary (folded into the right-hand side) parts, so
Dirichlet data enter ``b`` exactly once.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigError, ConstraintViolation, NoConvergence
from .grid import FdGrid
from .media import Constant, PiecewiseConstant, cell_values, edge_coefficients

# +d^2/dx^2 at node 1 from u_0..u_5, times 12 h^2 (exact through degree 5)
SHIFTED_D2 = np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0])
CENTRAL_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0])


@dataclass(frozen=True)
class PoissonProblem:
    """``-div(a grad u) = f`` in the unit square, ``u = g`` on the boundary."""
    rhs: Callable
    dirichlet: Callable
    coefficient: object = Constant(1.0)
    exact: Callable | None = None
    exact_gradient: Callable | None = None
    edge_mean: str = "arithmetic"


@dataclass
class LinearSystem:
    matrix: sp.csr_matrix
    rhs_vector: np.ndarray
    grid: FdGrid
    boundary_values: np.ndarray = field(repr=False, default=None)   # full nodal array, zero inside
    order: int = 2


@dataclass
class FdSolution:
    grid: FdGrid
    values: np.ndarray            # (N+2, N+2), indexed [i, j]
    iterations: int = 0
    residual: float = 0.0


def _nodes(grid):
    x = np.arange(grid.n_intervals + 1) / grid.n_intervals
    return np.meshgrid(x, x, indexing="ij")


def _boundary_array(problem, grid):
    X, Y = _nodes(grid)
    g = np.asarray(problem.dirichlet(X, Y), dtype=float) * np.ones(X.shape)
    g[1:-1, 1:-1] = 0.0
    return g


def _interior_rhs(problem, grid):
    X, Y = _nodes(grid)
    f = np.asarray(problem.rhs(X, Y), dtype=float) * np.ones(X.shape)
    return f[1:-1, 1:-1].ravel(order="F")


def _selector(n_nodes):
    """Rows picking the interior entries of a full 1D node vector."""
    m = n_nodes - 2
    return sp.csr_matrix((np.ones(m), (np.arange(m), np.arange(1, m + 1))), shape=(m, n_nodes))


def _split(full_op, problem, grid, order):
    """Interior columns form the matrix; boundary columns move to the rhs."""
    n = grid.n_intervals + 1
    interior = np.zeros((n, n), dtype=bool)
    interior[1:-1, 1:-1] = True
    mask = interior.ravel(order="F")
    full_op = full_op.tocsc()
    A = full_op[:, mask].tocsr()
    g = _boundary_array(problem, grid)
    b = -(full_op[:, ~mask] @ g.ravel(order="F")[~mask])
    A.sort_indices()
    return LinearSystem(A, _interior_rhs(problem, grid) + b, grid, g, order)


def _require_constant(problem):
    if not isinstance(problem.coefficient, Constant):
        raise ConstraintViolation("this scheme needs a constant coefficient")
    return problem.coefficient.value


def second_difference_1d(n_nodes, spacing, order=2):
    """Rows of ``-d^2/dx^2`` at the interior nodes of a full 1D node vector."""
    m = n_nodes - 2
    if order == 2:
        rows = np.repeat(np.arange(m), 3)
        cols = (np.arange(m)[:, None] + np.arange(3)[None, :]).ravel()
        vals = np.tile([-1.0, 2.0, -1.0], m)
        return sp.csr_matrix((vals, (rows, cols)), shape=(m, n_nodes)) / spacing ** 2
    if m < 4:
        raise ConfigError("the fourth-order scheme needs N+1 >= 5")
    D = sp.lil_matrix((m, n_nodes))
    for k in range(m):
        i = k + 1
        if i == 1:
            D[k, 0:6] = -SHIFTED_D2
        elif i == m:
            D[k, n_nodes - 6:] = -SHIFTED_D2[::-1]
        else:
            D[k, i - 2:i + 3] = -CENTRAL_D2
    return D.tocsr() / (12.0 * spacing ** 2)


def _check_grid(grid):
    if grid.dim != 2:
        raise ConfigError("Poisson solver is two-dimensional")


def assemble_second_order(problem, grid):
    _check_grid(grid)
    a = _require_constant(problem)
    n = grid.n_intervals + 1
    D = second_difference_1d(n, grid.spacing, 2)
    S = _selector(n)
    return _split(a * (sp.kron(S, D) + sp.kron(D, S)), problem, grid, 2)


def assemble_fourth_order(problem, grid):
    _check_grid(grid)
    a = _require_constant(problem)
    n = grid.n_intervals + 1
    D = second_difference_1d(n, grid.spacing, 4)
    S = _selector(n)
    return _split(a * (sp.kron(S, D) + sp.kron(D, S)), problem, grid, 4)


def flux_operator(faces, spacing):
    """``-div(a grad .)`` rows at interior nodes from edge coefficients (full columns)."""
    n0, n1 = faces[0].shape[0] + 1, faces[0].shape[1]
    shape = (n0, n1)
    idx = np.arange(n0 * n1).reshape(shape, order="F")
    I, J = np.meshgrid(np.arange(1, n0 - 1), np.arange(1, n1 - 1), indexing="ij")
    I, J = I.ravel(order="F"), J.ravel(order="F")
    row = np.arange(I.size)
    fx_hi, fx_lo = faces[0][I, J], faces[0][I - 1, J]
    fy_hi, fy_lo = faces[1][I, J], faces[1][I, J - 1]
    rows = np.concatenate([row] * 5)
    cols = np.concatenate([idx[I, J], idx[I + 1, J], idx[I - 1, J], idx[I, J + 1], idx[I, J - 1]])
    vals = np.concatenate([fx_hi + fx_lo + fy_hi + fy_lo, -fx_hi, -fx_lo, -fy_hi, -fy_lo])
    return sp.csr_matrix((vals, (rows, cols)), shape=(I.size, n0 * n1)) / spacing ** 2


def assemble_discontinuous(problem, grid):
    _check_grid(grid)
    coef = problem.coefficient
    if isinstance(coef, PiecewiseConstant):
        coef.check_resolved(grid.n_intervals)
    faces = edge_coefficients(cell_values(coef, 2, grid.n_intervals), problem.edge_mean)
    return _split(flux_operator(faces, grid.spacing), problem, grid, 2)


def assemble(problem, grid, order=2):
    if isinstance(problem.coefficient, PiecewiseConstant):
        if order != 2:
            raise ConstraintViolation("variable coefficients use the second-order flux scheme")
        return assemble_discontinuous(problem, grid)
    if order == 2:
        return assemble_second_order(problem, grid)
    if order == 4:
        return assemble_fourth_order(problem, grid)
    raise ConfigError("order must be 2 or 4")


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------

def _embed(system, u):
    vals = system.boundary_values.copy()
    n = system.grid.n_interior
    vals[1:-1, 1:-1] = u.reshape((n, n), order="F")
    return vals


def _rel_residual(A, u, b):
    nb = np.linalg.norm(b)
    r = np.linalg.norm(A @ u - b)
    return r / nb if nb > 0 else r


def rounding_floor(A, u, b):
    """Smallest relative residual that float64 can certify for ``u``.

    Rounding ``u`` alone perturbs ``Au`` by about eps * | |A| |u| |, which for
    fine, high-contrast systems exceeds 1e-12 of ``|b|``.
    """
    nb = np.linalg.norm(b)
    scale = np.linalg.norm(abs(A) @ np.abs(u))
    return 16.0 * np.finfo(float).eps * scale / nb if nb > 0 else 0.0


def solve(system, tol=1e-12, max_iter=1000, restart=50):
    """GMRES with an incomplete-LU preconditioner to relative residual ``tol``.

    If ``tol`` lies below the rounding floor of the system the floor is used
    instead; the achieved residual is recorded on the solution.
    """
    if not tol > 0:
        raise ConfigError("tol must be positive")
    A, b = system.matrix.tocsc(), system.rhs_vector
    if not np.any(b):
        return FdSolution(system.grid, _embed(system, np.zeros_like(b)), 0, 0.0)
    ilu = spla.spilu(A, drop_tol=1e-6, fill_factor=30)
    M = spla.LinearOperator(A.shape, ilu.solve)
    count = [0]

    def cb(_):
        count[0] += 1

    u = np.zeros_like(b)
    res = np.inf
    # restart until the true (unpreconditioned) residual meets tol
    while count[0] < max_iter:
        before = res
        # one restart cycle per pass, then check the true residual
        u, _ = spla.gmres(A, b, x0=u, rtol=tol * 0.1, atol=0.0, restart=restart,
                          maxiter=1, M=M, callback=cb, callback_type="pr_norm")
        res = _rel_residual(A, u, b)
        if res <= tol:
            return FdSolution(system.grid, _embed(system, u), count[0], res)
        if not np.isfinite(res):
            break
        if res > 0.5 * before and res <= max(tol, rounding_floor(A, u, b)):
            return FdSolution(system.grid, _embed(system, u), count[0], res)
    raise NoConvergence(count[0], res)


def solve_direct(system):
    """Dense LU solve; the reference path for small systems."""
    A = system.matrix.toarray()
    u = np.linalg.solve(A, system.rhs_vector)
    return FdSolution(system.grid, _embed(system, u), 0, _rel_residual(system.matrix, u, system.rhs_vector))


def solve_problem(problem, n_intervals, order=2, tol=1e-12):
    grid = FdGrid(2, n_intervals - 1)
    return solve(assemble(problem, grid, order), tol=tol)
