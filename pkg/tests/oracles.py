"""Independent reference computations used by the tests.

Nothing here imports the package's assembly, recovery or quadrature code;
each oracle is written from the textbook definition with explicit loops.
"""
import itertools

import mpmath
import numpy as np

CENTRAL4 = [-1.0, 16.0, -30.0, 16.0, -1.0]
SHIFTED4 = [10.0, -15.0, -4.0, 14.0, -6.0, 1.0]


def d2_row(i, n_nodes, h, order):
    """Dict node -> weight for +d^2/dx^2 at node i of a 1D line (order 2 or 4)."""
    if order == 2:
        return {i - 1: 1 / h ** 2, i: -2 / h ** 2, i + 1: 1 / h ** 2}
    last = n_nodes - 1
    if i == 1:
        return {k: w / (12 * h ** 2) for k, w in enumerate(SHIFTED4)}
    if i == last - 1:
        return {last - k: w / (12 * h ** 2) for k, w in enumerate(SHIFTED4)}
    return {i - 2 + k: w / (12 * h ** 2) for k, w in enumerate(CENTRAL4)}


def dense_poisson(n_intervals, order, f, g):
    """Brute-force dense assembly of -Laplace u = f, u = g on the unit square.

    Unknowns are interior nodes, first index fastest.  Returns (A, b, X, Y).
    """
    n = n_intervals
    h = 1.0 / n
    x = np.arange(n + 1) / n
    X, Y = np.meshgrid(x, x, indexing="ij")
    m = n - 1
    unknown = {}
    for j in range(1, n):
        for i in range(1, n):
            unknown[(i, j)] = len(unknown)
    A = np.zeros((m * m, m * m))
    b = np.zeros(m * m)
    for (i, j), row in unknown.items():
        b[row] = f(X[i, j], Y[i, j])
        terms = {}
        for k, w in d2_row(i, n + 1, h, order).items():
            terms[(k, j)] = terms.get((k, j), 0.0) - w
        for k, w in d2_row(j, n + 1, h, order).items():
            terms[(i, k)] = terms.get((i, k), 0.0) - w
        for node, w in terms.items():
            if node in unknown:
                A[row, unknown[node]] += w
            else:
                b[row] -= w * g(X[node], Y[node])
    return A, b, X, Y


def tensor_monomials(local, degree):
    """Vandermonde of s^alpha, alpha in {0..degree}^d, first exponent slowest."""
    local = np.atleast_2d(local)
    d = local.shape[1]
    cols = []
    for alpha in itertools.product(range(degree + 1), repeat=d):
        col = np.ones(local.shape[0])
        for a in range(d):
            col = col * local[:, a] ** alpha[a]
        cols.append(col)
    return np.stack(cols, axis=1)


def normal_equations(V, y):
    """Solve V^T V c = V^T y in 50-digit arithmetic.

    Forming V^T V squares the condition number; for cubic patches that costs
    float64 about ten digits, so the oracle itself would be the weak link.
    """
    with mpmath.workdps(50):
        Vm = mpmath.matrix(V.tolist())
        c = mpmath.lu_solve(Vm.T * Vm, Vm.T * mpmath.matrix(list(map(float, y))))
        return np.array([float(v) for v in c])


def standing_wave(dim):
    """sin(pi x1)...sin(pi xd) cos(sqrt(d) pi t), exact for the unit-speed wave equation."""
    omega = np.sqrt(dim) * np.pi

    def u(t, *xs):
        out = np.cos(omega * t)
        for x in xs:
            out = out * np.sin(np.pi * x)
        return out
    return u


def two_material_profile(a_left, a_right, x0=0.5):
    """u(0)=0, u(1)=1, piecewise linear with a*u' continuous at x0."""
    # slopes s_l, s_r: a_l s_l = a_r s_r, s_l x0 + s_r (1 - x0) = 1
    s_l = 1.0 / (x0 + (1 - x0) * a_left / a_right)
    s_r = a_left * s_l / a_right

    def u(x):
        return np.where(x <= x0, s_l * x, s_l * x0 + s_r * (x - x0))
    return u


def gauss_tensor(f, bounds, q=12):
    """Tensor Gauss-Legendre integral of f(*coords) over a box."""
    x, w = np.polynomial.legendre.leggauss(q)
    axes, wts = [], []
    for lo, hi in bounds:
        axes.append(lo + (x + 1) * (hi - lo) / 2)
        wts.append(w * (hi - lo) / 2)
    grids = np.meshgrid(*axes, indexing="ij")
    W = np.ones_like(grids[0])
    for a, wa in enumerate(wts):
        shape = [1] * len(bounds)
        shape[a] = -1
        W = W * wa.reshape(shape)
    return float(np.sum(W * f(*grids)))


def rate(values, hs):
    """Least-squares slope of log(value) against log(h)."""
    return float(np.polyfit(np.log(hs), np.log(values), 1)[0])
