"""Tensor-product Lagrange interpolation of FD nodal data.

An FD solution is read as a continuous piecewise-Q_r function on an
:class:`~fdppr.grid.InterpolantMesh`; every FD point is a Lagrange node.
Besides pointwise evaluation this module builds the sparse per-axis
operators (nodes -> Gauss points, fine nodes -> coarse Gauss points) that the
norm computations contract along each axis.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import OutOfDomain, ShapeMismatch, NestingError


class LagrangeBasis1D:
    """Lagrange basis of degree ``r`` on equispaced nodes ``k/r`` of [0, 1].

    Values use the barycentric formula; derivatives reuse the values through
    the nodal differentiation matrix, which is exact since phi_j' has degree r-1.
    """

    def __init__(self, degree):
        self.degree = int(degree)
        r = self.degree
        self.nodes = np.arange(r + 1) / r
        diff = self.nodes[:, None] - self.nodes[None, :]
        np.fill_diagonal(diff, 1.0)
        self.weights = 1.0 / diff.prod(axis=1)
        d = np.zeros((r + 1, r + 1))
        for k in range(r + 1):
            for j in range(r + 1):
                if j != k:
                    d[k, j] = (self.weights[j] / self.weights[k]) / (self.nodes[k] - self.nodes[j])
            d[k, k] = -d[k].sum()
        self.diff_matrix = d   # d[k, j] = phi_j'(x_k)

    def __call__(self, xi):
        return self.values(xi)

    def values(self, xi):
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        diff = xi[:, None] - self.nodes[None, :]
        exact = np.abs(diff) <= 1e-14
        diff[exact] = 1.0
        terms = self.weights[None, :] / diff
        with np.errstate(divide="ignore", invalid="ignore"):   # rows at nodes are replaced below
            out = terms / terms.sum(axis=1, keepdims=True)
        hit = exact.any(axis=1)
        if hit.any():
            out[hit] = exact[hit].astype(float)
        return out

    def derivatives(self, xi):
        return self.values(xi) @ self.diff_matrix


@lru_cache(maxsize=None)
def lagrange_basis(degree):
    return LagrangeBasis1D(degree)


@lru_cache(maxsize=None)
def gauss_legendre01(q):
    """Gauss-Legendre abscissae and weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(q)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def composite_rule01(q, sub=1):
    """``q``-point Gauss rule on each of ``sub`` equal pieces of [0, 1]."""
    x, w = gauss_legendre01(q)
    pts = ((np.arange(sub)[:, None] + x[None, :]) / sub).ravel()
    return pts, np.tile(w, sub) / sub


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor Gauss-Legendre rule with ``q`` points per axis on a box cell."""
    q: int
    dim: int

    def reference(self):
        x, w = gauss_legendre01(self.q)
        pts = np.stack(np.meshgrid(*([x] * self.dim), indexing="ij"), axis=-1).reshape(-1, self.dim)
        wts = np.prod(np.stack(np.meshgrid(*([w] * self.dim), indexing="ij"), axis=-1), axis=-1).ravel()
        return pts, wts

    def on_cell(self, bounds):
        pts, wts = self.reference()
        lo = np.array([b[0] for b in bounds])
        size = np.array([b[1] - b[0] for b in bounds])
        return lo + pts * size, wts * np.prod(size)


def default_quadrature_order(r):
    return r + 2


# ---------------------------------------------------------------------------
# interpolated fields
# ---------------------------------------------------------------------------

def locate(mesh, axis, x):
    """Cell index and reference coordinate of coordinates ``x`` on one axis.

    Shared faces go to the lower cell, the upper boundary to the last cell.
    """
    x = np.asarray(x, dtype=float)
    L, m = mesh.lengths[axis], mesh.cells_per_axis[axis]
    if np.any(x < 0.0) or np.any(x > L):
        raise OutOfDomain(f"coordinate outside [0, {L}] on axis {axis}")
    t = x / L * m
    near = np.abs(t - np.round(t)) < 1e-9
    t = np.where(near, np.round(t), t)
    c = np.floor(t).astype(np.int64)
    c = np.where((c == t) & (c > 0), c - 1, c)
    c = np.minimum(c, m - 1)
    return c, t - c


class InterpolatedField:
    """FD nodal values viewed as a continuous piecewise Q_r function."""

    def __init__(self, mesh, values):
        values = np.asarray(values, dtype=float)
        if values.ndim == 1 and values.size == int(np.prod(mesh.nodes_per_axis)):
            values = values.reshape(mesh.nodes_per_axis, order="F")
        if values.shape != tuple(mesh.nodes_per_axis):
            raise ShapeMismatch(
                f"expected nodal array of shape {mesh.nodes_per_axis}, got {values.shape}")
        self.mesh = mesh
        self.values = values

    @property
    def dim(self):
        return self.mesh.dim

    def _basis(self, points, deriv_axis=None):
        mesh = self.mesh
        basis = lagrange_basis(mesh.degree)
        cells, phis = [], []
        for a in range(mesh.dim):
            c, xi = locate(mesh, a, points[:, a])
            cells.append(c)
            if a == deriv_axis:
                phis.append(basis.derivatives(xi) / mesh.cell_sizes[a])
            else:
                phis.append(basis.values(xi))
        return cells, phis

    def _contract(self, cells, phis):
        r = self.mesh.degree
        npts = cells[0].shape[0]
        out = np.zeros(npts)
        for local in np.ndindex(*((r + 1,) * self.mesh.dim)):
            idx = tuple(c * r + k for c, k in zip(cells, local))
            w = np.ones(npts)
            for a, k in enumerate(local):
                w = w * phis[a][:, k]
            out += w * self.values[idx]
        return out

    def evaluate(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return self._contract(*self._basis(points))

    def gradient(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return np.stack([self._contract(*self._basis(points, a))
                         for a in range(self.mesh.dim)], axis=-1)

    def eval(self, p):
        return float(self.evaluate(np.asarray(p, dtype=float)[None, :])[0])

    def eval_gradient(self, p):
        return self.gradient(np.asarray(p, dtype=float)[None, :])[0]


def interpolate(values, mesh):
    return InterpolatedField(mesh, values)


def cell_l2_norm(integrand, mesh, cell, q=None):
    """L2 norm over one cell of a (vector-valued) integrand by tensor Gauss quadrature."""
    q = default_quadrature_order(mesh.degree) if q is None else q
    pts, wts = QuadratureRule(q, mesh.dim).on_cell(mesh.cell_bounds(cell))
    vals = np.asarray(integrand(pts), dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    return float(np.sqrt(np.sum(wts[:, None] * vals ** 2)))


# ---------------------------------------------------------------------------
# per-axis sparse operators
# ---------------------------------------------------------------------------

def gauss_points(mesh, axis, q, sub=1):
    """Physical quadrature abscissae and weights of all cells along one axis."""
    x, w = composite_rule01(q, sub)
    m, hc = mesh.cells_per_axis[axis], mesh.cell_sizes[axis]
    c = np.repeat(np.arange(m), x.size)
    return (c + np.tile(x, m)) * hc, np.tile(w, m) * hc


def cell_local_operator(local, m, r, n_cols):
    """Block-diagonal placement of a (points, r+1) local matrix over m cells."""
    npts = local.shape[0]
    rows = np.repeat(np.arange(m * npts), r + 1)
    cols = np.repeat(np.arange(m), npts * (r + 1)) * r + np.tile(np.arange(r + 1), m * npts)
    return sp.csr_matrix((np.tile(local.ravel(), m), (rows, cols)), shape=(m * npts, n_cols))


def gauss_operator(mesh, axis, q, derivative=False, sub=1):
    """Sparse map from nodal values to values (or derivatives) at the quadrature points."""
    r = mesh.degree
    xg, _ = composite_rule01(q, sub)
    basis = lagrange_basis(r)
    local = basis.derivatives(xg) / mesh.cell_sizes[axis] if derivative else basis.values(xg)
    return cell_local_operator(local, mesh.cells_per_axis[axis], r, mesh.nodes_per_axis[axis])


def fine_gauss_operator(mesh, fine_mesh, axis, q, derivative=False, sub=1):
    """Evaluate the fine mesh's interpolant at the coarse mesh's quadrature points.

    A point lying on a fine element face takes the average of the two
    one-sided derivatives; values there are single-valued anyway.  With
    ``sub`` equal to the nesting factor no point lies on a fine face.
    """
    nc, nf = mesh.intervals[axis], fine_mesh.intervals[axis]
    if mesh.degree != fine_mesh.degree or nf % nc or abs(mesh.lengths[axis] - fine_mesh.lengths[axis]) > 1e-14 * mesh.lengths[axis]:
        raise NestingError(f"fine grid ({nf} intervals) does not nest coarse grid ({nc}) on axis {axis}")
    m = nf // nc
    r = mesh.degree
    basis = lagrange_basis(r)
    mc = mesh.cells_per_axis[axis]
    xg, _ = composite_rule01(q, sub)
    npts = xg.size
    hf = fine_mesh.cell_sizes[axis]
    rows, cols, vals = [], [], []
    for g, x in enumerate(xg):
        t = x * m
        k = int(np.floor(t))
        choices = [(k, t - k)]
        if abs(t - round(t)) < 1e-12:
            k = int(round(t))
            choices = [c for c in ((k - 1, 1.0), (k, 0.0)) if 0 <= c[0] < m]
        for kf, xi in choices:
            phi = (basis.derivatives([xi])[0] / hf if derivative else basis.values([xi])[0])
            phi = phi / len(choices)
            fcells = np.arange(mc) * m + kf
            rows.append(np.repeat(np.arange(mc) * npts + g, r + 1))
            cols.append((fcells[:, None] * r + np.arange(r + 1)[None, :]).ravel())
            vals.append(np.tile(phi, mc))
    op = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                       shape=(mc * npts, fine_mesh.nodes_per_axis[axis]))
    op.sum_duplicates()
    return op
