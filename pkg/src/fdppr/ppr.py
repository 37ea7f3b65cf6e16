"""Polynomial preserving recovery (PPR) of gradients on tensor-product meshes.

For every mesh vertex a patch of elements is chosen, a Q_{r+1} polynomial is
fitted to the nodal values in the patch by discrete least squares, and its
gradient is evaluated.  Vertex nodes take the gradient of their own fit;
edge, face and interior nodes take multilinear (convex) combinations of the
fits of the vertices of the containing edge, face or element.

Patches here are boxes of elements.  With a box patch the Vandermonde
matrix is a Kronecker product of 1D Vandermonde matrices, so the fit, and
with it the whole recovery, factors into one sparse 1D operator per axis.
:func:`recover_nodal_gradients` uses that factorisation;
:func:`recover_nodal_gradients_direct` fits every patch with a dense
least-squares solve and serves as the reference implementation.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, PatchRankDeficient
from .fe import (InterpolatedField, cell_local_operator, composite_rule01, lagrange_basis,
                 locate)
from .tensor import apply_axes

RANK_TOL = 1e-10


# ---------------------------------------------------------------------------
# patches and least-squares fits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Frame:
    """Affine local coordinates ``s = (x - center) / scale`` per axis."""
    center: tuple
    scales: tuple

    def to_local(self, x):
        x = np.asarray(x, dtype=float)
        return (x - np.asarray(self.center)) / np.asarray(self.scales)


@dataclass(frozen=True)
class Patch:
    anchor: tuple          # FD node multi-index of the vertex
    cell_ranges: tuple     # half-open cell range per axis
    degree: int
    frame: Frame
    block: tuple | None = None

    @property
    def cells(self):
        return list(itertools.product(*(range(lo, hi) for lo, hi in self.cell_ranges)))

    @property
    def node_ranges(self):
        r = self.degree
        return tuple((lo * r, hi * r + 1) for lo, hi in self.cell_ranges)

    def nodes(self):
        return np.array(list(itertools.product(*(range(a, b) for a, b in self.node_ranges))))


def _vertex_cells(mesh, vertex):
    r = mesh.degree
    out = []
    for a, i in enumerate(vertex):
        if i % r:
            raise ConfigError(f"node {vertex} is not a mesh vertex (degree {r})")
        out.append(i // r)
    return out


def _monomial_vandermonde(local, degree):
    """Dense Vandermonde of the tensor monomials s^alpha, |alpha|_inf <= degree."""
    npts, d = local.shape
    exps = list(itertools.product(range(degree + 1), repeat=d))
    v = np.ones((npts, len(exps)))
    for j, alpha in enumerate(exps):
        for a, k in enumerate(alpha):
            if k:
                v[:, j] *= local[:, a] ** k
    return v


def _rank_ok(v):
    s = np.linalg.svd(v, compute_uv=False)
    return s.size == v.shape[1] and s[-1] >= RANK_TOL * s[0]


def build_patch(mesh, vertex, block=None):
    """Patch of elements used to fit the polynomial at a mesh vertex.

    Starts from the elements sharing the vertex (restricted to ``block`` when
    given).  While the Q_{r+1} Vandermonde is rank deficient, every axis with
    too few distinct node coordinates grows by one layer of face-adjacent
    elements on the side away from the boundary the vertex sits on.
    """
    r = mesh.degree
    vc = _vertex_cells(mesh, vertex)
    if block is None:
        limits = [(0, m) for m in mesh.cells_per_axis]
    else:
        blk = next(b for b in mesh.blocks if b.index == tuple(block))
        limits = list(blk.cell_ranges)
        if not all(lo <= v <= hi for v, (lo, hi) in zip(vc, limits)):
            raise ConfigError(f"vertex {vertex} is not in block {block}")
    ranges = [[max(v - 1, lo), min(v + 1, hi)] for v, (lo, hi) in zip(vc, limits)]
    sizes = mesh.cell_sizes
    while True:
        patch = _make_patch(mesh, vertex, ranges, block)
        local = patch.frame.to_local(np.asarray(patch.nodes()) * np.asarray(mesh.fd_spacings))
        if _rank_ok(_monomial_vandermonde(local, r + 1)):
            return patch
        grown = False
        for a, (v, (lo, hi)) in enumerate(zip(vc, limits)):
            if (ranges[a][1] - ranges[a][0]) * r + 1 >= r + 2:
                continue
            if v == ranges[a][0] and ranges[a][1] < hi:
                ranges[a][1] += 1
                grown = True
            elif ranges[a][0] > lo:
                ranges[a][0] -= 1
                grown = True
            elif ranges[a][1] < hi:
                ranges[a][1] += 1
                grown = True
        if not grown:
            raise PatchRankDeficient(
                f"no full-rank Q_{r + 1} patch for vertex {vertex}: the (sub)domain "
                f"has too few elements")


def _make_patch(mesh, vertex, ranges, block):
    center = tuple(i * hs for i, hs in zip(vertex, mesh.fd_spacings))
    scales = tuple((hi - lo) * hc / 2.0 for (lo, hi), hc in zip(ranges, mesh.cell_sizes))
    return Patch(tuple(vertex), tuple(tuple(x) for x in ranges), mesh.degree,
                 Frame(center, scales), None if block is None else tuple(block))


@dataclass(frozen=True)
class FittedPolynomial:
    """Q_{r+1} polynomial in frame coordinates; ``coefficients[alpha]`` multiplies s^alpha."""
    degree: int
    coefficients: np.ndarray
    frame: Frame

    def _powers(self, s, deriv=False):
        k = np.arange(self.degree + 1)
        if deriv:
            return k * np.where(k > 0, s ** np.maximum(k - 1, 0), 0.0)
        return s ** k

    def value(self, x):
        s = self.frame.to_local(x)
        c = self.coefficients
        for a in range(len(s)):
            c = np.tensordot(self._powers(s[a]), c, axes=(0, 0))
        return float(c)

    def gradient(self, x):
        s = self.frame.to_local(x)
        d = len(s)
        out = np.empty(d)
        for g in range(d):
            c = self.coefficients
            for a in range(d):
                c = np.tensordot(self._powers(s[a], deriv=(a == g)), c, axes=(0, 0))
            out[g] = float(c) / self.frame.scales[g]
        return out


def fit_dlspa(patch, field, mesh=None):
    """Discrete least-squares Q_{r+1} fit of the field's nodal values over a patch."""
    mesh = field.mesh if mesh is None else mesh
    nodes = patch.nodes()
    coords = nodes * np.asarray(mesh.fd_spacings)
    v = _monomial_vandermonde(patch.frame.to_local(coords), patch.degree + 1)
    if not _rank_ok(v):
        raise PatchRankDeficient(f"patch of vertex {patch.anchor} is rank deficient")
    data = field.values[tuple(nodes.T)]
    coef, *_ = np.linalg.lstsq(v, data, rcond=None)
    shape = (patch.degree + 2,) * mesh.dim
    return FittedPolynomial(patch.degree + 1, coef.reshape(shape), patch.frame)


# ---------------------------------------------------------------------------
# recovered gradient container
# ---------------------------------------------------------------------------

class RecoveredGradientField:
    """Nodal recovered gradients, one array per subdomain block.

    ``nodal[b]`` has shape ``(*block_nodes, d)``; nodes on block interfaces
    appear once in every adjacent block.
    """

    def __init__(self, mesh, nodal):
        self.mesh = mesh
        self.blocks = mesh.blocks
        self.nodal = list(nodal)

    def block_array(self, block_index):
        for b, arr in zip(self.blocks, self.nodal):
            if b.index == tuple(block_index):
                return arr
        raise KeyError(block_index)

    def at_node(self, idx):
        """Recovered vectors at an FD node, one per block containing it."""
        r = self.mesh.degree
        out = {}
        for b, arr in zip(self.blocks, self.nodal):
            rng = b.node_ranges(r)
            if all(lo <= i <= hi for i, (lo, hi) in zip(idx, rng)):
                out[b.index] = arr[tuple(i - lo for i, (lo, _) in zip(idx, rng))]
        return out

    def spatial(self):
        return [arr[..., :self.mesh.n_space_axes] for arr in self.nodal]

    def temporal(self):
        if not self.mesh.is_space_time:
            return None
        return [arr[..., -1] for arr in self.nodal]

    def evaluate(self, points):
        """Recovered gradient at points, interpolated through the Q_r basis of each cell."""
        mesh = self.mesh
        points = np.atleast_2d(np.asarray(points, dtype=float))
        r = mesh.degree
        basis = lagrange_basis(r)
        cells, phis = [], []
        for a in range(mesh.dim):
            c, xi = locate(mesh, a, points[:, a])
            cells.append(c)
            phis.append(basis.values(xi))
        cells = np.stack(cells, axis=1)
        out = np.zeros((points.shape[0], mesh.dim))
        for bi, (b, arr) in enumerate(zip(self.blocks, self.nodal)):
            inside = np.ones(points.shape[0], dtype=bool)
            for a, (lo, hi) in enumerate(b.cell_ranges):
                inside &= (cells[:, a] >= lo) & (cells[:, a] < hi)
            if not inside.any():
                continue
            sel = np.nonzero(inside)[0]
            for local in np.ndindex(*((r + 1,) * mesh.dim)):
                idx = tuple((cells[sel, a] - lo) * r + k
                            for a, ((lo, _), k) in enumerate(zip(b.cell_ranges, local)))
                w = np.ones(sel.size)
                for a, k in enumerate(local):
                    w = w * phis[a][sel, k]
                out[sel] += w[:, None] * arr[idx]
        return out


# ---------------------------------------------------------------------------
# direct (per-vertex) recovery
# ---------------------------------------------------------------------------

def recover_nodal_gradients_direct(field, mesh=None):
    """Patch-by-patch recovery with dense least-squares fits (reference path)."""
    mesh = field.mesh if mesh is None else mesh
    r, d = mesh.degree, mesh.dim
    nodal = []
    for blk in mesh.blocks:
        fits = {}
        vranges = [range(lo, hi + 1) for lo, hi in blk.cell_ranges]
        for vc in itertools.product(*vranges):
            vertex = tuple(c * r for c in vc)
            patch = build_patch(mesh, vertex, blk.index if len(mesh.blocks) > 1 else None)
            fits[vc] = fit_dlspa(patch, field, mesh)
        nranges = blk.node_ranges(r)
        arr = np.zeros(tuple(hi - lo + 1 for lo, hi in nranges) + (d,))
        for idx in itertools.product(*(range(lo, hi + 1) for lo, hi in nranges)):
            x = np.array([i * hs for i, hs in zip(idx, mesh.fd_spacings)])
            # containing cell inside the block, reference coordinate per axis
            cell, xi = [], []
            for a, i in enumerate(idx):
                lo, hi = blk.cell_ranges[a]
                c = min(i // r, hi - 1)
                cell.append(c)
                xi.append((i - c * r) / r)
            g = np.zeros(d)
            for corner in itertools.product((0, 1), repeat=d):
                w = 1.0
                for a, k in enumerate(corner):
                    w *= xi[a] if k else 1.0 - xi[a]
                if w == 0.0:
                    continue
                vc = tuple(c + k for c, k in zip(cell, corner))
                g += w * fits[vc].gradient(x)
            arr[tuple(i - lo for i, (lo, _) in zip(idx, nranges))] = g
        nodal.append(arr)
    return RecoveredGradientField(mesh, nodal)


# ---------------------------------------------------------------------------
# separable recovery
# ---------------------------------------------------------------------------

def _axis_patch(v, lo, hi, r):
    a, b = max(v - 1, lo), min(v + 1, hi)
    while (b - a) * r + 1 < r + 2:
        if a == v and b < hi:
            b += 1
        elif a > lo:
            a -= 1
        elif b < hi:
            b += 1
        else:
            raise PatchRankDeficient(
                f"subdomain [{lo}, {hi}) has too few elements for a degree-{r + 1} fit")
    return a, b


@lru_cache(maxsize=256)
def _axis_fits(r, n_cells, length, lo, hi):
    """Per-vertex 1D least-squares data for vertices lo..hi of a block interval.

    Returns, for every vertex, (first node, pseudo-inverse, center, scale).
    """
    hc = length / n_cells
    out = []
    for v in range(lo, hi + 1):
        a, b = _axis_patch(v, lo, hi, r)
        scale = (b - a) * hc / 2.0
        center = v * hc
        x = np.arange(a * r, b * r + 1) * (length / (n_cells * r))
        s = (x - center) / scale
        vm = s[:, None] ** np.arange(r + 2)[None, :]
        sv = np.linalg.svd(vm, compute_uv=False)
        if sv[-1] < RANK_TOL * sv[0]:
            raise PatchRankDeficient(f"1D patch of vertex {v} is rank deficient")
        out.append((a * r, np.linalg.pinv(vm), center, scale))
    return out


def _fit_rows(fit, x, derivative):
    start, pinv, center, scale = fit
    k = np.arange(pinv.shape[0])
    s = (np.atleast_1d(x) - center) / scale
    if derivative:
        phi = k * np.where(k > 0, s[:, None] ** np.maximum(k - 1, 0), 0.0) / scale
    else:
        phi = s[:, None] ** k
    return start, phi @ pinv


@lru_cache(maxsize=256)
def axis_recovery_operator(r, n_cells, length, lo, hi, derivative):
    """Sparse map from the nodal line of an axis to recovered nodal values on block [lo, hi).

    Row ``j`` corresponds to FD node ``lo*r + j``; the row is the convex
    combination of the value (or derivative) rows of the two vertices that
    bound the node's element.
    """
    fits = _axis_fits(r, n_cells, length, lo, hi)
    n_nodes = n_cells * r + 1
    dx = length / (n_cells * r)
    rows, cols, vals = [], [], []
    for j, node in enumerate(range(lo * r, hi * r + 1)):
        c = min(node // r, hi - 1)
        xi = (node - c * r) / r
        x = node * dx
        for v, w in ((c, 1.0 - xi), (c + 1, xi)):
            if w == 0.0:
                continue
            start, row = _fit_rows(fits[v - lo], x, derivative)
            rows.extend([j] * row.shape[1])
            cols.extend(range(start, start + row.shape[1]))
            vals.extend(w * row[0])
    op = sp.csr_matrix((vals, (rows, cols)), shape=((hi - lo) * r + 1, n_nodes))
    op.sum_duplicates()
    op.eliminate_zeros()
    return op


def _axis_key(mesh, axis):
    return mesh.degree, mesh.cells_per_axis[axis], float(mesh.lengths[axis])


def recover_nodal_gradients(field, mesh=None, cuts=None):
    """PPR recovered gradient of an interpolated field.

    The mesh's subdomain cuts (or ``cuts`` when given) split the recovery:
    each block is recovered independently, so gradients may jump across
    block interfaces.
    """
    mesh = field.mesh if mesh is None else mesh
    if cuts is not None:
        mesh = mesh.with_cuts(cuts)
    d = mesh.dim
    u = field.values
    nodal = []
    for blk in mesh.blocks:
        comps = []
        for k in range(d):
            ops = [axis_recovery_operator(*_axis_key(mesh, a), lo, hi, a == k)
                   for a, (lo, hi) in enumerate(blk.cell_ranges)]
            comps.append(apply_axes(u, ops))
        nodal.append(np.stack(comps, axis=-1))
    return RecoveredGradientField(mesh, nodal)


def gauss_recovery_operator(mesh, axis, q, derivative=False, sub=1):
    """Sparse map: FD nodal line -> recovered field at the quadrature points.

    Each point uses the recovery of the block its element belongs to, so the
    operator already honours the subdomain split on this axis.
    """
    r = mesh.degree
    xg, _ = composite_rule01(q, sub)
    phi = lagrange_basis(r).values(xg)
    blocks = []
    for lo, hi in mesh.axis_blocks(axis):
        rec = axis_recovery_operator(*_axis_key(mesh, axis), lo, hi, derivative)
        blocks.append(cell_local_operator(phi, hi - lo, r, rec.shape[0]) @ rec)
    op = sp.vstack(blocks).tocsr()
    op.eliminate_zeros()
    return op


def recovered_minus_discrete(recovered, field):
    """Pointwise integrand ``G_h u_h - grad u_h``."""
    def integrand(points):
        return recovered.evaluate(points) - field.gradient(points)
    return integrand


__all__ = [
    "Frame", "Patch", "FittedPolynomial", "RecoveredGradientField", "build_patch",
    "fit_dlspa", "recover_nodal_gradients", "recover_nodal_gradients_direct",
    "axis_recovery_operator", "gauss_recovery_operator", "recovered_minus_discrete",
    "InterpolatedField",
]
