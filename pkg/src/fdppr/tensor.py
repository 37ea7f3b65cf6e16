"""Apply 1D linear operators along the axes of an n-d array."""
import numpy as np
import scipy.sparse as sp


def apply_along(op, x, axis):
    """Return ``op`` applied to ``x`` along ``axis`` (op has shape (m, x.shape[axis]))."""
    if op is None:
        return x
    x = np.moveaxis(x, axis, 0)
    shape = x.shape
    flat = np.ascontiguousarray(x).reshape(shape[0], -1)
    out = op @ flat
    if sp.issparse(out):
        out = out.toarray()
    out = np.asarray(out).reshape((op.shape[0],) + shape[1:])
    return np.moveaxis(out, 0, axis)


def apply_axes(x, ops):
    """Tensor-product operator: ``ops[a]`` acts on axis ``a`` (None = identity).

    Axes are processed in the order that shrinks the array fastest.
    """
    order = sorted(range(len(ops)), key=lambda a: _gain(ops[a], x.shape[a]))
    for a in order:
        x = apply_along(ops[a], x, a)
    return x


def _gain(op, n):
    return 0.0 if op is None else op.shape[0] / n


def cell_sums(values, q, weights=None):
    """Sum over the ``q`` quadrature points of each cell on every axis.

    ``values`` has shape (M_0*q_0, M_1*q_1, ...); ``weights`` is a list of 1D
    per-axis weight arrays of the same lengths, applied before summing.
    """
    if np.isscalar(q):
        q = (q,) * values.ndim
    if weights is not None:
        for a, w in enumerate(weights):
            shape = [1] * values.ndim
            shape[a] = -1
            values = values * w.reshape(shape)
    shape = []
    for a, n in enumerate(values.shape):
        shape += [n // q[a], q[a]]
    v = values.reshape(shape)
    return v.sum(axis=tuple(range(1, 2 * values.ndim, 2)))
