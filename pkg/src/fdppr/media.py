"""Coefficient fields: constant, or piecewise constant with grid-aligned interfaces."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, InterfaceNotResolved

EDGE_MEANS = ("arithmetic", "harmonic")


@dataclass(frozen=True)
class Constant:
    value: float = 1.0

    def __post_init__(self):
        if not self.value > 0:
            raise ConfigError("coefficient must be strictly positive")

    @property
    def maximum(self):
        return float(self.value)


@dataclass(frozen=True)
class PiecewiseConstant:
    """``func(x1, x2, ...)`` is evaluated at FD cell centres only.

    ``interfaces`` maps an axis to the coordinates of the planes where the
    value may jump; every FD grid in use must contain those planes.
    """
    func: Callable
    interfaces: dict = field(default_factory=dict)
    maximum: float = 1.0

    def check_resolved(self, n_intervals):
        for axis, coords in self.interfaces.items():
            for x in coords:
                if abs(x * n_intervals - round(x * n_intervals)) > 1e-9:
                    raise InterfaceNotResolved(
                        f"interface x{axis + 1}={x} is not a grid line for {n_intervals} intervals")


def cell_values(coef, dim, n_intervals):
    """Coefficient at the centres of the FD cells, shape ``(n,)*dim``."""
    shape = (n_intervals,) * dim
    if isinstance(coef, Constant):
        return np.full(shape, coef.value)
    c = (np.arange(n_intervals) + 0.5) / n_intervals
    vals = np.asarray(coef.func(*np.meshgrid(*([c] * dim), indexing="ij")), dtype=float) * np.ones(shape)
    if np.any(vals <= 0):
        raise ConfigError("coefficient must be strictly positive")
    return vals


def _mean(a, b, kind):
    if kind == "arithmetic":
        return 0.5 * (a + b)
    return 2.0 * a * b / (a + b)


def edge_coefficients(cells, mean="arithmetic"):
    """Coefficients on the grid edges of a vertex-centred flux scheme.

    ``faces[a]`` has length n-1 on axis ``a`` and n on the others (n nodes);
    entry i along axis ``a`` belongs to the edge between nodes i and i+1.
    An edge touches the 2^(d-1) FD cells sharing it; their values are combined
    pairwise with ``mean``.  Boundary edges see only the cells that exist.
    """
    if mean not in EDGE_MEANS:
        raise ConfigError(f"edge mean must be one of {EDGE_MEANS}")
    dim = cells.ndim
    faces = []
    for a in range(dim):
        f = cells
        for b in range(dim):
            if b == a:
                continue
            pad = [(0, 0)] * dim
            pad[b] = (1, 1)
            g = np.pad(f, pad, mode="edge")
            lo = [slice(None)] * dim
            hi = [slice(None)] * dim
            lo[b] = slice(0, -1)
            hi[b] = slice(1, None)
            f = _mean(g[tuple(lo)], g[tuple(hi)], mean)
        faces.append(np.ascontiguousarray(f, dtype=float))
    return faces
