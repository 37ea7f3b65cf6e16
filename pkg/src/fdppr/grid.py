"""Uniform FD grids, space-time grids and the derived interpolant mesh.

Integer interval counts are the source of truth; every coordinate is formed
as ``i * length / n`` with a single division so that FD points and mesh
nodes agree bit for bit.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (ConfigError, DivisibilityError, IndexOutOfRange,
                     InterfaceNotResolved, OutOfDomain)


@dataclass(frozen=True)
class FdGrid:
    """Uniform grid on the unit box with ``n_interior`` interior points per axis."""
    dim: int
    n_interior: int

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ConfigError(f"spatial dimension must be 1, 2 or 3, got {self.dim}")
        if self.n_interior < 1:
            raise ConfigError("need at least one interior point per axis")

    @property
    def n_intervals(self):
        return self.n_interior + 1

    @property
    def spacing(self):
        return 1.0 / self.n_intervals

    @property
    def shape(self):
        return (self.n_intervals + 1,) * self.dim

    def axis_coordinates(self, axis=0):
        return np.arange(self.n_intervals + 1) / self.n_intervals

    # common axis description used by InterpolantMesh
    @property
    def axis_intervals(self):
        return (self.n_intervals,) * self.dim

    @property
    def axis_lengths(self):
        return (1.0,) * self.dim


@dataclass(frozen=True)
class SpaceTimeGrid:
    space: FdGrid
    n_time: int
    final_time: float

    def __post_init__(self):
        if self.n_time < 1:
            raise ConfigError("need at least one interior time level")
        if not self.final_time > 0:
            raise ConfigError("final time must be positive")

    @property
    def dim(self):
        return self.space.dim + 1

    @property
    def n_time_intervals(self):
        return self.n_time + 1

    @property
    def dt(self):
        return self.final_time / self.n_time_intervals

    def time(self, n):
        return n * self.final_time / self.n_time_intervals

    def times(self):
        return np.arange(self.n_time_intervals + 1) * self.final_time / self.n_time_intervals

    def cfl(self, c_max=1.0):
        return c_max * self.final_time * self.space.n_intervals / self.n_time_intervals

    @property
    def shape(self):
        return self.space.shape + (self.n_time_intervals + 1,)

    @property
    def axis_intervals(self):
        return self.space.axis_intervals + (self.n_time_intervals,)

    @property
    def axis_lengths(self):
        return self.space.axis_lengths + (float(self.final_time),)


@dataclass(frozen=True)
class Block:
    """Tensor-product group of cells, given as half-open cell ranges per axis."""
    index: tuple
    cell_ranges: tuple

    def node_ranges(self, r):
        return tuple((lo * r, hi * r) for lo, hi in self.cell_ranges)

    def contains_cell(self, cell):
        return all(lo <= c < hi for c, (lo, hi) in zip(cell, self.cell_ranges))


@dataclass(frozen=True)
class InterpolantMesh:
    """Q_r mesh whose elements span ``degree`` FD intervals per axis.

    ``cuts`` holds, per axis, the interior cell indices where the subdomain
    partition changes.  Subdomains are tensor-product blocks of cells.
    """
    degree: int
    intervals: tuple
    lengths: tuple
    n_space_axes: int
    cuts: tuple = field(default=None)

    def __post_init__(self):
        r = self.degree
        if r < 1:
            raise ConfigError("degree must be >= 1")
        for a, n in enumerate(self.intervals):
            if n % r:
                raise DivisibilityError(
                    f"degree {r} does not divide {n} intervals on axis {a}")
        if self.cuts is None:
            object.__setattr__(self, "cuts", tuple(() for _ in self.intervals))
        for a, cut in enumerate(self.cuts):
            m = self.cells_per_axis[a]
            if any(not 0 < c < m for c in cut) or list(cut) != sorted(set(cut)):
                raise ConfigError(f"bad subdomain cuts {cut} on axis {a}")

    @property
    def dim(self):
        return len(self.intervals)

    @property
    def is_space_time(self):
        return self.n_space_axes < self.dim

    @property
    def cells_per_axis(self):
        return tuple(n // self.degree for n in self.intervals)

    @property
    def n_cells(self):
        return int(np.prod(self.cells_per_axis))

    @property
    def nodes_per_axis(self):
        return tuple(n + 1 for n in self.intervals)

    @property
    def cell_sizes(self):
        return tuple(self.degree * L / n for n, L in zip(self.intervals, self.lengths))

    @property
    def fd_spacings(self):
        return tuple(L / n for n, L in zip(self.intervals, self.lengths))

    @property
    def h(self):
        return max(self.cell_sizes)

    def axis_nodes(self, axis):
        n = self.intervals[axis]
        return np.arange(n + 1) * self.lengths[axis] / n

    def cell_bounds(self, cell):
        out = []
        for a, c in enumerate(cell):
            n, L, r = self.intervals[a], self.lengths[a], self.degree
            out.append((c * r * L / n, (c + 1) * r * L / n))
        return out

    def cell_center(self, cell):
        return tuple(0.5 * (lo + hi) for lo, hi in self.cell_bounds(cell))

    def cell_volume(self, cell=None):
        return float(np.prod(self.cell_sizes))

    def iter_cells(self):
        return itertools.product(*(range(m) for m in self.cells_per_axis))

    def cell_nodes(self, cell):
        """FD node multi-indices of a cell, as per-axis index ranges."""
        r = self.degree
        return tuple(range(c * r, c * r + r + 1) for c in cell)

    def cell_of_point(self, p):
        p = tuple(float(x) for x in p)
        if len(p) != self.dim:
            raise OutOfDomain(f"point has {len(p)} coordinates, mesh has {self.dim} axes")
        cell = []
        for a, x in enumerate(p):
            L, m = self.lengths[a], self.cells_per_axis[a]
            if not 0.0 <= x <= L:
                raise OutOfDomain(f"coordinate {x} outside [0, {L}] on axis {a}")
            t = x / L * m
            if abs(t - round(t)) < 1e-9:
                t = float(round(t))
            c = int(np.floor(t))
            # shared faces go to the lower cell, the upper boundary to the last
            if c == t and c > 0:
                c -= 1
            cell.append(min(c, m - 1))
        return tuple(cell)

    # ---- subdomain blocks -------------------------------------------------
    def axis_blocks(self, axis):
        edges = (0,) + tuple(self.cuts[axis]) + (self.cells_per_axis[axis],)
        return list(zip(edges[:-1], edges[1:]))

    @property
    def blocks(self):
        per_axis = [self.axis_blocks(a) for a in range(self.dim)]
        out = []
        for idx in itertools.product(*(range(len(b)) for b in per_axis)):
            out.append(Block(idx, tuple(per_axis[a][i] for a, i in enumerate(idx))))
        return out

    def block_of_cell(self, cell):
        idx = tuple(int(np.searchsorted(self.cuts[a], c, side="right"))
                    for a, c in enumerate(cell))
        return next(b for b in self.blocks if b.index == idx)

    def subdomain_of_cell(self, cell):
        return self.block_of_cell(cell).index

    def with_cuts(self, cuts):
        return InterpolantMesh(self.degree, self.intervals, self.lengths,
                               self.n_space_axes, tuple(tuple(c) for c in cuts))


def build_interpolant_mesh(grid, r, interfaces=None):
    """Coarsen an FD grid (space or space-time) into a Q_r interpolant mesh.

    ``interfaces`` maps an axis to the coordinates of subdomain interfaces,
    e.g. ``{0: [0.5]}``.  Interfaces must fall on element boundaries.
    """
    intervals = tuple(grid.axis_intervals)
    lengths = tuple(grid.axis_lengths)
    n_space = grid.space.dim if isinstance(grid, SpaceTimeGrid) else grid.dim
    for a, n in enumerate(intervals):
        if n % r:
            raise DivisibilityError(
                f"degree {r} does not divide {n} intervals on axis {a}")
    cuts = [()] * len(intervals)
    for a, coords in (interfaces or {}).items():
        m = intervals[a] // r
        out = []
        for x in coords:
            t = Fraction(x).limit_denominator(10**9) / Fraction(lengths[a]).limit_denominator(10**9) * m
            if t.denominator != 1:
                raise InterfaceNotResolved(
                    f"interface at {x} on axis {a} is not an element boundary "
                    f"({m} cells)")
            out.append(int(t))
        cuts[a] = tuple(sorted(out))
    return InterpolantMesh(r, intervals, lengths, n_space, tuple(cuts))


def node_coordinate(grid, idx):
    idx = tuple(int(i) for i in idx)
    intervals = grid.axis_intervals
    if len(idx) != len(intervals):
        raise IndexOutOfRange(f"index {idx} has wrong length for a {len(intervals)}-axis grid")
    out = []
    for i, n, L in zip(idx, intervals, grid.axis_lengths):
        if not 0 <= i <= n:
            raise IndexOutOfRange(f"index {i} outside [0, {n}]")
        out.append(i * L / n)
    return tuple(out)


def flat_index(shape, idx):
    """Lexicographic flat index with the first axis varying fastest."""
    return int(np.ravel_multi_index(tuple(idx), shape, order="F"))


def multi_index(shape, k):
    return tuple(int(i) for i in np.unravel_index(k, shape, order="F"))
