"""Explicit leapfrog solvers for the acoustic wave equation on the unit box.

``u_tt = div(mu grad u)`` with homogeneous Dirichlet data, rho = 1.  The
second-order scheme supports piecewise-constant ``mu`` in flux form; the
fourth-order scheme (4th-order space stencil plus the modified-equation
``dt^4/12 L^2`` correction in time) requires a constant medium.
"""
from __future__ import annotations

import collections
import struct
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .errors import ConfigError, ConstraintViolation, UnstableRun
from .grid import FdGrid, SpaceTimeGrid
from .media import PiecewiseConstant, cell_values, edge_coefficients

# dt^2 * lambda_max <= 4 (order 2) and <= 12 (order 4); see stability_bound
STABILITY_ORDER2 = 1.0
STABILITY_ORDER4 = 1.5
INSTABILITY_FACTOR = 1e3


def stability_bound(order, dim):
    """Largest stable CFL number c*dt/dx for the leapfrog schemes in ``dim`` dimensions."""
    base = {2: STABILITY_ORDER2, 4: STABILITY_ORDER4}[order]
    return base / np.sqrt(dim)


@dataclass(frozen=True)
class ConstantMedium:
    c: float = 1.0


def wave_speed_max(medium):
    if isinstance(medium, ConstantMedium):
        return float(medium.c)
    return float(np.sqrt(medium.maximum))


@dataclass(frozen=True)
class WaveProblem:
    dim: int
    initial_displacement: Callable
    initial_velocity: Callable | None = None
    medium: object = ConstantMedium()   # or a PiecewiseConstant bulk modulus
    final_time: float = 1.0
    edge_mean: str = "arithmetic"


@dataclass(frozen=True)
class WaveRunConfig:
    n_space: int          # N_x + 1 intervals per spatial axis
    n_time: int           # N_t + 1 time intervals
    order: int = 2
    window: int | None = None   # None keeps every level
    closure: str = "odd"        # order-4 boundary rows: "odd" reflection or "shifted" one-sided

    def space_time_grid(self, problem):
        return SpaceTimeGrid(FdGrid(problem.dim, self.n_space - 1), self.n_time - 1,
                             problem.final_time)


class WaveHistory:
    """Retained FD time levels (all of them, or the trailing ``window``)."""

    def __init__(self, grid, window=None):
        self.grid = grid
        self.window = window
        maxlen = None if window is None else window
        self._levels = collections.deque(maxlen=maxlen)
        self._index = collections.deque(maxlen=maxlen)

    def append(self, n, level):
        self._levels.append(level)
        self._index.append(n)

    @property
    def levels(self):
        return list(self._levels)

    @property
    def level_indices(self):
        return list(self._index)

    @property
    def level_times(self):
        return [self.grid.time(n) for n in self._index]

    def as_array(self):
        """Stack of retained levels with time as the last axis."""
        return np.stack(self.levels, axis=-1)

    def dump(self, path, order):
        write_levels(path, self.grid, order, self.level_indices, self.levels)


# ---------------------------------------------------------------------------
# binary level dump: 32-byte header + little-endian float64 payload
# ---------------------------------------------------------------------------

MAGIC = b"FDRC"
VERSION = 1
_HEADER = struct.Struct("<4sHHHHIIId")


def write_levels(path, grid, order, indices, levels):
    """Write levels to ``path``; for a pure-space grid pass ``indices=[0]``."""
    if isinstance(grid, SpaceTimeGrid):
        dims, n_space, n_time, T = grid.space.dim, grid.space.n_intervals, grid.n_time_intervals, grid.final_time
    else:
        dims, n_space, n_time, T = grid.dim, grid.n_intervals, 0, 0.0
    header = _HEADER.pack(MAGIC, VERSION, dims, order, 0, n_space, n_time, len(levels), float(T))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.asarray(indices, dtype="<i8").tobytes())
        for lv in levels:
            fh.write(np.ascontiguousarray(lv, dtype="<f8").tobytes())


def read_levels(path):
    """Inverse of :func:`write_levels`: returns (header dict, indices, levels)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError("file too short for header")
    magic, version, dims, order, _, n_space, n_time, count, T = _HEADER.unpack_from(raw)
    if magic != MAGIC or version != VERSION:
        raise ValueError("bad magic or version")
    off = _HEADER.size
    indices = np.frombuffer(raw, dtype="<i8", count=count, offset=off)
    off += 8 * count
    shape = (n_space + 1,) * dims
    size = int(np.prod(shape))
    if len(raw) != off + 8 * size * count:
        raise ValueError("payload size does not match header")
    data = np.frombuffer(raw, dtype="<f8", offset=off).reshape((count,) + shape)
    header = dict(dims=dims, order=order, n_space=n_space, n_time=n_time, count=count,
                  final_time=T)
    return header, [int(i) for i in indices], [np.array(d) for d in data]


# ---------------------------------------------------------------------------
# spatial operator
# ---------------------------------------------------------------------------

class SpatialOperator:
    """Discrete ``div(mu grad .)`` for one grid, order and medium."""

    def __init__(self, medium, order, dim, n_intervals, edge_mean="arithmetic", closure="odd"):
        if closure not in ("odd", "shifted"):
            raise ConfigError("closure must be 'odd' or 'shifted'")
        self.order = order
        self.closure = closure
        self.inv_dx2 = float(n_intervals) ** 2
        self.faces = None
        if isinstance(medium, PiecewiseConstant):
            if order != 2:
                raise ConstraintViolation("the fourth-order scheme needs a constant medium")
            medium.check_resolved(n_intervals)
            self.faces = edge_coefficients(cell_values(medium, dim, n_intervals), edge_mean)
            self.scale = 1.0
        else:
            self.scale = float(medium.c) ** 2

    def __call__(self, u, out=None):
        out = np.empty_like(u) if out is None else out
        if self.faces is not None:
            kernels.flux_laplacian2(u, self.faces, out, self.inv_dx2)
        elif self.order == 2:
            kernels.laplacian2(u, out, self.inv_dx2 * self.scale)
        else:
            kernels.laplacian4(u, out, self.inv_dx2 * self.scale, closure=self.closure)
        return out


def apply_spatial_operator(level, medium, order, closure="odd"):
    n = level.shape[0] - 1
    op = SpatialOperator(medium, order, level.ndim, n, closure=closure)
    return op(np.ascontiguousarray(level, dtype=float))


# ---------------------------------------------------------------------------
# time stepping
# ---------------------------------------------------------------------------

def _sample(fn, dim, n):
    x = np.arange(n + 1) / n
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    out = np.asarray(fn(*grids), dtype=float) * np.ones((n + 1,) * dim)
    _zero_boundary(out)
    return out


def _zero_boundary(u):
    for a in range(u.ndim):
        idx = [slice(None)] * u.ndim
        idx[a] = 0
        u[tuple(idx)] = 0.0
        idx[a] = -1
        u[tuple(idx)] = 0.0


def check_config(problem, config):
    if config.order not in (2, 4):
        raise ConfigError("order must be 2 or 4")
    if config.order == 4 and isinstance(problem.medium, PiecewiseConstant):
        raise ConstraintViolation("the fourth-order scheme needs a constant medium")
    grid = config.space_time_grid(problem)
    cfl = grid.cfl(wave_speed_max(problem.medium))
    bound = stability_bound(config.order, problem.dim)
    if cfl > bound * (1 + 1e-12):
        raise ConfigError(f"CFL {cfl:.4f} exceeds the stability bound {bound:.4f}")
    return grid, cfl


def first_step(problem, config, u0=None, op=None):
    """Level n=1 from a Taylor expansion matching the scheme order."""
    grid = config.space_time_grid(problem)
    n, dt = config.n_space, grid.dt
    op = SpatialOperator(problem.medium, config.order, problem.dim, n, problem.edge_mean,
                                         config.closure) if op is None else op
    u0 = _sample(problem.initial_displacement, problem.dim, n) if u0 is None else u0
    g = (_sample(problem.initial_velocity, problem.dim, n)
         if problem.initial_velocity is not None else np.zeros_like(u0))
    lu0 = op(u0)
    u1 = u0 + dt * g + 0.5 * dt ** 2 * lu0
    if config.order == 4:
        u1 += dt ** 3 / 6.0 * op(g) + dt ** 4 / 24.0 * op(lu0)
    _zero_boundary(u1)
    return u1


def iter_levels(problem, config):
    """Yield ``(n, level)`` for n = 0..N_t+1.  Yielded arrays must not be modified."""
    grid, _ = check_config(problem, config)
    n_space, dim = config.n_space, problem.dim
    op = SpatialOperator(problem.medium, config.order, dim, n_space, problem.edge_mean, config.closure)
    dt2 = grid.dt ** 2
    b = dt2 ** 2 / 12.0 if config.order == 4 else 0.0

    prev = _sample(problem.initial_displacement, dim, n_space)
    yield 0, prev
    cur = first_step(problem, config, prev, op)
    yield 1, cur
    ref = max(kernels.max_abs(prev), kernels.max_abs(cur))
    lu = np.empty_like(cur)
    llu = np.empty_like(cur) if config.order == 4 else None
    for n in range(2, grid.n_time_intervals + 1):
        op(cur, lu)
        if llu is not None:
            op(lu, llu)
        nxt = np.empty_like(cur)
        kernels.leapfrog(prev, cur, lu, llu, dt2, b, nxt)
        if ref > 0 and kernels.max_abs(nxt) > INSTABILITY_FACTOR * ref:
            raise UnstableRun(f"|u| exceeded {INSTABILITY_FACTOR:g} x initial maximum at level {n}")
        prev, cur = cur, nxt
        yield n, cur


def run_wave(problem, config, on_level=None):
    """Run the solver to the final time, retaining ``config.window`` trailing levels."""
    grid = config.space_time_grid(problem)
    history = WaveHistory(grid, config.window)
    for n, level in iter_levels(problem, config):
        history.append(n, level)
        if on_level is not None:
            on_level(n, level)
    return history


def discrete_energy(prev, cur, op, dt):
    """Leapfrog energy 0.5|(u^{n+1}-u^n)/dt|^2 - 0.5 <L u^{n+1}, u^n> (grid-scaled)."""
    v = (cur - prev) / dt
    return 0.5 * float(np.sum(v * v)) - 0.5 * float(np.sum(op(cur) * prev))
