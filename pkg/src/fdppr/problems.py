"""Built-in problem presets.

Each preset carries the PDE data, the coefficient interfaces the interpolant
mesh must respect, and the default reference used to measure true errors.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .media import PiecewiseConstant
from .poisson import PoissonProblem
from .wave import ConstantMedium, WaveProblem

PI = np.pi


@dataclass(frozen=True)
class PoissonPreset:
    name: str
    problem: PoissonProblem
    interfaces: dict = field(default_factory=dict)
    reference: str = "exact"          # "exact" or "fine:<N+1>"
    kind: str = "poisson"

    def order(self, r):
        return r + 1


@dataclass(frozen=True)
class WavePreset:
    name: str
    problem: WaveProblem
    cfl: float
    interfaces: dict = field(default_factory=dict)
    closure: str = "odd"
    reference: str = "factor:4"
    kind: str = "wave"

    def order(self, r):
        return r + 1

    def n_time(self, n_space, cfl=None):
        """Time intervals giving the requested CFL number (rounded to an integer count)."""
        cfl = self.cfl if cfl is None else cfl
        return int(round(self.problem.final_time * n_space / cfl))


# ---------------------------------------------------------------------------
# Poisson
# ---------------------------------------------------------------------------

def _sin8(x, y):
    return np.sin(8 * PI * x) * np.sin(8 * PI * y)


def poisson_ex1():
    """Smooth oscillatory solution sin(8 pi x) sin(8 pi y), zero boundary data."""
    def grad(x, y):
        return (8 * PI * np.cos(8 * PI * x) * np.sin(8 * PI * y),
                8 * PI * np.sin(8 * PI * x) * np.cos(8 * PI * y))
    prob = PoissonProblem(rhs=lambda x, y: 128 * PI ** 2 * _sin8(x, y),
                          dirichlet=lambda x, y: _sin8(x, y),
                          exact=_sin8, exact_gradient=grad)
    return PoissonPreset("poisson_ex1", prob)


def _front(x, y):
    rho = np.sqrt(x * x + y * y)
    s = 25.0 * (rho - 0.5)
    return rho, s


def poisson_ex2():
    """Steep circular front arctan(25(|x| - 1/2))."""
    def exact(x, y):
        return np.arctan(_front(x, y)[1])

    def grad(x, y):
        rho, s = _front(x, y)
        du = 25.0 / (1.0 + s * s)
        with np.errstate(divide="ignore", invalid="ignore"):
            gx = np.where(rho > 0, du * x / rho, 0.0)
            gy = np.where(rho > 0, du * y / rho, 0.0)
        return gx, gy

    def rhs(x, y):
        rho, s = _front(x, y)
        du = 25.0 / (1.0 + s * s)
        d2u = -1250.0 * s / (1.0 + s * s) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(rho > 0, -(d2u + du / np.where(rho > 0, rho, 1.0)), 0.0)

    prob = PoissonProblem(rhs=rhs, dirichlet=exact, exact=exact, exact_gradient=grad)
    return PoissonPreset("poisson_ex2", prob)


def checkerboard(x, y):
    """0.5 on the lower-left and upper-right quarters, 10 elsewhere."""
    same = (x <= 0.5) == (y <= 0.5)
    return np.where(same, 0.5, 10.0)


def poisson_ex3():
    """Checkerboard coefficient, f = sin(pi x) sin(pi y), zero boundary data."""
    coef = PiecewiseConstant(checkerboard, {0: [0.5], 1: [0.5]}, 10.0)
    prob = PoissonProblem(rhs=lambda x, y: np.sin(PI * x) * np.sin(PI * y),
                          dirichlet=lambda x, y: np.zeros_like(x), coefficient=coef)
    return PoissonPreset("poisson_ex3", prob, {0: [0.5], 1: [0.5]}, reference="fine:256")


# ---------------------------------------------------------------------------
# wave
# ---------------------------------------------------------------------------

def layered_modulus(x, y):
    return np.where(x <= 0.5, 1.0, 0.5)


def wave2d_hetero():
    """Gaussian pulse at (1/4, 1/2) crossing a bulk-modulus jump at x1 = 1/2."""
    mu = PiecewiseConstant(layered_modulus, {0: [0.5]}, 1.0)
    prob = WaveProblem(2, lambda x, y: np.exp(-((x - 0.25) ** 2 + (y - 0.5) ** 2) / 0.005),
                       medium=mu, final_time=0.705)
    return WavePreset("wave2d_hetero", prob, cfl=0.705, interfaces={0: [0.5]})


def wave3d_homog():
    """Centred Gaussian pulse in a homogeneous unit cube."""
    prob = WaveProblem(3, lambda x, y, z: np.exp(-((x - .5) ** 2 + (y - .5) ** 2 + (z - .5) ** 2) / 0.01),
                       medium=ConstantMedium(1.0), final_time=1.0)
    return WavePreset("wave3d_homog", prob, cfl=0.5)


PRESETS = {
    "poisson_ex1": poisson_ex1,
    "poisson_ex2": poisson_ex2,
    "poisson_ex3": poisson_ex3,
    "wave2d_hetero": wave2d_hetero,
    "wave3d_homog": wave3d_homog,
}


def get_preset(name):
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown problem {name!r}; choose from {sorted(PRESETS)}") from None
