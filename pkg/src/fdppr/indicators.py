"""Recovery-based error indicators, true-error norms, effectivity and rates.

Everything is evaluated at tensor Gauss points.  Values and gradients of the
discrete interpolant, of the recovered gradient and of a fine-grid reference
are all obtained by contracting the nodal array with one sparse operator per
axis, so no per-cell Python loop is involved.  Per-cell results are kept as
*squared* norms per gradient component; reports take square roots at the end.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, NestingError, NonPositiveValue, ShapeMismatch
from .fe import (InterpolatedField, default_quadrature_order, fine_gauss_operator,
                 gauss_operator, gauss_points)
from .ppr import gauss_recovery_operator
from .tensor import apply_axes, cell_sums

H1_SPACE = "H1_space"
SPACE_TIME_NON_NATURAL = "SpaceTimeNonNatural"
RMS_FINAL_SLAB = "RmsNaturalFinalSlab"
NORM_KINDS = (H1_SPACE, SPACE_TIME_NON_NATURAL, RMS_FINAL_SLAB)


class DivisionByZeroError(ZeroDivisionError):
    """Effectivity requested for a run whose true error vanishes."""


# ---------------------------------------------------------------------------
# references
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExactReference:
    """``gradient(*coords)`` returns one array per mesh axis (time derivative last)."""
    gradient: Callable
    kind: str = "exact"


@dataclass(frozen=True)
class FineReference:
    """Nodal values of a fine solution on a mesh nesting the coarse one."""
    values: np.ndarray
    mesh: object
    kind: str = "fine"

    def factor(self, coarse):
        return nesting_factor(coarse, self.mesh)


@dataclass(frozen=True)
class ReferenceSolution:
    source: object
    kind: str

    @classmethod
    def exact(cls, gradient):
        return cls(ExactReference(gradient), "exact")

    @classmethod
    def fine(cls, values, mesh):
        return cls(FineReference(np.asarray(values, dtype=float), mesh), "fine")


def nesting_factor(coarse, fine):
    """Common refinement factor m with m*(coarse intervals) = fine intervals on every axis."""
    if coarse.dim != fine.dim or coarse.degree != fine.degree:
        raise NestingError("reference mesh has a different dimension or degree")
    ms = set()
    for nc, nf in zip(coarse.intervals, fine.intervals):
        if nf % nc:
            raise NestingError(f"{nf} fine intervals do not nest {nc} coarse intervals")
        ms.add(nf // nc)
    if len(ms) != 1:
        raise NestingError("refinement factor differs between axes")
    return ms.pop()


def _unwrap(reference):
    return reference.source if isinstance(reference, ReferenceSolution) else reference


# ---------------------------------------------------------------------------
# per-axis operators
# ---------------------------------------------------------------------------

@dataclass
class AxisOperators:
    """Sparse Gauss-point operators of one mesh axis."""
    value: object
    derivative: object
    rec_value: object
    rec_derivative: object
    points: np.ndarray
    weights: np.ndarray
    fine_value: object = None
    fine_derivative: object = None


def axis_operators(mesh, axis, q, fine_mesh=None, sub=1):
    x, w = gauss_points(mesh, axis, q, sub)
    ops = AxisOperators(gauss_operator(mesh, axis, q, False, sub),
                        gauss_operator(mesh, axis, q, True, sub),
                        gauss_recovery_operator(mesh, axis, q, False, sub),
                        gauss_recovery_operator(mesh, axis, q, True, sub),
                        x, w)
    if fine_mesh is not None:
        ops.fine_value = fine_gauss_operator(mesh, fine_mesh, axis, q, False, sub)
        ops.fine_derivative = fine_gauss_operator(mesh, fine_mesh, axis, q, True, sub)
    return ops


def subdivisions(mesh, reference, composite=True):
    """Quadrature pieces per coarse cell: the nesting factor for fine references.

    The fine interpolant is only piecewise polynomial inside a coarse cell,
    so an exact rule needs one Gauss rule per fine sub-cell.
    """
    ref = _unwrap(reference)
    if composite and isinstance(ref, FineReference):
        return nesting_factor(mesh, ref.mesh)
    return 1


def _pick(ops, k, val, der):
    return [getattr(o, der) if a == k else getattr(o, val) for a, o in enumerate(ops)]


# ---------------------------------------------------------------------------
# squared per-cell measures
# ---------------------------------------------------------------------------

@dataclass
class CellMeasures:
    """Squared per-cell norms, one array per gradient component.

    ``eta``: recovered minus discrete gradient; ``error``: reference minus
    discrete; ``rec_error``: reference minus recovered.  The latter two are
    None without a reference.
    """
    eta: list
    error: list | None = None
    rec_error: list | None = None

    def scaled(self, s):
        f = lambda lst: None if lst is None else [a * s for a in lst]
        return CellMeasures(f(self.eta), f(self.error), f(self.rec_error))

    def __add__(self, other):
        f = lambda x, y: None if x is None else [a + b for a, b in zip(x, y)]
        return CellMeasures(f(self.eta, other.eta), f(self.error, other.error),
                            f(self.rec_error, other.rec_error))


def _component_measures(discrete, recovered, reference, q, weights):
    eta = cell_sums((recovered - discrete) ** 2, q, weights)
    if reference is None:
        return eta, None, None
    return (eta, cell_sums((reference - discrete) ** 2, q, weights),
            cell_sums((reference - recovered) ** 2, q, weights))


def _collect(parts):
    eta = [p[0] for p in parts]
    if parts[0][1] is None:
        return CellMeasures(eta)
    return CellMeasures(eta, [p[1] for p in parts], [p[2] for p in parts])


def static_measures(mesh, values, q=None, reference=None, composite=True):
    """Per-cell squared measures of a nodal array on ``mesh`` (all axes at once)."""
    values = np.asarray(values, dtype=float)
    if values.shape != tuple(mesh.nodes_per_axis):
        raise ShapeMismatch(f"expected {mesh.nodes_per_axis}, got {values.shape}")
    q = default_quadrature_order(mesh.degree) if q is None else q
    ref = _unwrap(reference)
    fine_mesh = ref.mesh if isinstance(ref, FineReference) else None
    sub = subdivisions(mesh, ref, composite)
    ops = [axis_operators(mesh, a, q, fine_mesh, sub) for a in range(mesh.dim)]
    weights = [o.weights for o in ops]
    exact = None
    if isinstance(ref, ExactReference):
        pts = np.meshgrid(*[o.points for o in ops], indexing="ij")
        exact = [np.asarray(g, dtype=float) * np.ones(pts[0].shape) for g in ref.gradient(*pts)]
    parts = []
    for k in range(mesh.dim):
        disc = apply_axes(values, _pick(ops, k, "value", "derivative"))
        rec = apply_axes(values, _pick(ops, k, "rec_value", "rec_derivative"))
        if exact is not None:
            refk = exact[k]
        elif fine_mesh is not None:
            refk = apply_axes(ref.values, _pick(ops, k, "fine_value", "fine_derivative"))
        else:
            refk = None
        parts.append(_component_measures(disc, rec, refk, q * sub, weights))
    return _collect(parts)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def effectivity(indicator_value, true_error):
    if not true_error > 0:
        raise DivisionByZeroError("true error is zero; effectivity undefined")
    return float(indicator_value) / float(true_error)


@dataclass
class IndicatorReport:
    per_cell: dict                   # "spatial" / "temporal" -> per-cell eta arrays
    global_spatial: float
    global_temporal: float | None
    norm_kind: str

    @property
    def global_value(self):
        t = self.global_temporal or 0.0
        return float(np.sqrt(self.global_spatial ** 2 + t ** 2))


@dataclass
class ErrorReport:
    true_error: float
    recovered_error: float
    effectivity: float | None


@dataclass
class NormSummary:
    """Indicator, true error and recovered-gradient error of one norm kind.

    ``groups`` maps "space", "time" and "total" to dicts with keys eta,
    error, rec_error, ei (error keys present only with a reference).
    """
    norm_kind: str
    groups: dict
    cells: dict = field(default_factory=dict, repr=False)

    def __getitem__(self, key):
        return self.groups[key]


def _total(arrs):
    return float(np.sqrt(sum(float(np.sum(a)) for a in arrs)))


def summarize(measures, n_space_axes, norm_kind):
    """Group squared component measures into space / time / total norms."""
    comps = len(measures.eta)
    groups = {"space": list(range(n_space_axes))}
    if comps > n_space_axes:
        groups["time"] = list(range(n_space_axes, comps))
    groups["total"] = list(range(comps))
    out, cells = {}, {}
    for name, idx in groups.items():
        row = {"eta": _total([measures.eta[i] for i in idx])}
        cells[name] = {"eta": np.sqrt(sum(measures.eta[i] for i in idx))}
        if measures.error is not None:
            row["error"] = _total([measures.error[i] for i in idx])
            row["rec_error"] = _total([measures.rec_error[i] for i in idx])
            row["ei"] = row["eta"] / row["error"] if row["error"] > 0 else float("nan")
            cells[name]["error"] = np.sqrt(sum(measures.error[i] for i in idx))
            cells[name]["rec_error"] = np.sqrt(sum(measures.rec_error[i] for i in idx))
        out[name] = row
    return NormSummary(norm_kind, out, cells)


def indicator_report(summary):
    cells = {"spatial": summary.cells["space"]["eta"]}
    temporal = None
    if "time" in summary.groups:
        cells["temporal"] = summary.cells["time"]["eta"]
        temporal = summary["time"]["eta"]
    return IndicatorReport(cells, summary["space"]["eta"], temporal, summary.norm_kind)


def error_report(summary, group="total"):
    g = summary[group]
    if "error" not in g:
        raise ConfigError("no reference was supplied")
    ei = g["eta"] / g["error"] if g["error"] > 0 else None
    return ErrorReport(g["error"], g["rec_error"], ei)


def _field_mesh(field):
    return field.mesh


def poisson_indicator(field, recovered=None, q=None):
    """Local and global indicators ||G_h u_h - grad u_h|| on the spatial mesh.

    Without ``recovered`` the separable recovery is used; with it, the given
    nodal recovered gradient is evaluated pointwise at the Gauss points.
    """
    mesh = _field_mesh(field)
    q = default_quadrature_order(mesh.degree) if q is None else q
    if recovered is None:
        summary = summarize(static_measures(mesh, field.values, q), mesh.n_space_axes, H1_SPACE)
        return indicator_report(summary)
    ops = [gauss_points(mesh, a, q) for a in range(mesh.dim)]
    pts = np.stack([g.ravel(order="F") for g in
                    np.meshgrid(*[o[0] for o in ops], indexing="ij")], axis=-1)
    diff = recovered.evaluate(pts) - field.gradient(pts)
    shape = tuple(len(o[0]) for o in ops)
    weights = [o[1] for o in ops]
    eta = [cell_sums(diff[:, k].reshape(shape, order="F") ** 2, q, weights) for k in range(mesh.dim)]
    return indicator_report(summarize(CellMeasures(eta), mesh.n_space_axes, H1_SPACE))


def true_error_norm(field, reference, q=None):
    """ErrorReport of the gradient norm against an exact or fine reference."""
    mesh = _field_mesh(field)
    s = summarize(static_measures(mesh, field.values, q, reference), mesh.n_space_axes, H1_SPACE)
    return error_report(s)


def convergence_rates(values):
    """Rates log(v_{k-1}/v_k)/log(h_{k-1}/h_k) for a list of (h, value) pairs."""
    hs = [float(h) for h, _ in values]
    vs = [float(v) for _, v in values]
    if any(not v > 0 for v in vs) or any(not h > 0 for h in hs):
        raise NonPositiveValue("rates need strictly positive h and values")
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise ConfigError("h must be strictly decreasing")
    return [float(np.log(vs[k - 1] / vs[k]) / np.log(hs[k - 1] / hs[k])) for k in range(1, len(vs))]


def fitted_slope(hs, values):
    """Least-squares slope of log(value) against log(h)."""
    hs, values = np.asarray(hs, dtype=float), np.asarray(values, dtype=float)
    if np.any(values <= 0) or np.any(hs <= 0):
        raise NonPositiveValue("slopes need strictly positive h and values")
    return float(np.polyfit(np.log(hs), np.log(values), 1)[0])
