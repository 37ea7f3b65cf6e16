"""Streaming space-time norms for wave runs.

A full space-time Gauss array does not fit in memory at the finest
resolutions, so the time axis is contracted one element layer at a time.
For each layer the time operators (value, derivative and their recovered
counterparts) are applied to the few FD levels they touch, which gives one
spatial array per time quadrature row; the spatial operators then act on
those arrays exactly as in the static case.  Levels are pulled from
generators and dropped as soon as no later layer needs them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, WindowTooSmall
from .fe import default_quadrature_order
from .indicators import (RMS_FINAL_SLAB, SPACE_TIME_NON_NATURAL, CellMeasures, ExactReference,
                         _pick, axis_operators, indicator_report, nesting_factor,
                         summarize)
from .tensor import apply_axes, cell_sums


@dataclass
class FineStream:
    """Fine reference supplied level by level: ``levels`` yields (n, array)."""
    levels: object
    mesh: object
    kind: str = "fine"


class LevelBuffer:
    """Pull FD levels from an iterator on demand and forget them when done."""

    def __init__(self, levels):
        self._it = iter(levels)
        self.store = {}
        self.last = -1

    def ensure(self, n, keep_from=0):
        """Read up to level ``n``, storing only levels ``>= keep_from``."""
        while self.last < n:
            try:
                k, arr = next(self._it)
            except StopIteration:
                raise WindowTooSmall(f"level {n} was requested but the stream ended at {self.last}")
            if k >= keep_from:
                self.store[k] = arr
            self.last = k

    def combine(self, row):
        """Linear combination sum_n row[n] * level_n for one sparse row."""
        out = None
        for n, c in zip(row.indices, row.data):
            if c == 0.0:
                continue
            if n not in self.store:
                raise WindowTooSmall(f"level {n} is outside the retained window")
            term = c * self.store[n]
            out = term if out is None else out + term
        if out is None:
            shape = next(iter(self.store.values())).shape
            out = np.zeros(shape)
        return out

    def drop_below(self, n):
        for k in [k for k in self.store if k < n]:
            del self.store[k]


def _row_span(op, rows):
    sub = op[rows]
    idx = sub.indices[sub.data != 0]
    return (int(idx.min()), int(idx.max())) if idx.size else (0, -1)


@dataclass
class LayerResult:
    index: int
    measures: CellMeasures     # squared per spatial cell, integrated over the layer
    duration: float


class _LayerRule:
    """Operators and quadrature of one subdivision count."""

    def __init__(self, mesh, q, fine_mesh, sub):
        ds = mesh.n_space_axes
        ops = [axis_operators(mesh, a, q, fine_mesh, sub) for a in range(mesh.dim)]
        self.space, self.time = ops[:ds], ops[-1]
        self.weights = [o.weights for o in self.space]
        self.npt = q * sub
        self.fine = fine_mesh is not None

    def rows(self, L):
        return range(L * self.npt, (L + 1) * self.npt)

    def spans(self, L):
        rows = slice(L * self.npt, (L + 1) * self.npt)
        s = [_row_span(getattr(self.time, nm), rows) for nm in _TIME_NAMES]
        coarse = (min(a for a, _ in s), max(b for _, b in s))
        if not self.fine:
            return coarse, None
        f = [_row_span(getattr(self.time, nm), rows) for nm in ("fine_value", "fine_derivative")]
        return coarse, (min(a for a, _ in f), max(b for _, b in f))


_TIME_NAMES = ("value", "derivative", "rec_value", "rec_derivative")


def _layer_measures(rule, g, coarse, fine, reference):
    space, tops = rule.space, rule.time
    ds = len(space)
    slices = {nm: coarse.combine(getattr(tops, nm)[g]) for nm in _TIME_NAMES}
    refs = None
    if fine is not None:
        fv = fine.combine(tops.fine_value[g])
        fd = fine.combine(tops.fine_derivative[g])
        refs = [apply_axes(fv, _pick(space, k, "fine_value", "fine_derivative")) for k in range(ds)]
        refs.append(apply_axes(fd, [o.fine_value for o in space]))
    elif isinstance(reference, ExactReference):
        pts = np.meshgrid(*[o.points for o in space], indexing="ij")
        refs = [np.asarray(c, dtype=float) * np.ones(pts[0].shape)
                for c in reference.gradient(*pts, tops.points[g])]
    eta, err, rec_err = [], [], []
    for k in range(ds + 1):
        if k < ds:
            disc = apply_axes(slices["value"], _pick(space, k, "value", "derivative"))
            rec = apply_axes(slices["rec_value"], _pick(space, k, "rec_value", "rec_derivative"))
        else:
            disc = apply_axes(slices["derivative"], [o.value for o in space])
            rec = apply_axes(slices["rec_derivative"], [o.rec_value for o in space])
        eta.append(cell_sums((rec - disc) ** 2, rule.npt, rule.weights))
        if refs is not None:
            err.append(cell_sums((refs[k] - disc) ** 2, rule.npt, rule.weights))
            rec_err.append(cell_sums((refs[k] - rec) ** 2, rule.npt, rule.weights))
    return CellMeasures(eta, err or None, rec_err or None).scaled(tops.weights[g])


def stream_layers(mesh, levels, q=None, reference=None, layers="all", composite="final"):
    """Yield :class:`LayerResult` per time element layer of a space-time mesh.

    ``levels`` yields ``(n, level)`` in increasing n; with ``layers="last"``
    only the final slab is evaluated and earlier levels may be absent.
    With a fine reference, ``composite`` selects where the quadrature is
    refined to one Gauss rule per fine sub-cell: ``True`` (every layer),
    ``"final"`` (final slab only) or ``False``.
    """
    if not mesh.is_space_time:
        raise ConfigError("streaming needs a space-time mesh")
    if composite not in (True, False, "final"):
        raise ConfigError("composite must be True, False or 'final'")
    q = default_quadrature_order(mesh.degree) if q is None else q
    fine_mesh = reference.mesh if isinstance(reference, FineStream) else None
    m = nesting_factor(mesh, fine_mesh) if fine_mesh is not None else 1
    n_layers = mesh.cells_per_axis[-1]
    order = list(range(n_layers)) if layers == "all" else [n_layers - 1]
    rules = {}

    def rule_for(L):
        sub = m if (composite is True or (composite == "final" and L == n_layers - 1)) else 1
        if sub not in rules:
            rules[sub] = _LayerRule(mesh, q, fine_mesh, sub)
        return rules[sub]

    spans = {L: rule_for(L).spans(L) for L in order}
    coarse = LevelBuffer(levels)
    fine = LevelBuffer(reference.levels) if fine_mesh is not None else None
    for i, L in enumerate(order):
        rule = rule_for(L)
        (lo, hi), fspan = spans[L]
        coarse.ensure(hi, lo)
        if fine is not None:
            fine.ensure(fspan[1], fspan[0])
        acc = None
        for g in rule.rows(L):
            part = _layer_measures(rule, g, coarse, fine, reference)
            acc = part if acc is None else acc + part
        yield LayerResult(L, acc, float(mesh.cell_sizes[-1]))
        later = order[i + 1:]
        if later:
            coarse.drop_below(min(spans[K][0][0] for K in later))
            if fine is not None:
                fine.drop_below(min(spans[K][1][0] for K in later))


@dataclass
class SpaceTimeResult:
    """Norm summaries of one wave run (keys: norm kinds that were requested)."""
    summaries: dict
    layer_cells: list | None = None   # per-layer squared measures when kept


def wave_measures(mesh, levels, q=None, reference=None, kinds=(RMS_FINAL_SLAB,),
                  composite="final", keep_layers=False):
    """Non-natural (all layers) and/or final-slab RMS measures of a wave run."""
    layers = "all" if SPACE_TIME_NON_NATURAL in kinds else "last"
    total, last, kept = None, None, []
    for res in stream_layers(mesh, levels, q, reference, layers, composite):
        total = res.measures if total is None else total + res.measures
        last = res
        if keep_layers:
            kept.append(res.measures)
    ds = mesh.n_space_axes
    out = {}
    if SPACE_TIME_NON_NATURAL in kinds:
        out[SPACE_TIME_NON_NATURAL] = summarize(total, ds, SPACE_TIME_NON_NATURAL)
    if RMS_FINAL_SLAB in kinds:
        out[RMS_FINAL_SLAB] = summarize(last.measures.scaled(1.0 / last.duration), ds, RMS_FINAL_SLAB)
    return SpaceTimeResult(out, kept if keep_layers else None)


def wave_spacetime_indicator(mesh, levels, q=None):
    """IndicatorReport of the non-natural space-time norm (spatial cells, time summed)."""
    res = wave_measures(mesh, levels, q, None, (SPACE_TIME_NON_NATURAL,), keep_layers=True)
    report = indicator_report(res.summaries[SPACE_TIME_NON_NATURAL])
    # per space-time cell values, time axis last
    stack = lambda comps: np.stack([np.sqrt(sum(c[i] for i in comps)) for c in
                                    [lm.eta for lm in res.layer_cells]], axis=-1)
    ds = mesh.n_space_axes
    report.per_cell = {"spatial": stack(range(ds)), "temporal": stack([ds])}
    return report


def rms_slab_indicator(mesh, levels, q=None):
    """IndicatorReport of the RMS norm over the final time slab, per spatial cell."""
    res = wave_measures(mesh, levels, q, None, (RMS_FINAL_SLAB,))
    return indicator_report(res.summaries[RMS_FINAL_SLAB])


def static_as_levels(values):
    """Adapt a full nodal array (time last) into a level stream."""
    return ((n, np.ascontiguousarray(values[..., n])) for n in range(values.shape[-1]))
