"""Convergence studies: configuration, orchestration and output files."""
from __future__ import annotations

import collections
import csv
import dataclasses
import hashlib
import io
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, FdpprError
from .grid import FdGrid, build_interpolant_mesh
from .indicators import (H1_SPACE, RMS_FINAL_SLAB, SPACE_TIME_NON_NATURAL, FineReference,
                         ReferenceSolution, convergence_rates, static_measures, summarize)
from .media import PiecewiseConstant
from .poisson import assemble, solve
from .problems import WavePreset, get_preset
from .spacetime import FineStream, wave_measures
from .wave import WaveRunConfig, iter_levels, read_levels, wave_speed_max, write_levels

log = logging.getLogger(__name__)

NORM_NAMES = {"h1": H1_SPACE, "nonnatural": SPACE_TIME_NON_NATURAL, "rms": RMS_FINAL_SLAB}
POISSON_COLUMNS = ["N+1", "h", "error", "error_rate", "eta", "eta_rate", "rec_error", "rec_rate", "ei"]
WAVE_COLUMNS = ["N_t+1"] + POISSON_COLUMNS
DEFAULT_MEMORY_BUDGET = 1 << 30


class RunFailed(FdpprError):
    """Wraps a module error with the resolution at which it happened."""

    def __init__(self, resolution, cause):
        super().__init__(f"resolution {resolution}: {cause}")
        self.resolution = resolution
        self.cause = cause


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def parse_resolutions(text):
    """``"4,8,16"`` or ``"32:16,64:32"`` (N_t+1:N+1) into a tuple of tuples."""
    out = []
    for item in str(text).replace(" ", "").split(","):
        if not item:
            continue
        try:
            out.append(tuple(int(p) for p in item.split(":")))
        except ValueError:
            raise ConfigError(f"bad resolution {item!r}") from None
        if len(out[-1]) > 2 or min(out[-1]) < 2:
            raise ConfigError(f"bad resolution {item!r}")
    if not out:
        raise ConfigError("no resolutions given")
    return tuple(out)


def format_resolutions(res):
    return ",".join(":".join(str(v) for v in r) for r in res)


def parse_reference(text):
    """``exact``, ``fine:<N+1>`` or ``factor:<m>`` into (kind, value)."""
    text = str(text).strip()
    if text == "exact":
        return "exact", None
    kind, _, val = text.partition(":")
    if kind in ("fine", "factor") and val.isdigit() and int(val) > 0:
        return kind, int(val)
    raise ConfigError(f"reference must be exact, fine:<N+1> or factor:<m>, got {text!r}")


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


@dataclass
class ExperimentConfig:
    """One convergence study.  ``None`` fields take the preset defaults."""
    problem: str
    r: int = 1
    resolutions: tuple = ()
    cfl: float | None = None
    final_time: float | None = None
    norms: tuple | None = None
    reference: str | None = None
    output_dir: str | None = None
    composite: object = None
    cache: bool | None = None
    tol: float = 1e-12
    q: int | None = None
    memory_budget: int = DEFAULT_MEMORY_BUDGET
    dump_fields: bool = False
    closure: str | None = None

    KEYS = {"problem": "problem", "r": "r", "resolutions": "resolutions", "cfl": "cfl",
            "T": "final_time", "norm": "norms", "reference": "reference", "out": "output_dir",
            "composite": "composite", "cache": "cache", "tol": "tol", "q": "q",
            "memory_budget": "memory_budget", "dump_fields": "dump_fields", "closure": "closure"}

    @classmethod
    def from_mapping(cls, mapping):
        """Build from flat string key/values as found in a config file."""
        kw = {}
        for key, raw in mapping.items():
            if key not in cls.KEYS:
                raise ConfigError(f"unknown config key {key!r}")
            name, val = cls.KEYS[key], str(raw).strip()
            try:
                if name in ("r", "q", "memory_budget"):
                    kw[name] = int(val)
                elif name in ("cfl", "final_time", "tol"):
                    kw[name] = float(val)
                elif name == "resolutions":
                    kw[name] = parse_resolutions(val)
                elif name == "norms":
                    kw[name] = tuple(v for v in val.replace(" ", "").split(",") if v)
                elif name == "composite":
                    kw[name] = "final" if val == "final" else _bool(val)
                elif name in ("cache", "dump_fields"):
                    kw[name] = _bool(val)
                else:
                    kw[name] = val
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from None
        if "problem" not in kw:
            raise ConfigError("config needs a problem")
        return cls(**kw)

    def to_mapping(self):
        out = {}
        for key, name in self.KEYS.items():
            v = getattr(self, name)
            if v is None:
                continue
            if name == "resolutions":
                v = format_resolutions(v)
            elif name == "norms":
                v = ",".join(v)
            out[key] = str(v).lower() if isinstance(v, bool) else str(v)
        return out


def read_config_file(path):
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    mapping = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        mapping[key.strip()] = val.strip()
    return mapping


@dataclass
class Study:
    """A config resolved against its preset."""
    config: ExperimentConfig
    preset: object
    kinds: tuple
    reference: tuple
    composite: object
    cache: bool

    @property
    def is_wave(self):
        return isinstance(self.preset, WavePreset)

    @property
    def order(self):
        return self.preset.order(self.config.r)


def resolve(config, preset=None):
    """Validate a config and fill preset defaults."""
    preset = get_preset(config.problem) if preset is None else preset
    r = config.r
    if r not in (1, 3):
        raise ConfigError("r must be 1 or 3 (FD orders 2 and 4)")
    if not config.resolutions:
        raise ConfigError("no resolutions given")
    wave = isinstance(preset, WavePreset)
    if wave:
        default = ("rms", "nonnatural") if preset.problem.dim == 2 else ("rms",)
        problem = preset.problem
        if config.final_time is not None:
            problem = dataclasses.replace(problem, final_time=config.final_time)
        cfl = preset.cfl if config.cfl is None else config.cfl
        preset = dataclasses.replace(preset, problem=problem, cfl=cfl,
                                     closure=config.closure or preset.closure)
    else:
        default = ("h1",)
        if config.cfl is not None or config.final_time is not None:
            raise ConfigError("cfl and T apply to wave problems only")
        if isinstance(preset.problem.coefficient, PiecewiseConstant) and r != 1:
            raise ConfigError("variable coefficients support r = 1 only")
    names = config.norms or default
    for n in names:
        if n not in NORM_NAMES:
            raise ConfigError(f"unknown norm {n!r}; choose from {sorted(NORM_NAMES)}")
        if (n == "h1") == wave:
            raise ConfigError(f"norm {n!r} does not apply to {preset.name}")
    kinds = tuple(NORM_NAMES[n] for n in names)
    ref = parse_reference(config.reference or preset.reference)
    if ref[0] == "exact" and (wave or preset.problem.exact_gradient is None):
        raise ConfigError(f"{preset.name} has no exact solution; use fine:<N+1> or factor:<m>")
    for res in config.resolutions:
        if len(res) == 2 and not wave:
            raise ConfigError("Poisson resolutions are a single N+1")
        if any(v % r for v in res):
            raise ConfigError(f"r = {r} does not divide resolution {res}")
        if ref[0] == "fine" and ref[1] % res[-1]:
            raise ConfigError(f"fine reference N+1 = {ref[1]} does not nest N+1 = {res[-1]}")
    composite = config.composite
    if composite is None:
        composite = True if not wave else ("final" if preset.problem.dim == 2 else False)
    cache = (not wave) if config.cache is None else config.cache
    return Study(config, preset, kinds, ref, composite, cache)


# ---------------------------------------------------------------------------
# reference cache
# ---------------------------------------------------------------------------

def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def reference_key(payload):
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


@dataclass
class CachedReference:
    path: Path
    indices: list
    levels: list
    hit: bool


def _cached(payload, compute, cache_dir):
    """Load the dump keyed by ``payload`` or compute, write and return it.

    A sidecar file holds the sha256 of the dump; any mismatch or read error
    triggers recomputation.
    """
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    key = reference_key(payload)
    path = cache_dir / f"ref-{key[:24]}.fdrc"
    sidecar = path.with_name(path.name + ".sha256")
    if path.exists() and sidecar.exists():
        try:
            if sidecar.read_text().strip() == _sha256(path):
                _, indices, levels = read_levels(path)
                return CachedReference(path, indices, levels, True)
            log.warning("reference cache %s failed its checksum; recomputing", path.name)
        except ValueError:
            log.warning("reference cache %s is unreadable; recomputing", path.name)
    grid, order, indices, levels = compute()
    write_levels(path, grid, order, indices, levels)
    sidecar.write_text(_sha256(path) + "\n")
    return CachedReference(path, list(indices), list(levels), False)


def _poisson_reference(preset, order, n_fine, tol):
    grid = FdGrid(2, n_fine - 1)
    sol = solve(assemble(preset.problem, grid, order), tol=tol)
    return grid, order, [0], [sol.values]


def _wave_final_levels(preset, cfg, keep):
    grid = cfg.space_time_grid(preset.problem)
    tail = collections.deque(maxlen=keep)
    for n, level in iter_levels(preset.problem, cfg):
        tail.append((n, level))
    return grid, cfg.order, [n for n, _ in tail], [lv for _, lv in tail]


def cache_reference(preset, r, fine_resolution, cache_dir, tol=1e-12, keep=None):
    """Fine reference dump for a preset, reused while problem and resolution match.

    Poisson: ``fine_resolution`` is N+1 and the dump holds the nodal array.
    Wave: ``fine_resolution`` is (N_t+1, N+1) and the dump holds the last
    ``keep`` levels, enough for final-slab norms.
    """
    order = preset.order(r)
    payload = {"problem": preset.name, "order": order, "resolution": fine_resolution,
               "format": 1, "version": __version__}
    if isinstance(preset, WavePreset):
        nt, nx = fine_resolution
        cfg = WaveRunConfig(nx, nt, order, closure=preset.closure)
        payload.update(T=preset.problem.final_time, closure=preset.closure, keep=keep)
        return _cached(payload, lambda: _wave_final_levels(preset, cfg, keep), cache_dir)
    payload.update(tol=tol)
    return _cached(payload, lambda: _poisson_reference(preset, order, fine_resolution, tol), cache_dir)


# ---------------------------------------------------------------------------
# runs
# ---------------------------------------------------------------------------

@dataclass
class ResolutionResult:
    resolution: tuple
    h: float
    summaries: dict            # norm kind -> NormSummary
    mesh: object
    seconds: float
    diagnostics: dict


@dataclass
class RunRecord:
    """Config snapshot, table rows per (norm kind, group), timings and diagnostics."""
    config: dict
    problem: str
    wave: bool
    primary: tuple
    tables: dict
    results: list = field(repr=False, default_factory=list)
    files: dict = field(default_factory=dict)

    @property
    def rows(self):
        return self.tables[self.primary]


def _wave_resolution(study, res):
    preset = study.preset
    if len(res) == 2:
        return res
    return (preset.n_time(res[0]), res[0])


def _fine_factor(study, n_space):
    kind, val = study.reference
    if kind == "factor":
        return val
    if val % n_space:
        raise ConfigError(f"fine reference N+1 = {val} does not nest N+1 = {n_space}")
    return val // n_space


def _poisson_run(study, res):
    cfg, preset = study.config, study.preset
    n = res[0]
    grid = FdGrid(2, n - 1)
    t0 = time.perf_counter()
    sol = solve(assemble(preset.problem, grid, study.order), tol=cfg.tol)
    mesh = build_interpolant_mesh(grid, cfg.r, preset.interfaces)
    kind, _ = study.reference
    if kind == "exact":
        ref = ReferenceSolution.exact(preset.problem.exact_gradient)
    else:
        nf = n * _fine_factor(study, n)
        fmesh = build_interpolant_mesh(FdGrid(2, nf - 1), cfg.r)
        if study.cache and cfg.output_dir:
            cached = cache_reference(preset, cfg.r, nf, Path(cfg.output_dir) / "cache", cfg.tol)
            values = cached.levels[0]
        else:
            values = _poisson_reference(preset, study.order, nf, cfg.tol)[3][0]
        ref = FineReference(values, fmesh)
    measures = static_measures(mesh, sol.values, cfg.q, ref, study.composite)
    summary = summarize(measures, 2, H1_SPACE)
    diag = {"iterations": sol.iterations, "residual": sol.residual}
    return ResolutionResult(res, 1.0 / n, {H1_SPACE: summary}, mesh,
                            time.perf_counter() - t0, diag)


def spacetime_bytes(n_time, n_space, dim):
    return 8 * (n_space + 1) ** dim * (n_time + 1)


def _wave_run(study, res):
    cfg, preset = study.config, study.preset
    nt, nx = res
    order, dim = study.order, preset.problem.dim
    if SPACE_TIME_NON_NATURAL in study.kinds and spacetime_bytes(nt, nx, dim) > cfg.memory_budget:
        raise ConfigError(f"space-time norms at {res} exceed the memory budget of "
                          f"{cfg.memory_budget} bytes; request the rms norm only")
    t0 = time.perf_counter()
    run_cfg = WaveRunConfig(nx, nt, order, closure=preset.closure)
    grid = run_cfg.space_time_grid(preset.problem)
    mesh = build_interpolant_mesh(grid, cfg.r, preset.interfaces)
    m = _fine_factor(study, nx)
    fine_cfg = WaveRunConfig(m * nx, m * nt, order, closure=preset.closure)
    fmesh = build_interpolant_mesh(fine_cfg.space_time_grid(preset.problem), cfg.r)
    only_slab = SPACE_TIME_NON_NATURAL not in study.kinds
    if study.cache and cfg.output_dir and only_slab:
        cached = cache_reference(preset, cfg.r, (m * nt, m * nx), Path(cfg.output_dir) / "cache",
                                 keep=m * cfg.r + 1)
        fine_levels = zip(cached.indices, cached.levels)
    else:
        fine_levels = iter_levels(preset.problem, fine_cfg)
    out = wave_measures(mesh, iter_levels(preset.problem, run_cfg), cfg.q,
                        FineStream(fine_levels, fmesh), study.kinds, study.composite)
    diag = {"cfl": grid.cfl(wave_speed_max(preset.problem.medium)),
            "fine_factor": m}
    return ResolutionResult(res, 1.0 / nx, out.summaries, mesh, time.perf_counter() - t0, diag)


def _group_for(kind):
    return "total" if kind == H1_SPACE else "space"


def table_rows(results, kind, group, wave):
    """Rows of one (norm kind, group) table with rates; full precision floats."""
    rows = []
    for res in results:
        g = res.summaries[kind].groups[group]
        row = {"N+1": res.resolution[-1], "h": res.h, "error": g.get("error"),
               "eta": g["eta"], "rec_error": g.get("rec_error"), "ei": g.get("ei")}
        if wave:
            row["N_t+1"] = res.resolution[0]
        rows.append(row)
    for name, rate in (("error", "error_rate"), ("eta", "eta_rate"), ("rec_error", "rec_rate")):
        rows[0][rate] = None
        for k in range(1, len(rows)):
            a, b = rows[k - 1], rows[k]
            try:
                b[rate] = convergence_rates([(a["h"], a[name]), (b["h"], b[name])])[0]
            except (FdpprError, TypeError):
                b[rate] = None
    return rows


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.3e}"


def format_table(rows, wave):
    cols = WAVE_COLUMNS if wave else POISSON_COLUMNS
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in cols])
    return buf.getvalue()


def dump_local_fields(summary, mesh, path, group=None):
    """CSV with one row per spatial cell: centre, local true error, local indicator."""
    group = group or _group_for(summary.norm_kind)
    cells = summary.cells[group]
    eta = np.asarray(cells["eta"])
    err = cells.get("error")
    ds = mesh.n_space_axes
    centers = [(np.arange(mesh.cells_per_axis[a]) + 0.5) * mesh.cell_sizes[a] for a in range(ds)]
    grids = np.meshgrid(*centers, indexing="ij")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{a + 1}" for a in range(ds)] + ["error", "indicator"])
        for idx in np.ndindex(eta.shape):
            e = "" if err is None else repr(float(err[idx]))
            w.writerow([repr(float(g[idx])) for g in grids] + [e, repr(float(eta[idx]))])
    return Path(path)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def run_one(study, res):
    if study.is_wave:
        return _wave_run(study, _wave_resolution(study, res))
    return _poisson_run(study, res)


def run_experiment(config, preset=None):
    """Run every resolution coarse to fine and write the study's files.

    Returns a :class:`RunRecord`.  Module errors are re-raised as
    :class:`RunFailed` naming the resolution (the cause is kept).
    """
    study = resolve(config, preset)
    results = []
    for res in config.resolutions:
        log.info("%s r=%d resolution %s", study.preset.name, config.r, res)
        try:
            results.append(run_one(study, res))
        except FdpprError as exc:
            raise RunFailed(res, exc) from exc
    wave = study.is_wave
    tables = {}
    for kind in study.kinds:
        for group in results[0].summaries[kind].groups:
            if kind == H1_SPACE and group != "total":
                continue
            tables[(kind, group)] = table_rows(results, kind, group, wave)
    primary = (study.kinds[0], _group_for(study.kinds[0]))
    record = RunRecord(config.to_mapping(), study.preset.name, wave, primary, tables, results)
    if config.output_dir:
        write_outputs(record, study, Path(config.output_dir))
    return record


def write_outputs(record, study, out):
    out.mkdir(parents=True, exist_ok=True)
    (out / "table.csv").write_text(format_table(record.rows, record.wave))
    record.files["table"] = "table.csv"
    for (kind, group), rows in record.tables.items():
        name = f"table_{kind}_{group}.csv"
        (out / name).write_text(format_table(rows, record.wave))
        record.files[f"{kind}/{group}"] = name
    if study.config.dump_fields:
        for res in record.results:
            summary = res.summaries[study.kinds[0]]
            name = "fields_" + "x".join(str(v) for v in res.resolution) + ".csv"
            dump_local_fields(summary, res.mesh, out / name)
            record.files["fields " + ":".join(map(str, res.resolution))] = name
    manifest = {
        "package_version": __version__,
        "problem": record.problem,
        "config": record.config,
        "primary": list(record.primary),
        "columns": WAVE_COLUMNS if record.wave else POISSON_COLUMNS,
        "tables": [{"norm": k, "group": g, "rows": rows} for (k, g), rows in record.tables.items()],
        "resolutions": [{"resolution": list(r.resolution), "seconds": r.seconds,
                         "diagnostics": r.diagnostics} for r in record.results],
        "files": record.files,
    }
    (out / "manifest.json").write_text(json.dumps(_plain(manifest), indent=2, sort_keys=True) + "\n")


def load_manifest(run_dir):
    path = Path(run_dir) / "manifest.json"
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None


def render_table(run_dir, norm=None, group=None):
    """Re-render a table from the full-precision values in a run's manifest."""
    man = load_manifest(run_dir)
    norm = norm or man["primary"][0]
    group = group or man["primary"][1]
    for t in man["tables"]:
        if t["norm"] == norm and t["group"] == group:
            return format_table(t["rows"], "N_t+1" in man["columns"])
    raise ConfigError(f"run has no table for norm {norm!r}, group {group!r}")


def dump_fields_from_run(run_dir, resolution=None, out=None):
    """Recompute one resolution of a finished run and write its per-cell field dump."""
    man = load_manifest(run_dir)
    cfg = ExperimentConfig.from_mapping(man["config"])
    study = resolve(cfg)
    res = parse_resolutions(resolution)[0] if resolution else cfg.resolutions[-1]
    result = run_one(study, res)
    name = "fields_" + "x".join(str(v) for v in result.resolution) + ".csv"
    path = Path(out) if out else Path(run_dir) / name
    return dump_local_fields(result.summaries[study.kinds[0]], result.mesh, path)
