"""Run orchestration: manifests, output directories, metrics/snapshot I/O and
the named experiments (convergence sweep, engine benchmark, critical-mass
sweep, tetrahedral and ring scenarios).

A run directory contains::

    manifest.txt          resolved key = value parameters (written first)
    metrics.csv           one row per metrics cadence
    particles_<step>.csv  (or .bin) particle snapshots
    timing.csv            wall time per phase

Sweep experiments write their summary CSVs next to per-run subdirectories.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
import os
import shutil
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import spectral
from .config import ConfigError, SimParams, params_from_mapping, parse_kv, serialize, validate
from .diagnostics import (EmpiricalRadialCDF, MetricsRecord, MetricsWriter,
                          TabulatedRadialCDF, fit_slope, mean_cylindrical_radius,
                          metrics_record, second_moment, wasserstein1_radial)
from .engine import run_pic
from .oracle import DEFAULT_SCALE_GUARD, run_sipf_direct
from .particles import BlowupError, write_particles_bin, write_particles_csv
from .radial import RadialProfile, solve_radial, uniform_ball_profile
from .scenarios import ScenarioSpec, sample_scenario, scenario_from_mapping, scenario_to_mapping

log = logging.getLogger(__name__)

EXPERIMENTS = ("simulate", "oracle", "reference1d", "converge", "benchmark",
               "critical-mass", "scenario")
SNAPSHOT_FORMATS = ("csv", "bin")

# Calibration constants for the cutoff-ratio indicator (set from pilot runs).
RATIO_CONCENTRATE = 1.5
RATIO_DISPERSE = 1.2


@dataclass
class RunManifest:
    """Everything needed to reproduce one run or sweep.

    ``snapshot_every = None`` means every ``n_steps // 10`` steps.
    ``sweep`` holds experiment-specific ``run.*`` options as strings
    (``p_list``, ``h_list``, ``cells``, ``masses``, ``seeds``, ...).
    """

    params: SimParams
    scenario: ScenarioSpec = field(default_factory=ScenarioSpec)
    out_dir: Path | None = None
    snapshot_every: int | None = None
    experiment: str = "simulate"
    metrics_every: int = 10
    snapshot_format: str = "csv"
    snapshot_steps: tuple[int, ...] = ()
    h0_lo: int = 8
    h0_hi: int = 32
    deterministic: bool = False
    abort_on_blowup: bool = False
    sweep: dict[str, str] = field(default_factory=dict)

    def snapshot_cadence(self) -> int:
        if self.snapshot_every is not None:
            return self.snapshot_every
        return max(1, self.params.n_steps // 10)

    def snapshot_schedule(self) -> list[int]:
        """Steps at which particles are dumped, always including 0 and the final step."""
        n = self.params.n_steps
        if self.snapshot_steps:
            steps = set(self.snapshot_steps)
        else:
            steps = set(range(0, n + 1, self.snapshot_cadence()))
        steps |= {0, n}
        return sorted(s for s in steps if 0 <= s <= n)

    def replace(self, **changes) -> "RunManifest":
        return dataclasses.replace(self, **changes)


_RUN_INT = {"snapshot_every", "metrics_every", "h0_lo", "h0_hi"}
_RUN_BOOL = {"deterministic", "abort_on_blowup"}


def _as_bool(key, raw: str) -> bool:
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"run.{key} must be a boolean, got {raw!r}")


def validate_manifest(m: RunManifest) -> RunManifest:
    params = validate(m.params)
    if m.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {m.experiment!r}")
    if m.snapshot_format not in SNAPSHOT_FORMATS:
        raise ConfigError(f"snapshot_format must be one of {SNAPSHOT_FORMATS}")
    if m.snapshot_every is not None and m.snapshot_every < 1:
        raise ConfigError("snapshot_every must be positive")
    if m.metrics_every < 1:
        raise ConfigError("metrics_every must be positive")
    if not 1 <= m.h0_lo < m.h0_hi:
        raise ConfigError("need 1 <= h0_lo < h0_hi")
    return m.replace(params=params)


def manifest_from_mapping(raw: dict[str, str], base: RunManifest | None = None) -> RunManifest:
    """Split ``key``, ``scenario.key`` and ``run.key`` entries; unknown keys raise."""
    base = base or RunManifest(SimParams())
    plain, scen, run = {}, {}, {}
    for key, value in raw.items():
        if key.startswith("scenario."):
            scen[key[len("scenario."):]] = value
        elif key.startswith("run."):
            run[key[len("run."):]] = value
        else:
            plain[key] = value
    params = params_from_mapping(plain, base.params)
    if scen:
        merged = scenario_to_mapping(base.scenario) | scen
        try:
            scenario = scenario_from_mapping(merged)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    else:
        scenario = dataclasses.replace(base.scenario)
    m = base.replace(params=params, scenario=scenario, sweep=dict(base.sweep))
    for key, value in run.items():
        if key in _RUN_INT:
            setattr(m, key, None if value.lower() == "none" else int(value))
        elif key in _RUN_BOOL:
            setattr(m, key, _as_bool(key, value))
        elif key == "experiment":
            m.experiment = value
        elif key == "snapshot_format":
            m.snapshot_format = value
        elif key == "snapshot_steps":
            m.snapshot_steps = tuple(int(v) for v in value.split(",") if v.strip())
        elif key in SWEEP_KEYS:
            m.sweep[key] = value
        else:
            raise ConfigError(f"unknown run key {key!r}")
    return m


SWEEP_KEYS = ("p_list", "h_list", "cells", "masses", "seeds", "kind", "workers",
              "ref_n_grid", "ref_r_max", "ref_dt", "direct_guard", "engines")


def manifest_to_text(m: RunManifest) -> str:
    lines = [serialize(m.params).rstrip("\n")]
    for key, value in scenario_to_mapping(m.scenario).items():
        lines.append(f"scenario.{key} = {value}")
    lines += [
        f"run.experiment = {m.experiment}",
        f"run.snapshot_every = {m.snapshot_every}",
        f"run.metrics_every = {m.metrics_every}",
        f"run.snapshot_format = {m.snapshot_format}",
        f"run.h0_lo = {m.h0_lo}",
        f"run.h0_hi = {m.h0_hi}",
        f"run.deterministic = {str(m.deterministic).lower()}",
        f"run.abort_on_blowup = {str(m.abort_on_blowup).lower()}",
    ]
    if m.snapshot_steps:
        lines.append("run.snapshot_steps = " + ",".join(map(str, m.snapshot_steps)))
    for key in sorted(m.sweep):
        lines.append(f"run.{key} = {m.sweep[key]}")
    return "\n".join(lines) + "\n"


def load_manifest(path: str | Path, base: RunManifest | None = None) -> RunManifest:
    return manifest_from_mapping(parse_kv(Path(path).read_text()), base)


def preset_names() -> list[str]:
    pkg = resources.files("sipfpic") / "presets"
    return sorted(p.name[:-4] for p in pkg.iterdir() if p.name.endswith(".cfg"))


def load_preset(name: str, base: RunManifest | None = None) -> RunManifest:
    """Manifest from a bundled preset, e.g. ``radial_desk`` or ``ring_full``."""
    res = resources.files("sipfpic") / "presets" / f"{name}.cfg"
    if not res.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return manifest_from_mapping(parse_kv(res.read_text()), base)


# --- output directories ------------------------------------------------------

def prepare_out_dir(m: RunManifest) -> Path:
    """Create ``m.out_dir`` with ``manifest.txt`` already inside, atomically.

    The directory is assembled under a temporary name in the same parent and
    renamed into place, so a visible run directory always has a manifest.
    An existing empty directory is replaced; a non-empty one is an error.
    """
    out = Path(m.out_dir)
    out.parent.mkdir(parents=True, exist_ok=True)
    if out.exists():
        if any(out.iterdir()):
            raise FileExistsError(f"output directory {out} is not empty")
        out.rmdir()
    tmp = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=out.parent))
    try:
        (tmp / "manifest.txt").write_text(manifest_to_text(m))
        os.rename(tmp, out)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return out


def _write_timing(path: Path, phase_times: dict, step_times: list) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["phase", "seconds"])
        for name, sec in sorted(phase_times.items()):
            w.writerow([name, repr(sec)])
        w.writerow(["step_total", repr(float(sum(step_times)))])


@dataclass
class SimulationOutput:
    ensemble: object
    alpha: object
    records: list[MetricsRecord]
    snapshots: dict[int, np.ndarray]        # step -> positions (copies)
    phase_times: dict[str, float]
    step_times: list[float]
    wall_time: float
    blowup_step: int | None = None
    out_dir: Path | None = None

    @property
    def mean_step_time(self) -> float:
        return float(np.mean(self.step_times)) if self.step_times else math.nan


class _Recorder:
    """Observer collecting metrics rows and particle snapshots during a run."""

    def __init__(self, m: RunManifest, engine: str, reference, out: Path | None,
                 keep_snapshots: bool):
        self.m, self.engine, self.reference, self.out = m, engine, reference, out
        self.schedule = set(m.snapshot_schedule())
        self.keep = keep_snapshots
        self.records: list[MetricsRecord] = []
        self.snapshots: dict[int, np.ndarray] = {}
        self.blowup_step = None
        self.writer = None
        if out is not None:
            self.writer = MetricsWriter(out / "metrics.csv", with_w1=reference is not None)

    def snapshot(self, ens) -> None:
        step = ens.step_index
        if step not in self.schedule:
            return
        if self.keep:
            self.snapshots[step] = ens.positions.copy()
        if self.out is not None:
            if self.m.snapshot_format == "bin":
                write_particles_bin(self.out / f"particles_{step}.bin", ens.positions)
            else:
                write_particles_csv(self.out / f"particles_{step}.csv", ens.positions)

    def __call__(self, ens, alpha, beta) -> None:
        step = ens.step_index
        if step % self.m.metrics_every == 0 or step == self.m.params.n_steps:
            field_ = spectral.hermitian_part(alpha) if self.engine == "direct" else alpha
            rec = metrics_record(step, self.m.params.dt, ens, field_, self.m.h0_lo,
                                 self.m.h0_hi, self.reference)
            self.records.append(rec)
            if self.writer is not None:
                self.writer.write(rec)
            if self.blowup_step is None and rec.blowup_ratio > RATIO_CONCENTRATE:
                self.blowup_step = step
                if self.m.abort_on_blowup:
                    raise BlowupError(
                        f"blow-up indicator {rec.blowup_ratio:.3f} > {RATIO_CONCENTRATE}", step)
        self.snapshot(ens)

    def close(self):
        if self.writer is not None:
            self.writer.close()


def run_simulation(m: RunManifest, engine: str = "pic", reference=None, force: bool = False,
                   init=None, keep_snapshots: bool = True,
                   direct_guard: int = DEFAULT_SCALE_GUARD) -> SimulationOutput:
    """Execute one run described by ``m``.

    Per step: gradient/gather of the current field at the particles, deposit and
    forward transform, field update, Euler-Maruyama push.  Metrics are recorded
    every ``m.metrics_every`` steps (and at the last step); particle snapshots
    follow :meth:`RunManifest.snapshot_schedule`.  When ``m.out_dir`` is set the
    manifest is written before the first step.

    ``reference`` (a radial CDF) adds a ``w1_error`` column.  Abort signals
    (:class:`BlowupError` and subclasses) propagate with their step index after
    the partial outputs are flushed.
    """
    m = validate_manifest(m)
    params = m.params
    out = prepare_out_dir(m) if m.out_dir is not None else None
    prev_workers = spectral.set_fft_workers(1 if m.deterministic else -1)
    rec = _Recorder(m, engine, reference, out, keep_snapshots)
    timing = None
    try:
        ens = init if init is not None else sample_scenario(m.scenario, params)
        rec.snapshot(ens)
        if engine == "pic":
            result = run_pic(params, ens, observer=rec)
        elif engine == "direct":
            result = run_sipf_direct(params, ens, observer=rec, force=force, guard=direct_guard)
        else:
            raise ValueError(f"unknown engine {engine!r}")
        timing = (result.phase_times, result.step_times)
    finally:
        rec.close()
        spectral.set_fft_workers(prev_workers)
        if out is not None and timing is not None:
            _write_timing(out / "timing.csv", *timing)
    return SimulationOutput(result.ensemble, result.alpha, rec.records, rec.snapshots,
                            result.phase_times, result.step_times, result.wall_time,
                            rec.blowup_step, out)


# --- radial reference --------------------------------------------------------

def ball_reference(params: SimParams, scenario: ScenarioSpec | None = None,
                   n_grid: int = 20_000, r_max: float = 10.0,
                   dt: float | None = None) -> RadialProfile:
    """Radial solution at ``params.total_time`` for a uniform-ball start."""
    scenario = scenario or ScenarioSpec("ball")
    if scenario.kind != "ball" or params.dim != 3:
        raise ConfigError("the radial reference needs a 3D ball scenario")
    if scenario.center is not None and np.any(np.asarray(scenario.center) != 0):
        raise ConfigError("the radial reference needs a ball centred at the origin")
    mass = params.total_mass if scenario.mass is None else scenario.mass
    init = uniform_ball_profile(mass, scenario.radius, n_grid, r_max)
    return solve_radial(params, init, dt=dt)[-1]


def _reference_cdf(m: RunManifest, reference) -> TabulatedRadialCDF:
    if reference is None:
        try:
            prof = ball_reference(m.params, m.scenario,
                                  int(float(m.sweep.get("ref_n_grid", 20_000))),
                                  float(m.sweep.get("ref_r_max", 10.0)),
                                  float(m.sweep["ref_dt"]) if "ref_dt" in m.sweep else None)
        except ConfigError as exc:
            raise ConfigError(f"missing reference: {exc}") from None
        return TabulatedRadialCDF.from_profile(prof)
    if isinstance(reference, RadialProfile):
        return TabulatedRadialCDF.from_profile(reference)
    return reference


# --- sweeps ------------------------------------------------------------------

def _int_list(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(float(v)) for v in str(text).split(",") if v.strip()]


def _float_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _map(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*jobs)))


def _w1_job(params: SimParams, scenario: ScenarioSpec, ref_r, ref_m) -> float:
    ens = sample_scenario(scenario, params)
    final = run_pic(params, ens).ensemble
    return wasserstein1_radial(EmpiricalRadialCDF(final), TabulatedRadialCDF(ref_r, ref_m))


def _log2_slope(x, y) -> float:
    return fit_slope(np.log2(np.asarray(x, float)), np.log2(np.asarray(y, float)))


@dataclass
class ConvergenceResult:
    rows: list[tuple[int, int, float]]      # (P, H, mean w1_error over seeds)
    slope_p: float | None                   # log2 error vs log2 P at max H
    slope_h: float | None                   # log2 error vs log2 H at max P


def experiment_convergence(m: RunManifest, p_list=None, h_list=None, reference=None,
                           seeds=None, workers: int | None = None) -> ConvergenceResult:
    """W1 error against one shared radial reference on the grid ``p_list x h_list``.

    Each cell is averaged over ``seeds``.  ``m.params.cutoff_h0`` is kept when
    it is below the cell's ``H``; otherwise the cell runs uncut.
    """
    m = validate_manifest(m)
    p_list = _int_list(p_list if p_list is not None else m.sweep.get("p_list", m.params.n_particles))
    h_list = _int_list(h_list if h_list is not None else m.sweep.get("h_list", m.params.grid_h))
    seeds = _int_list(seeds if seeds is not None else m.sweep.get("seeds", m.params.rng_seed))
    workers = int(workers if workers is not None else m.sweep.get("workers", 1))
    cdf = _reference_cdf(m, reference)
    cells, jobs = [], []
    for P in p_list:
        for H in h_list:
            h0 = m.params.cutoff_h0 if m.params.cutoff_h0 < m.params.grid_h else None
            p = validate(m.params.replace(n_particles=P, grid_h=H,
                                          cutoff_h0=None if h0 is None or h0 > H else h0))
            m.scenario.check_fits(p.box_len, H, p.dim)
            cells.append((P, H))
            jobs += [(p.replace(rng_seed=s), m.scenario, cdf.r, cdf.m) for s in seeds]
    errs = np.asarray(_map(_w1_job, jobs, workers)).reshape(len(cells), len(seeds))
    rows = [(P, H, float(e)) for (P, H), e in zip(cells, errs.mean(axis=1))]
    h_max, p_max = max(h_list), max(p_list)
    at_h = [(P, e) for P, H, e in rows if H == h_max]
    at_p = [(H, e) for P, H, e in rows if P == p_max]
    slope_p = _log2_slope(*zip(*at_h)) if len(at_h) > 1 else None
    slope_h = _log2_slope(*zip(*at_p)) if len(at_p) > 1 else None
    res = ConvergenceResult(rows, slope_p, slope_h)
    if m.out_dir is not None:
        out = prepare_out_dir(m)
        with open(out / "convergence.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["P", "H", "w1_error"])
            w.writerows([P, H, repr(e)] for P, H, e in rows)
        with open(out / "convergence_slopes.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["quantity", "slope"])
            w.writerow(["log2_error_vs_log2_P", "" if slope_p is None else repr(slope_p)])
            w.writerow(["log2_error_vs_log2_H", "" if slope_h is None else repr(slope_h)])
    return res


@dataclass
class BenchmarkRow:
    grid_h: int
    n_particles: int
    engine: str
    seconds: float | None                   # None: skipped
    w1_error: float | None
    n_steps: int

    @property
    def skipped(self) -> bool:
        return self.seconds is None

    @property
    def seconds_per_step(self) -> float | None:
        return None if self.seconds is None else self.seconds / self.n_steps


def experiment_benchmark(m: RunManifest, cells=None, reference=None, engines=None,
                         n_steps: int | None = None, force: bool = False,
                         guard: int | None = None) -> list[BenchmarkRow]:
    """Time both engines on each ``(H, P)`` cell.

    Direct-engine cells above ``guard`` terms per step are skipped and marked,
    unless ``force``.  ``reference`` (or a radial reference computed on demand
    for ball scenarios) fills ``w1_error``; pass ``reference=False`` to skip it.
    """
    m = validate_manifest(m)
    if cells is None:
        cells = [tuple(int(v) for v in c.split(":")) for c in m.sweep.get("cells", "").split(",")
                 if c.strip()]
        cells = cells or [(m.params.grid_h, m.params.n_particles)]
    engines = engines or tuple(m.sweep.get("engines", "direct,pic").split(","))
    guard = guard if guard is not None else int(float(m.sweep.get("direct_guard",
                                                                  DEFAULT_SCALE_GUARD)))
    base = m.params if n_steps is None else validate(m.params.replace(n_steps=n_steps))
    cdf = None
    if reference is not False:
        cdf = _reference_cdf(m.replace(params=base), reference)
    rows = []
    for H, P in cells:
        p = validate(base.replace(grid_h=H, n_particles=P, cutoff_h0=None))
        init = sample_scenario(m.scenario, p)
        for engine in engines:
            if engine == "direct" and P * H**p.dim > guard and not force:
                log.info("benchmark H=%d P=%d direct: skipped (scale guard)", H, P)
                rows.append(BenchmarkRow(H, P, engine, None, None, p.n_steps))
                continue
            if engine == "direct":
                res = run_sipf_direct(p, init, force=True)
            else:
                res = run_pic(p, init)
            err = None
            if cdf is not None:
                err = wasserstein1_radial(EmpiricalRadialCDF(res.ensemble), cdf)
            rows.append(BenchmarkRow(H, P, engine, float(sum(res.step_times)), err, p.n_steps))
            log.info("benchmark H=%d P=%d %s: %.3g s", H, P, engine, rows[-1].seconds)
    if m.out_dir is not None:
        out = prepare_out_dir(m.replace(params=base))
        with open(out / "benchmark.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["H", "P", "engine", "seconds", "w1_error"])
            for r in rows:
                w.writerow([r.grid_h, r.n_particles, r.engine,
                            "skipped" if r.skipped else repr(r.seconds),
                            "" if r.w1_error is None else repr(r.w1_error)])
    return rows


@dataclass
class CriticalMassSeries:
    mass: float
    steps: np.ndarray
    times: np.ndarray
    second_moment: np.ndarray
    blowup_ratio: np.ndarray
    m2_slope: float
    classification: str


def classify_ratio(final_ratio: float) -> str:
    if final_ratio >= RATIO_CONCENTRATE:
        return "concentrate"
    if final_ratio <= RATIO_DISPERSE:
        return "disperse"
    return "indeterminate"


def _critical_job(m: RunManifest, mass: float) -> CriticalMassSeries:
    mm = m.replace(params=validate(m.params.replace(total_mass=mass)),
                   scenario=dataclasses.replace(m.scenario, mass=None), out_dir=None)
    init = sample_scenario(mm.scenario, mm.params)
    out = run_simulation(mm, init=init, keep_snapshots=False)
    steps = np.array([0] + [r.step for r in out.records])
    times = steps * mm.params.dt
    m2 = np.array([second_moment(init)] + [r.second_moment for r in out.records])
    ratio = np.array([math.nan] + [r.blowup_ratio for r in out.records])
    slope = fit_slope(times, m2)
    if mm.params.dim == 2:
        label = "disperse" if slope > 0 else "concentrate"
    else:
        label = classify_ratio(ratio[-1])
    return CriticalMassSeries(mass, steps, times, m2, ratio, slope, label)


def experiment_critical_mass(m: RunManifest, masses=None, dim: int | None = None,
                             workers: int | None = None) -> list[CriticalMassSeries]:
    """One run per mass; classify by the fitted ``dM2/dt`` sign (2D) or final ratio (3D).

    Metrics are recorded every ``m.metrics_every`` steps; the slope fit uses
    every recorded ``M2`` including ``t = 0``.
    """
    masses = _float_list(masses if masses is not None else m.sweep.get("masses", m.params.total_mass))
    params = m.params if dim is None else m.params.replace(dim=dim)
    m = validate_manifest(m.replace(params=params))
    if m.scenario.kind not in ("ball", "disk"):
        raise ConfigError("critical-mass sweeps start from a ball or disk")
    kind = "disk" if m.params.dim == 2 else "ball"
    m = m.replace(scenario=dataclasses.replace(m.scenario, kind=kind))
    workers = int(workers if workers is not None else m.sweep.get("workers", 1))
    series = _map(_critical_job, [(m, mass) for mass in masses], workers)
    if m.out_dir is not None:
        out = prepare_out_dir(m)
        with open(out / "critical_mass.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["mass", "step", "time", "M2", "blowup_ratio"])
            for s in series:
                for row in zip(s.steps, s.times, s.second_moment, s.blowup_ratio):
                    w.writerow([repr(s.mass), int(row[0])] + [repr(float(v)) for v in row[1:]])
        with open(out / "critical_mass_summary.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["mass", "m2_slope", "final_ratio", "classification"])
            for s in series:
                w.writerow([repr(s.mass), repr(s.m2_slope), repr(float(s.blowup_ratio[-1])),
                            s.classification])
    return series


@dataclass
class ScenarioResult:
    output: SimulationOutput
    steps: list[int]
    times: list[float]
    mean_cyl_radius: list[float]
    particle_counts: list[int]

    @property
    def blowup_flagged(self) -> bool:
        return self.output.blowup_step is not None


SCENARIO_KINDS = {"tetra": "tetra", "ring": "torus"}


def experiment_scenario(m: RunManifest, kind: str | None = None) -> ScenarioResult:
    """Tetrahedral (``tetra``) or ring (``ring``) run with snapshot series.

    Adds ``scenario_summary.csv`` (step, time, mean cylindrical radius,
    particle count) to the run directory.
    """
    kind = kind or m.sweep.get("kind") or {"torus": "ring"}.get(m.scenario.kind, m.scenario.kind)
    if kind not in SCENARIO_KINDS:
        raise ConfigError(f"scenario kind must be one of {tuple(SCENARIO_KINDS)}")
    if m.params.dim != 3:
        raise ConfigError("scenario experiments are three-dimensional")
    spec = dataclasses.replace(m.scenario, kind=SCENARIO_KINDS[kind])
    out = run_simulation(m.replace(scenario=spec))
    steps = sorted(out.snapshots)
    res = ScenarioResult(out, steps, [s * m.params.dt for s in steps],
                         [mean_cylindrical_radius(out.snapshots[s]) for s in steps],
                         [out.snapshots[s].shape[0] for s in steps])
    if out.out_dir is not None:
        with open(out.out_dir / "scenario_summary.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "time", "mean_cyl_radius", "n_particles"])
            for row in zip(res.steps, res.times, res.mean_cyl_radius, res.particle_counts):
                w.writerow([row[0], repr(row[1]), repr(row[2]), row[3]])
    return res


def run_reference1d(m: RunManifest, times=None, n_grid: int | None = None,
                    r_max: float | None = None) -> list[RadialProfile]:
    """Radial reference for a ball start; writes ``profile_<step>.csv`` and ``cdf.csv``."""
    from .radial import write_cdf_csv, write_profile_csv
    m = validate_manifest(m)
    if m.scenario.kind != "ball" or m.params.dim != 3:
        raise ConfigError("reference1d needs a 3D ball scenario")
    n_grid = n_grid or int(float(m.sweep.get("ref_n_grid", 20_000)))
    r_max = r_max or float(m.sweep.get("ref_r_max", 10.0))
    mass = m.params.total_mass if m.scenario.mass is None else m.scenario.mass
    init = uniform_ball_profile(mass, m.scenario.radius, n_grid, r_max)
    if times is None:
        times = [s * m.params.dt for s in m.snapshot_schedule()[1:]]
    profiles = solve_radial(m.params, init, times=times)
    if m.out_dir is not None:
        out = prepare_out_dir(m)
        for prof in profiles:
            step = int(round(prof.time / m.params.dt))
            write_profile_csv(out / f"profile_{step}.csv", prof)
        write_cdf_csv(out / "cdf.csv", profiles[-1])
    return profiles
