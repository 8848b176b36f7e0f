"""Command-line entry point.

    sipfpic simulate --preset radial_desk --out runs/radial
    sipfpic converge --config my.cfg --p-list 1024,4096,16384 --h-list 64 --out runs/conv
    sipfpic benchmark --cells 8:2048,24:16384 --out runs/bench

Every parameter key is available as ``--<key> VALUE``; ``--set key=value``
accepts ``scenario.*`` and ``run.*`` keys as well.  Precedence, lowest first:
defaults, ``--preset``, ``--config``, ``--set``, per-key flags, common flags.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import PARAM_KEYS, ConfigError, SimParams, parse_kv
from .experiments import (RunManifest, experiment_benchmark, experiment_convergence,
                          experiment_critical_mass, experiment_scenario, load_preset,
                          manifest_from_mapping, preset_names, run_reference1d,
                          run_simulation, validate_manifest)
from .oracle import ScaleGuardError
from .particles import BlowupError

SUBCOMMANDS = {
    "simulate": "run the particle-in-cell engine",
    "oracle": "run the direct-summation engine",
    "reference1d": "solve the radial reference problem",
    "converge": "W1 error over a grid of (P, H)",
    "benchmark": "time both engines per (H, P) cell",
    "critical-mass": "second-moment / blow-up sweep over masses",
    "scenario": "tetrahedral or ring scenario with snapshots",
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key = value config file")
    p.add_argument("--preset", help="bundled preset name (see --list-presets)")
    p.add_argument("--out", type=Path, help="output directory (created, must be new or empty)")
    p.add_argument("--seed", type=int, help="shortcut for --rng_seed")
    p.add_argument("--deterministic", action="store_true",
                   help="single-threaded transforms; bitwise reproducible")
    p.add_argument("--force", action="store_true", help="run the direct engine above the scale guard")
    p.add_argument("--workers", type=int, help="processes for sweep experiments")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="any config key, including scenario.* and run.*")
    p.add_argument("-v", "--verbose", action="store_true")
    group = p.add_argument_group("parameter overrides")
    for key in PARAM_KEYS:
        group.add_argument(f"--{key}", dest=f"param_{key}", metavar="VALUE")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sipfpic", description=__doc__.split("\n\n")[0])
    parser.add_argument("--list-presets", action="store_true", help="print preset names and exit")
    sub = parser.add_subparsers(dest="command")
    for name, help_ in SUBCOMMANDS.items():
        p = sub.add_parser(name, help=help_)
        _common(p)
        if name == "converge":
            p.add_argument("--p-list", help="comma-separated particle counts")
            p.add_argument("--h-list", help="comma-separated grid sizes")
            p.add_argument("--seeds", help="comma-separated seeds averaged per cell")
        elif name == "benchmark":
            p.add_argument("--cells", help="comma-separated H:P pairs")
            p.add_argument("--engines", help="comma-separated subset of direct,pic")
        elif name == "critical-mass":
            p.add_argument("--masses", help="comma-separated total masses")
        elif name == "scenario":
            p.add_argument("--kind", choices=("tetra", "ring"))
        elif name == "reference1d":
            p.add_argument("--times", help="comma-separated snapshot times")
    return parser


def resolve_manifest(args, experiment: str) -> RunManifest:
    m = RunManifest(SimParams(), experiment=experiment)
    if args.preset:
        m = load_preset(args.preset, m)
    if args.config:
        m = manifest_from_mapping(parse_kv(args.config.read_text()), m)
    raw = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        raw[key] = value
    for key in PARAM_KEYS:
        value = getattr(args, f"param_{key}")
        if value is not None:
            raw[key] = value
    if args.seed is not None:
        raw["rng_seed"] = str(args.seed)
    for flag, key in (("p_list", "p_list"), ("h_list", "h_list"), ("seeds", "seeds"),
                      ("cells", "cells"), ("engines", "engines"), ("masses", "masses"),
                      ("kind", "kind"), ("workers", "workers")):
        value = getattr(args, flag, None)
        if value is not None:
            raw[f"run.{key}"] = str(value)
    m = manifest_from_mapping(raw, m)
    m = m.replace(experiment=experiment, out_dir=args.out,
                  deterministic=m.deterministic or args.deterministic)
    return validate_manifest(m)


def _run(args) -> int:
    m = resolve_manifest(args, args.command)
    cmd = args.command
    if cmd in ("simulate", "oracle"):
        out = run_simulation(m, engine="pic" if cmd == "simulate" else "direct", force=args.force)
        last = out.records[-1] if out.records else None
        print(f"{cmd}: {m.params.n_steps} steps in {out.wall_time:.3f} s"
              + (f", M2={last.second_moment:.6g}, ratio={last.blowup_ratio:.4g}" if last else ""))
    elif cmd == "reference1d":
        times = None
        if args.times:
            times = [float(t) for t in args.times.split(",")]
        profiles = run_reference1d(m, times=times)
        print(f"reference1d: {len(profiles)} profiles, final mass {profiles[-1].mass():.12g}")
    elif cmd == "converge":
        res = experiment_convergence(m)
        for P, H, e in res.rows:
            print(f"P={P} H={H} w1_error={e:.6g}")
        print(f"slope vs P: {res.slope_p}  slope vs H: {res.slope_h}")
    elif cmd == "benchmark":
        for r in experiment_benchmark(m, force=args.force):
            sec = "skipped" if r.skipped else f"{r.seconds:.4g}"
            err = "" if r.w1_error is None else f"{r.w1_error:.4g}"
            print(f"H={r.grid_h} P={r.n_particles} {r.engine}: seconds={sec} w1_error={err}")
    elif cmd == "critical-mass":
        for s in experiment_critical_mass(m):
            print(f"M0={s.mass:g}: dM2/dt={s.m2_slope:.4g} final_ratio={s.blowup_ratio[-1]:.4g}"
                  f" -> {s.classification}")
    elif cmd == "scenario":
        res = experiment_scenario(m)
        radii = ", ".join(f"{r:.4f}" for r in res.mean_cyl_radius)
        print(f"scenario: snapshots at steps {res.steps}; mean cylindrical radius [{radii}]; "
              f"blow-up flagged: {res.blowup_flagged}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list_presets:
        print("\n".join(preset_names()))
        return 0
    if not args.command:
        parser.print_help()
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except (ConfigError, FileExistsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ScaleGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except BlowupError as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
