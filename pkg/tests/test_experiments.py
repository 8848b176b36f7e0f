import math

import numpy as np
import pytest

from sipfpic.config import ConfigError, SimParams, validate
from sipfpic.diagnostics import read_metrics
from sipfpic.experiments import (RATIO_CONCENTRATE, RATIO_DISPERSE, RunManifest, classify_ratio,
                                 experiment_benchmark, experiment_convergence,
                                 experiment_critical_mass, experiment_scenario, load_manifest,
                                 load_preset, manifest_from_mapping, manifest_to_text,
                                 preset_names, prepare_out_dir, run_reference1d, run_simulation)
from sipfpic.particles import read_particles_bin
from sipfpic.scenarios import ScenarioSpec


def small_manifest(tmp_path=None, **kw):
    base = dict(dim=3, grid_h=16, n_particles=2048, box_len=8.0, dt=1e-4, n_steps=20,
                total_mass=10.0)
    base.update(kw)
    return RunManifest(validate(SimParams(**base)), ScenarioSpec("ball"),
                       out_dir=None if tmp_path is None else tmp_path / "run",
                       deterministic=True)


def test_manifest_text_round_trip(tmp_path):
    m = small_manifest(tmp_path).replace(metrics_every=5, sweep={"p_list": "1,2"})
    (tmp_path / "m.cfg").write_text(manifest_to_text(m))
    back = load_manifest(tmp_path / "m.cfg")
    assert back.params == m.params
    assert back.metrics_every == 5 and back.sweep["p_list"] == "1,2"
    assert back.scenario.kind == "ball"


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError):
        manifest_from_mapping({"grid_size": "8"})
    with pytest.raises(ConfigError):
        manifest_from_mapping({"run.bogus": "1"})
    with pytest.raises(ConfigError):
        manifest_from_mapping({"scenario.colour": "red"})


def test_presets_load():
    names = preset_names()
    assert "radial_desk" in names and "ring_desk" in names
    for name in names:
        m = load_preset(name)
        assert m.params.n_steps > 0
    with pytest.raises(ConfigError):
        load_preset("no_such_preset")


def test_snapshot_schedule():
    m = small_manifest()
    assert m.snapshot_schedule() == list(range(0, 21, 2))
    assert m.replace(snapshot_steps=(7,)).snapshot_schedule() == [0, 7, 20]


def test_out_dir_is_atomic_and_refuses_nonempty(tmp_path):
    m = small_manifest(tmp_path)
    out = prepare_out_dir(m)
    assert [p.name for p in out.iterdir()] == ["manifest.txt"]
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".")]
    with pytest.raises(FileExistsError):
        prepare_out_dir(m)


def test_manifest_written_before_first_step(tmp_path):
    seen = {}
    m = small_manifest(tmp_path)
    import sipfpic.experiments as ex
    orig = ex.run_pic

    def spy(params, init, observer=None, **kw):
        seen["manifest"] = (m.out_dir / "manifest.txt").exists()
        return orig(params, init, observer=observer, **kw)

    ex.run_pic = spy
    try:
        run_simulation(m)
    finally:
        ex.run_pic = orig
    assert seen["manifest"]


def test_simulation_outputs(tmp_path):
    m = small_manifest(tmp_path).replace(metrics_every=5)
    out = run_simulation(m)
    rows = read_metrics(out.out_dir / "metrics.csv")
    assert [r["step"] for r in rows] == [5, 10, 15, 20]
    assert all(r["time"] == r["step"] * m.params.dt for r in rows)
    assert sorted(out.snapshots) == m.snapshot_schedule()
    assert all(v.shape == (2048, 3) for v in out.snapshots.values())
    names = {p.name for p in out.out_dir.iterdir()}
    assert {"manifest.txt", "metrics.csv", "timing.csv", "particles_0.csv", "particles_20.csv"} <= names
    assert len(out.step_times) == 20


def test_deterministic_bitwise(tmp_path):
    m = small_manifest()
    a = run_simulation(m)
    b = run_simulation(m)
    assert np.array_equal(a.ensemble.positions, b.ensemble.positions)
    assert np.array_equal(a.alpha.coeffs, b.alpha.coeffs)


def test_phase_times_cover_step_time():
    out = run_simulation(small_manifest(grid_h=32, n_particles=16384, n_steps=10))
    assert sum(out.phase_times.values()) >= 0.95 * sum(out.step_times)


def test_binary_snapshots(tmp_path):
    m = small_manifest(tmp_path).replace(snapshot_format="bin", snapshot_steps=(10,))
    out = run_simulation(m)
    assert np.array_equal(read_particles_bin(out.out_dir / "particles_10.bin"), out.snapshots[10])


def test_free_diffusion_variance():
    p = validate(SimParams(dim=3, grid_h=16, n_particles=20000, box_len=40.0, dt=1e-2,
                           n_steps=50, chi=0.0, total_mass=1.0))
    m = RunManifest(p, ScenarioSpec("ball", radius=1e-6), deterministic=True)
    out = run_simulation(m)
    t = p.total_time
    var = out.ensemble.positions.var(axis=0)
    # per-axis variance 2 mu t; standard error of a sample variance ~ var*sqrt(2/P)
    assert np.all(np.abs(var - 2 * p.mu * t) <= 5 * 2 * t * math.sqrt(2 / 20000))


def test_classify_ratio():
    assert classify_ratio(RATIO_CONCENTRATE + 0.1) == "concentrate"
    assert classify_ratio(1.0) == "disperse"
    assert classify_ratio(0.5 * (RATIO_CONCENTRATE + RATIO_DISPERSE)) == "indeterminate"


def test_reference1d_outputs(tmp_path):
    m = RunManifest(validate(SimParams(eps=1e-4, kappa=0.1, box_len=20.0, dt=1e-5, n_steps=50,
                                       total_mass=80.0)),
                    out_dir=tmp_path / "ref", snapshot_every=25, sweep={"ref_n_grid": "2000"})
    profiles = run_reference1d(m)
    assert [round(p.time / 1e-5) for p in profiles] == [25, 50]
    names = {p.name for p in (tmp_path / "ref").iterdir()}
    assert {"profile_25.csv", "profile_50.csv", "cdf.csv", "manifest.txt"} <= names


def test_convergence_sweep_outputs(tmp_path):
    p = validate(SimParams(eps=1e-4, kappa=0.1, box_len=20.0, dt=1e-5, n_steps=20,
                           total_mass=80.0, grid_h=16))
    m = RunManifest(p, ScenarioSpec("ball"), out_dir=tmp_path / "conv",
                    sweep={"ref_n_grid": "2000"})
    res = experiment_convergence(m, p_list=[512, 2048], h_list=[8, 16], seeds=[1, 2])
    assert [(P, H) for P, H, _ in res.rows] == [(512, 8), (512, 16), (2048, 8), (2048, 16)]
    assert all(0 < e < 0.5 for _, _, e in res.rows)
    assert res.slope_p is not None and res.slope_h is not None
    lines = (tmp_path / "conv" / "convergence.csv").read_text().splitlines()
    assert lines[0] == "P,H,w1_error" and len(lines) == 5


def test_convergence_needs_ball():
    m = small_manifest().replace(scenario=ScenarioSpec("tetra"))
    with pytest.raises(ConfigError, match="missing reference"):
        experiment_convergence(m, p_list=[256], h_list=[8])


def test_benchmark_skips_direct_above_guard(tmp_path):
    p = validate(SimParams(eps=1e-4, kappa=0.1, box_len=20.0, dt=1e-5, n_steps=3,
                           total_mass=80.0, grid_h=8))
    m = RunManifest(p, ScenarioSpec("ball"), out_dir=tmp_path / "b", sweep={"ref_n_grid": "2000"})
    rows = experiment_benchmark(m, cells=[(8, 512), (24, 1 << 14)], guard=8**3 * 512)
    direct = {(r.grid_h, r.n_particles): r for r in rows if r.engine == "direct"}
    assert not direct[(8, 512)].skipped
    assert direct[(24, 1 << 14)].skipped
    text = (tmp_path / "b" / "benchmark.csv").read_text()
    assert "skipped" in text


def test_critical_mass_2d_sign():
    p = validate(SimParams(dim=2, eps=0.0, kappa=0.0, mu=1.0, chi=1.0, box_len=16.0,
                           grid_h=64, n_particles=8192, dt=5e-4, n_steps=40))
    m = RunManifest(p, ScenarioSpec("disk"), deterministic=True)
    lo, hi = experiment_critical_mass(m, masses=[22.0, 27.0])
    assert lo.m2_slope > 0 and lo.classification == "disperse"
    assert hi.m2_slope < 0 and hi.classification == "concentrate"


def test_tetra_small_no_blowup(tmp_path):
    p = validate(SimParams(dim=3, box_len=8.0, grid_h=32, n_particles=4096, dt=4e-4,
                           n_steps=20, total_mass=20.0))
    m = RunManifest(p, ScenarioSpec("tetra"), out_dir=tmp_path / "t", snapshot_steps=(10,))
    res = experiment_scenario(m, "tetra")
    assert res.steps == [0, 10, 20]
    assert res.particle_counts == [4096] * 3
    assert not res.blowup_flagged
    assert (tmp_path / "t" / "scenario_summary.csv").exists()


def test_scenario_kind_checked():
    with pytest.raises(ConfigError):
        experiment_scenario(small_manifest(), "spiral")
