import dataclasses
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sipfpic.config import (ConfigError, SimParams, load, params_from_mapping, parse,
                            parse_kv, serialize, validate)


def test_radial_setup_accepted():
    p = validate(SimParams(mu=1, chi=1, eps=1e-4, kappa=0.1, box_len=20, grid_h=64,
                           cutoff_h0=64, dt=1e-5, n_particles=2**15, dim=3))
    assert p.cutoff_h0 == 64
    assert p.total_time == p.n_steps * p.dt


def test_odd_grid_rejected():
    with pytest.raises(ConfigError, match="grid_h must be even"):
        validate(SimParams(grid_h=63))


def test_cutoff_exceeding_grid_rejected():
    with pytest.raises(ConfigError, match="cutoff exceeds grid"):
        validate(SimParams(grid_h=64, cutoff_h0=128))


@pytest.mark.parametrize("key,value", [("dt", 0.0), ("box_len", -1.0), ("n_particles", 0),
                                       ("total_mass", 0.0), ("chi", -1.0), ("mu", 0.0),
                                       ("n_steps", 0)])
def test_non_positive_rejected(key, value):
    with pytest.raises(ConfigError, match=key):
        validate(SimParams(**{key: value}))


def test_eps_zero_with_parabolic_rejected():
    with pytest.raises(ConfigError, match="elliptic"):
        validate(SimParams(eps=0.0, field_update="parabolic"))


def test_eps_zero_selects_elliptic():
    assert validate(SimParams(eps=0.0, kappa=0.0)).elliptic
    assert not validate(SimParams()).elliptic


def test_missing_cutoff_means_no_cutoff():
    assert validate(SimParams(grid_h=32)).cutoff_h0 == 32


def test_unknown_key_is_error():
    with pytest.raises(ConfigError, match="unknown parameter key"):
        parse("grid_h = 16\ngrid_hh = 16\n")


def test_duplicate_key_is_error():
    with pytest.raises(ConfigError, match="duplicate"):
        parse_kv("dt = 1\ndt = 2\n")


def test_total_time_consistency_checked():
    with pytest.raises(ConfigError, match="total_time"):
        params_from_mapping({"dt": "0.1", "n_steps": "10", "total_time": "2.0"})
    p = params_from_mapping({"dt": "0.1", "n_steps": "10", "total_time": "1.0"})
    assert p.n_steps == 10


def test_comments_and_integral_floats(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# header\nn_particles = 1e4  # ten thousand\ncutoff_h0 = 16\n")
    p = load(path)
    assert p.n_particles == 10_000 and p.cutoff_h0 == 16


params_strategy = st.builds(
    SimParams,
    chi=st.floats(1e-3, 1e3),
    mu=st.floats(1e-3, 1e3),
    eps=st.one_of(st.just(0.0), st.floats(1e-8, 1.0)),
    kappa=st.floats(0.0, 10.0),
    box_len=st.floats(0.5, 100.0),
    dim=st.sampled_from([2, 3]),
    grid_h=st.integers(2, 256).map(lambda k: 2 * k),
    dt=st.floats(1e-8, 1e-1),
    n_steps=st.integers(1, 10_000),
    n_particles=st.integers(1, 2**22),
    total_mass=st.floats(1e-3, 1e3),
    p2g_order=st.sampled_from([2, 4]),
    g2p_order=st.sampled_from([2, 4]),
    rng_seed=st.integers(0, 2**64 - 1),
)


@settings(max_examples=200, deadline=None)
@given(params_strategy)
def test_serialize_round_trip(p):
    v = validate(p)
    back = validate(parse(serialize(v)))
    for f in dataclasses.fields(SimParams):
        assert getattr(back, f.name) == getattr(v, f.name), f.name
    assert math.isclose(back.total_time, v.total_time, rel_tol=0, abs_tol=0)


@settings(max_examples=200, deadline=None)
@given(params_strategy)
def test_validate_idempotent(p):
    v = validate(p)
    assert validate(v) == v
