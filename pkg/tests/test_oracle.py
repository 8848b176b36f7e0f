import time

import numpy as np
import pytest

from sipfpic import interp, spectral
from sipfpic.config import SimParams, validate
from sipfpic.diagnostics import EmpiricalRadialCDF, TabulatedRadialCDF, wasserstein1_radial
from sipfpic.engine import pic_step, run_pic
from sipfpic.experiments import ball_reference
from sipfpic.oracle import (ScaleGuardError, direct_beta, direct_grad_c, direct_step,
                            run_sipf_direct)
from sipfpic.particles import ParticleEnsemble, wrap_periodic
from sipfpic.scenarios import ScenarioSpec, sample_scenario
from sipfpic.spectral import SpectralField, forward_density, signed_modes

L = 20.0


def snap(ens, H):
    h = ens.box_len / H
    x = -ens.box_len / 2 + h * np.round((ens.positions + ens.box_len / 2) / h)
    return ParticleEnsemble(wrap_periodic(x, ens.box_len), ens.total_mass, ens.box_len,
                            ens.step_index)


def nyquist_free(H, dim):
    q = signed_modes(H)
    mask = np.ones((H,) * dim, bool)
    for s in range(dim):
        shape = [1] * dim
        shape[s] = -1
        mask &= (q != -H // 2).reshape(shape)
    return mask


def test_direct_beta_point_at_origin():
    b = direct_beta(ParticleEnsemble(np.zeros((1, 3)), 2.0, L), 8).coeffs
    assert np.allclose(b, 2.0 / L**3, rtol=1e-14, atol=0)


def test_direct_beta_hermitian(rng):
    H = 8
    b = direct_beta(ParticleEnsemble(rng.uniform(-L / 2, L / 2, (50, 3)), 1.0, L), H)
    mask = nyquist_free(H, 3)
    flipped = np.conj(np.roll(np.flip(b.coeffs), 1, axis=(0, 1, 2)))   # conj(beta_{-q})
    assert np.allclose(b.coeffs[mask], flipped[mask], rtol=0, atol=1e-15)


@pytest.mark.parametrize("order,const,power", [(2, 4.5, 2), (4, 513 / 16, 4)])
def test_pic_beta_within_deposition_bound(order, const, power, rng):
    H, M0 = 8, 80.0
    ens = ParticleEnsemble(rng.uniform(-L / 2, L / 2, (200, 3)), M0, L)
    pic = forward_density(interp.deposit(ens, H, order)).coeffs
    direct = direct_beta(ens, H).coeffs
    q = signed_modes(H)
    y2 = sum(m**2 for m in np.meshgrid(q, q, q, indexing="ij")) * (2 * np.pi / L) ** 2
    bound = const * M0 / L**3 * y2 ** (power / 2) * (L / H) ** power
    assert np.all(np.abs(pic - direct) <= bound * (1 + 1e-9) + 1e-15)


def cosine_alpha(H, q, amp=1.0):
    a = SpectralField.zeros(H, 3, L)
    a.coeffs[tuple(k % H for k in q)] += amp / 2
    a.coeffs[tuple(-k % H for k in q)] += amp / 2
    return a


def test_direct_grad_cosine(rng):
    a = cosine_alpha(8, (0, 2, 0), 3.0)
    x = rng.uniform(-L / 2, L / 2, (100, 3))
    g = direct_grad_c(a, x)
    k = 2 * np.pi * 2 / L
    assert np.abs(g[:, 1] + 3.0 * k * np.sin(k * x[:, 1])).max() <= 1e-12
    assert np.abs(g[:, [0, 2]]).max() <= 1e-12


def test_direct_grad_matches_grid_on_nodes(rng):
    H = 8
    phi = rng.random((H,) * 3)
    a = forward_density(spectral.GridScalar(phi, L))
    idx = rng.integers(0, H, (20, 3))
    x = -L / 2 + L / H * idx
    g_direct = direct_grad_c(a, x)
    grid = spectral.gradient_grid(a).as_array()
    g_grid = grid[tuple(idx.T)]
    assert np.abs(g_direct - g_grid).max() <= 1e-12 * max(1.0, np.abs(g_grid).max())


def test_direct_grad_zero_field(rng):
    g = direct_grad_c(SpectralField.zeros(8, 3, L), rng.uniform(-5, 5, (10, 3)))
    assert np.all(g == 0)


def test_direct_grad_rejects_non_hermitian(rng):
    a = SpectralField.zeros(8, 3, L)
    a.coeffs[1, 0, 0] = 1.0
    with pytest.raises(ValueError, match="Hermitian"):
        direct_grad_c(a, rng.uniform(-5, 5, (10, 3)))


def test_chi_zero_matches_pic():
    p = validate(SimParams(grid_h=8, n_particles=200, n_steps=5, box_len=L, chi=0.0))
    init = sample_scenario(ScenarioSpec("ball"), p)
    a = run_pic(p, init)
    b = run_sipf_direct(p, init)
    assert np.array_equal(a.ensemble.positions, b.ensemble.positions)


def test_one_step_on_node_coupling(rng):
    H = 8
    p = validate(SimParams(grid_h=H, n_particles=64, p2g_order=4, g2p_order=2, box_len=L))
    ens = snap(ParticleEnsemble(rng.uniform(-2, 2, (64, 3)), 80.0, L), H)
    alpha = spectral.forward_density(spectral.GridScalar(rng.random((H,) * 3), L))
    e1, a1, _ = pic_step(ens, alpha, p)
    e2, a2, _ = direct_step(ens, alpha, p)
    assert np.abs(a1.coeffs - a2.coeffs).max() <= 1e-10 * np.abs(a2.coeffs).max()
    assert np.abs(e1.positions - e2.positions).max() <= 1e-10 * np.abs(e2.positions).max()


def test_run_records_trajectory():
    p = validate(SimParams(grid_h=8, n_particles=32, n_steps=3, box_len=L))
    init = sample_scenario(ScenarioSpec("ball"), p)
    res = run_sipf_direct(p, init, record=True)
    assert len(res.trajectory) == 3
    assert [e.step_index for e, _ in res.trajectory] == [1, 2, 3]
    assert res.trajectory[-1][1] is res.alpha


def test_scale_guard():
    p = validate(SimParams(grid_h=64, n_particles=2**17, box_len=L))
    init = ParticleEnsemble(np.zeros((2**17, 3)), 1.0, L)
    with pytest.raises(ScaleGuardError):
        run_sipf_direct(p, init, n_steps=1)
    small = validate(SimParams(grid_h=8, n_particles=100, box_len=L))
    with pytest.raises(ScaleGuardError):
        run_sipf_direct(small, ParticleEnsemble(np.zeros((100, 3)), 1.0, L), guard=1000)


def test_direct_error_close_to_pic():
    p = validate(SimParams(grid_h=8, n_particles=2**11, n_steps=200))
    ref = TabulatedRadialCDF.from_profile(ball_reference(p))
    init = sample_scenario(ScenarioSpec("ball"), p)
    e_pic = wasserstein1_radial(EmpiricalRadialCDF(run_pic(p, init).ensemble), ref)
    e_dir = wasserstein1_radial(EmpiricalRadialCDF(run_sipf_direct(p, init).ensemble), ref)
    assert e_dir <= 2 * e_pic and e_pic <= 2 * e_dir


def test_direct_cost_linear_in_particles():
    H = 16
    ps = [2**10, 2**11, 2**12, 2**13]
    times = []
    for P in ps:
        p = validate(SimParams(grid_h=H, n_particles=P, box_len=L))
        ens = sample_scenario(ScenarioSpec("ball"), p)
        alpha = forward_density(interp.deposit(ens, H, 4))
        best = np.inf
        for _ in range(3):
            t0 = time.perf_counter()
            direct_step(ens, alpha, p)
            best = min(best, time.perf_counter() - t0)
        times.append(best)
    slope = np.polyfit(np.log(ps), np.log(times), 1)[0]
    assert 0.8 <= slope <= 1.2
