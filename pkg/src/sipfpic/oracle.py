"""Direct-summation reference scheme: every particle interacts with every mode.

Cost per step is O(P * H**d).  The trigonometric sums are factored per axis
and contracted with einsum, which keeps the operation count at P * H**d while
avoiding Python loops; no cheaper algorithm is used.
"""

from __future__ import annotations

import numpy as np

from . import spectral
from .engine import PhaseTimer, RunResult, drive
from .particles import ParticleEnsemble, em_step
from .spectral import SpectralField, gradient_mask, signed_modes

DEFAULT_SCALE_GUARD = 10**9
_CHUNK_TERMS = 2**24


class ScaleGuardError(RuntimeError):
    pass


def _chunks(n_particles: int, grid_h: int, dim: int):
    step = max(1, _CHUNK_TERMS // grid_h ** (dim - 1))
    for start in range(0, n_particles, step):
        yield slice(start, min(start + step, n_particles))


def _phases(positions: np.ndarray, box_len: float, grid_h: int, sign: float):
    q = signed_modes(grid_h).astype(float)
    return [np.exp(sign * 2j * np.pi / box_len * np.outer(positions[:, s], q))
            for s in range(positions.shape[1])]


def direct_beta(ens: ParticleEnsemble, grid_h: int) -> SpectralField:
    """``beta_q = M0/(P L^d) * sum_p exp(-2 pi i q.X_p / L)`` for every mode."""
    pos = ens.positions
    n, d = pos.shape
    out = np.zeros((grid_h,) * d, dtype=complex)
    spec = "pa,pb->ab" if d == 2 else "pa,pb,pc->abc"
    for sl in _chunks(n, grid_h, d):
        out += np.einsum(spec, *_phases(pos[sl], ens.box_len, grid_h, -1.0), optimize=True)
    out *= ens.total_mass / (n * ens.box_len**d)
    return SpectralField(out, ens.box_len, role="beta")


def direct_grad_c(alpha: SpectralField, positions: np.ndarray,
                  cutoff_h0: int | None = None) -> np.ndarray:
    """Exact gradient of the cutoff-restricted trigonometric polynomial at each particle.

    Same mode set as :func:`sipfpic.spectral.gradient_grid` (cutoff box,
    Nyquist planes removed).  Returns a (P, d) real array.
    """
    h, d, box = alpha.grid_h, alpha.dim, alpha.box_len
    positions = np.asarray(positions, dtype=float)
    base = np.where(gradient_mask(h, d, cutoff_h0), alpha.coeffs, 0)
    kq = (2j * np.pi / box) * signed_modes(h)
    shapes = [[-1 if a == s else 1 for a in range(d)] for s in range(d)]
    weighted = np.stack([base * kq.reshape(shp) for shp in shapes])
    spec = "sab,pa,pb->ps" if d == 2 else "sabc,pa,pb,pc->ps"
    out = np.empty((len(positions), d), dtype=complex)
    for sl in _chunks(len(positions), h, d):
        out[sl] = np.einsum(spec, weighted, *_phases(positions[sl], box, h, 1.0),
                            optimize=True)
    scale = np.abs(alpha.coeffs).sum() * (2 * np.pi / box) * (h / 2)
    if out.size and np.abs(out.imag).max() > 1e-10 * max(scale, np.finfo(float).tiny):
        raise ValueError("alpha is not Hermitian: complex drift")
    return out.real.copy()


def direct_step(ens: ParticleEnsemble, alpha: SpectralField, params,
                timer: PhaseTimer | None = None):
    """One step of the direct scheme; same contract as :func:`sipfpic.engine.pic_step`."""
    timer = timer or PhaseTimer()
    with timer.phase("gradient"):
        drift = direct_grad_c(alpha, ens.positions, params.cutoff_h0)
    with timer.phase("deposit"):
        beta = direct_beta(ens, params.grid_h)
    with timer.phase("update"):
        alpha = spectral.update_alpha(alpha, beta, params)
    with timer.phase("push"):
        ens = em_step(ens, drift, params)
    return ens, alpha, beta


def run_sipf_direct(params, init: ParticleEnsemble, observer=None,
                    n_steps: int | None = None, force: bool = False,
                    guard: int = DEFAULT_SCALE_GUARD, record: bool = False) -> RunResult:
    """Run the direct scheme from ``alpha = 0``; refuses ``P * H**d > guard`` unless ``force``.

    Uses the same noise stream as :func:`sipfpic.engine.run_pic`, so the two
    trajectories differ only through field evaluation.  ``record=True`` keeps
    ``(ensemble, alpha)`` after every step.
    """
    terms = init.n_particles * params.grid_h ** params.dim
    if terms > guard and not force:
        raise ScaleGuardError(
            f"direct summation needs {terms:.3g} terms per step (> {guard:.3g}); "
            "pass force=True to run anyway")
    n_steps = params.n_steps if n_steps is None else n_steps
    alpha = SpectralField.zeros(params.grid_h, params.dim, params.box_len)
    return drive(direct_step, params, init, alpha, n_steps, observer, record)
