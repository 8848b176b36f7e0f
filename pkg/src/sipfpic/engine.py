"""Time stepping of the particle/spectral scheme with particle-in-cell transfers.

Step ``n`` (1-based) uses the state ``(X^(n-1), alpha^(n-1))``:

* drift:   ``grad c^(n-1)`` on the grid (inverse FFT) gathered at ``X^(n-1)``
* density: deposit ``X^(n-1)``, forward FFT -> ``beta^(n-1)``
* field:   ``alpha^(n) = update(alpha^(n-1), beta^(n-1))``
* push:    ``X^(n) = wrap(X^(n-1) + chi*tau*drift + W^(n))``

so the drift always lags the field update by one step, for the PIC path and
for the direct-summation path in :mod:`sipfpic.oracle` alike.
"""

from __future__ import annotations

import time
from collections import defaultdict
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import interp, spectral
from .particles import ParticleEnsemble, em_step
from .spectral import SpectralField

PHASES = ("deposit", "fft", "update", "gradient", "gather", "push")


class PhaseTimer:
    """Accumulates wall time per named phase."""

    def __init__(self):
        self.totals: dict[str, float] = defaultdict(float)

    @contextmanager
    def phase(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.totals[name] += time.perf_counter() - t0

    def total(self) -> float:
        return sum(self.totals.values())


@contextmanager
def _noop(name):
    yield


def pic_beta(ens: ParticleEnsemble, params, timer: PhaseTimer | None = None) -> SpectralField:
    phase = timer.phase if timer else _noop
    with phase("deposit"):
        phi = interp.deposit(ens, params.grid_h, params.p2g_order)
    with phase("fft"):
        return spectral.forward_density(phi)


def pic_drift(alpha: SpectralField, positions: np.ndarray, params,
              timer: PhaseTimer | None = None) -> np.ndarray:
    phase = timer.phase if timer else _noop
    with phase("gradient"):
        grad = spectral.gradient_grid(alpha, params.cutoff_h0, check=False)
    with phase("gather"):
        return interp.gather(grad, positions, params.g2p_order)


def pic_step(ens: ParticleEnsemble, alpha: SpectralField, params,
             timer: PhaseTimer | None = None):
    """Advance one step; returns ``(ensemble, alpha, beta)`` with ``beta = beta^(n-1)``."""
    phase = timer.phase if timer else _noop
    drift = pic_drift(alpha, ens.positions, params, timer)
    beta = pic_beta(ens, params, timer)
    with phase("update"):
        alpha = spectral.update_alpha(alpha, beta, params)
    with phase("push"):
        ens = em_step(ens, drift, params)
    return ens, alpha, beta


@dataclass
class RunResult:
    ensemble: ParticleEnsemble
    alpha: SpectralField
    wall_time: float
    phase_times: dict[str, float] = field(default_factory=dict)
    step_times: list[float] = field(default_factory=list)
    trajectory: list[tuple[ParticleEnsemble, SpectralField]] = field(default_factory=list)


Observer = Callable[[ParticleEnsemble, SpectralField, SpectralField], None]


def run_pic(params, init: ParticleEnsemble, observer: Observer | None = None,
            n_steps: int | None = None, alpha0: SpectralField | None = None,
            record: bool = False) -> RunResult:
    """Run the PIC scheme from ``init``.

    ``observer(ens, alpha, beta)`` is called after every step with the new
    ensemble, the new field and the density coefficients used for it.
    ``record=True`` keeps ``(ensemble, alpha)`` after every step in
    ``RunResult.trajectory``.
    """
    n_steps = params.n_steps if n_steps is None else n_steps
    if init.dim != params.dim:
        raise ValueError("ensemble dimension does not match params.dim")
    alpha = alpha0 if alpha0 is not None else SpectralField.zeros(
        params.grid_h, params.dim, params.box_len)
    return drive(pic_step, params, init, alpha, n_steps, observer, record)


def drive(step_fn, params, init: ParticleEnsemble, alpha: SpectralField, n_steps: int,
          observer: Observer | None, record: bool) -> RunResult:
    """Shared stepping loop for both engines; per-step time excludes the observer."""
    ens = init
    timer = PhaseTimer()
    step_times, trajectory = [], []
    t_start = time.perf_counter()
    for _ in range(n_steps):
        t0 = time.perf_counter()
        ens, alpha, beta = step_fn(ens, alpha, params, timer)
        step_times.append(time.perf_counter() - t0)
        if record:
            trajectory.append((ens, alpha))
        if observer is not None:
            observer(ens, alpha, beta)
    return RunResult(ens, alpha, time.perf_counter() - t_start,
                     dict(timer.totals), step_times, trajectory)
