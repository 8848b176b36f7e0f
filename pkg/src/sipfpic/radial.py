"""Radially symmetric 3D reference solver.

Solves::

    rho_t     = r^-2 (r^2 (mu rho_r - chi rho c_r))_r
    eps c_t   = r^-2 (r^2 c_r)_r - k^2 c + rho

on nodes ``r_j = j * dr``, ``j = 0..N-1``, with the finite-volume form of the
radial Laplacian.  Node ``j`` owns the shell between the faces
``r_{j-1/2}`` and ``r_{j+1/2}`` (clipped to ``[0, R_max]``), so the face at
``r = 0`` has zero area (this is the regular ``rho_r = c_r = 0`` centre
condition) and the face at ``R_max`` carries zero flux (homogeneous Neumann).

Each step is two tridiagonal solves:

* ``rho``: diffusion implicit, chemotactic flux explicit with ``c^n``;
* ``c``:   fully implicit Helmholtz solve with source ``rho^n``.

The flux form conserves ``sum_j V_j rho_j`` to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .particles import BlowupError

DEFAULT_N = 20_000
DEFAULT_R_MAX = 10.0


@dataclass
class RadialProfile:
    r: np.ndarray
    rho: np.ndarray
    c: np.ndarray
    time: float = 0.0

    @property
    def dr(self) -> float:
        return float(self.r[1] - self.r[0])

    def faces(self) -> np.ndarray:
        """Control-volume faces, length N+1, from 0 to R_max."""
        f = np.empty(self.r.size + 1)
        f[0] = 0.0
        f[1:-1] = 0.5 * (self.r[1:] + self.r[:-1])
        f[-1] = self.r[-1]
        return f

    def shell_volumes(self) -> np.ndarray:
        """Volume of each node's spherical shell (including the 4 pi)."""
        f = self.faces()
        return (4.0 * np.pi / 3.0) * np.diff(f**3)

    def mass(self) -> float:
        return float(self.shell_volumes() @ self.rho)

    def copy(self) -> "RadialProfile":
        return RadialProfile(self.r.copy(), self.rho.copy(), self.c.copy(), self.time)


def radial_grid(n_grid: int = DEFAULT_N, r_max: float = DEFAULT_R_MAX) -> np.ndarray:
    return np.linspace(0.0, r_max, n_grid)


def uniform_ball_profile(M0: float, radius: float = 1.0, n_grid: int = DEFAULT_N,
                         r_max: float = DEFAULT_R_MAX) -> RadialProfile:
    """Uniform ball of mass ``M0``; the shell cut by the ball edge gets its volume fraction."""
    r = radial_grid(n_grid, r_max)
    prof = RadialProfile(r, np.zeros_like(r), np.zeros_like(r))
    f = prof.faces()
    inside = (np.clip(f[1:], 0, radius) ** 3 - np.clip(f[:-1], 0, radius) ** 3)
    frac = inside / np.diff(f**3)
    prof.rho = frac * M0 / (4.0 * np.pi / 3.0 * radius**3)
    return prof


def _operators(prof: RadialProfile):
    f = prof.faces()
    vol = np.diff(f**3) / 3.0                    # shell volume / (4 pi)
    area = f[1:-1] ** 2                          # inner faces, length N-1
    dr = np.diff(prof.r)
    return vol, area / dr                        # conductance per face


def _tridiag_laplacian(vol, cond):
    """Banded matrix of ``-(div grad)`` in the 3-row ``solve_banded`` layout, divided by vol."""
    n = vol.size
    ab = np.zeros((3, n))
    diag = np.zeros(n)
    diag[:-1] += cond
    diag[1:] += cond
    ab[1] = diag / vol
    ab[0, 1:] = -cond / vol[:-1]                 # super-diagonal: row j, col j+1
    ab[2, :-1] = -cond / vol[1:]                 # sub-diagonal: row j+1, col j
    return ab


def _solve(ab_base, shift, scale, rhs):
    ab = ab_base * scale
    ab[1] += shift
    return solve_banded((1, 1), ab, rhs)


def solve_radial(params, init: RadialProfile, times=None, dt: float | None = None,
                 t_final: float | None = None) -> list[RadialProfile]:
    """Integrate the radial system from ``init``.

    Parameters
    ----------
    params : SimParams
        Uses ``mu, chi, eps, kappa`` and, unless overridden, ``dt`` and
        ``total_time``.
    init : RadialProfile
        Initial data; its grid is used throughout.
    times : iterable of float, optional
        Snapshot times.  The final time is always included.

    Returns
    -------
    list of RadialProfile, one per snapshot time (ascending).
    """
    dt = params.dt if dt is None else dt
    t_final = params.total_time if t_final is None else t_final
    n_steps = int(round(t_final / dt))
    snap_steps = sorted({int(round(t / dt)) for t in ([] if times is None else times)} | {n_steps})

    mu, chi, eps, k2 = params.mu, params.chi, params.eps, params.kappa**2
    elliptic = params.elliptic
    prof = init.copy()
    vol, cond = _operators(prof)
    lap = _tridiag_laplacian(vol, cond)
    # c matrix: (eps/dt + k^2) I + (-Lap); elliptic drops eps/dt
    c_shift = (0.0 if elliptic else eps / dt) + k2
    if c_shift == 0.0:
        # k = 0 elliptic: pin c at R_max to remove the constant null space
        lap = lap.copy()
        lap[1, -1] = 1.0
        lap[2, -2] = 0.0
    rho_ab = lap * (mu * dt)
    rho_ab[1] += 1.0

    rho, c = prof.rho.copy(), prof.c.copy()
    out = []
    for n in range(1, n_steps + 1):
        # chemotactic flux through inner faces with central face densities
        flux = chi * cond * 0.5 * (rho[1:] + rho[:-1]) * np.diff(c)
        div = np.zeros_like(rho)
        div[:-1] += flux
        div[1:] -= flux
        rho_new = solve_banded((1, 1), rho_ab, rho - dt * div / vol)

        rhs = rho + ((0.0 if elliptic else eps / dt) * c)
        if c_shift == 0.0:
            rhs = rhs.copy()
            rhs[-1] = 0.0
        c = _solve(lap, c_shift, 1.0, rhs)

        peak_old = np.abs(rho).max()
        peak_new = np.abs(rho_new).max()
        if not np.all(np.isfinite(rho_new)) or peak_new > 1e6 * max(peak_old, 1e-300):
            raise BlowupError("radial density blew up", n)
        neg = rho_new.min()
        if neg < 0:
            if neg < -1e-12 * peak_new:
                raise BlowupError(f"negative density {neg:.3e}", n)
            rho_new = np.maximum(rho_new, 0.0)
        rho = rho_new
        if n in snap_steps:
            out.append(RadialProfile(prof.r, rho.copy(), c.copy(), init.time + n * dt))
    return out


def radial_cdf(profile: RadialProfile, r) -> np.ndarray | float:
    """Normalised enclosed mass ``m(r)``; density is constant within each shell."""
    f = profile.faces()
    shell = profile.shell_volumes() * profile.rho
    cum = np.concatenate([[0.0], np.cumsum(shell)])
    total = cum[-1]
    r_arr = np.clip(np.asarray(r, dtype=float), 0.0, f[-1])
    j = np.clip(np.searchsorted(f, r_arr, side="right") - 1, 0, profile.r.size - 1)
    m = cum[j] + (4.0 * np.pi / 3.0) * profile.rho[j] * (r_arr**3 - f[j] ** 3)
    m = np.clip(m / total, 0.0, 1.0)
    return float(m) if np.ndim(m) == 0 else m


def cdf_table(profile: RadialProfile) -> tuple[np.ndarray, np.ndarray]:
    """Enclosed-mass fraction at the shell faces, for quantile inversion."""
    f = profile.faces()
    cum = np.concatenate([[0.0], np.cumsum(profile.shell_volumes() * profile.rho)])
    return f, cum / cum[-1]


def write_profile_csv(path, profile: RadialProfile) -> None:
    np.savetxt(path, np.column_stack([profile.r, profile.rho, profile.c]),
               delimiter=",", header="r,rho,c", comments="", fmt="%.17g")


def write_cdf_csv(path, profile: RadialProfile) -> None:
    r, m = cdf_table(profile)
    np.savetxt(path, np.column_stack([r, m]), delimiter=",", header="r,m",
               comments="", fmt="%.17g")
