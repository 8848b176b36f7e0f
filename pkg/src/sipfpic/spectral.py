"""Fourier representation of the chemoattractant and the deposited density.

Coefficients are stored in standard FFT layout: along each axis, array slot
``j`` holds the signed mode ``q = j`` for ``j < H/2`` and ``q = j - H`` above,
so the signed index set is ``{-H/2, ..., H/2 - 1}``.  Conventions::

    beta_q = L**-d * sum_nodes phi[x] * exp(-2 pi i q.x / L)
    c(x)   = sum_q alpha_q * exp(+2 pi i q.x / L)

Grid arrays put node ``i`` at ``-L/2 + i*L/H``, so the origin is slot ``H/2``
and the transforms shift it to slot 0 before the FFT.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.fft as sfft

_FFT_WORKERS = 1


def set_fft_workers(n: int) -> int:
    """Thread count for every transform; returns the previous value.  ``-1`` uses all cores."""
    global _FFT_WORKERS
    prev, _FFT_WORKERS = _FFT_WORKERS, int(n)
    return prev


@dataclass
class GridScalar:
    values: np.ndarray
    box_len: float

    @property
    def grid_h(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.ndim

    def node_positions(self) -> list[np.ndarray]:
        """1D node coordinates per axis."""
        h = self.box_len / self.grid_h
        x = -0.5 * self.box_len + h * np.arange(self.grid_h)
        return [x] * self.dim


@dataclass
class GridVector:
    components: list[GridScalar]

    @property
    def box_len(self) -> float:
        return self.components[0].box_len

    @property
    def grid_h(self) -> int:
        return self.components[0].grid_h

    def as_array(self) -> np.ndarray:
        return np.stack([c.values for c in self.components], axis=-1)


@dataclass
class SpectralField:
    coeffs: np.ndarray
    box_len: float
    role: str = "alpha"

    @property
    def grid_h(self) -> int:
        return self.coeffs.shape[0]

    @property
    def dim(self) -> int:
        return self.coeffs.ndim

    def at(self, q) -> complex:
        """Coefficient of the signed mode ``q``."""
        return self.coeffs[tuple(int(k) % self.grid_h for k in q)]

    def copy(self) -> "SpectralField":
        return SpectralField(self.coeffs.copy(), self.box_len, self.role)

    @classmethod
    def zeros(cls, grid_h: int, dim: int, box_len: float, role: str = "alpha"):
        return cls(np.zeros((grid_h,) * dim, dtype=complex), box_len, role)


@lru_cache(maxsize=32)
def signed_modes(grid_h: int) -> np.ndarray:
    """Signed integer mode numbers in FFT order."""
    q = np.fft.fftfreq(grid_h, d=1.0 / grid_h).round().astype(np.int64)
    q.setflags(write=False)
    return q


def _axis_modes(grid_h: int, dim: int):
    q = signed_modes(grid_h)
    return [q.reshape([-1 if a == s else 1 for a in range(dim)]) for s in range(dim)]


def wavenumber_sq(grid_h: int, dim: int, box_len: float) -> np.ndarray:
    """``4 pi^2 |q|^2 / L^2`` on the FFT-layout mode grid."""
    scale = (2.0 * np.pi / box_len) ** 2
    out = np.zeros((grid_h,) * dim)
    for q in _axis_modes(grid_h, dim):
        out = out + scale * q.astype(float) ** 2
    return out


def gradient_mask(grid_h: int, dim: int, cutoff_h0: int | None) -> np.ndarray:
    """Modes used for gradients: inside the cutoff box and off every Nyquist plane.

    A mode with some ``q_t = -H/2`` has no conjugate partner in the index
    set, so it is dropped from every derivative component.
    """
    mask = np.ones((grid_h,) * dim, dtype=bool)
    for q in _axis_modes(grid_h, dim):
        mask = mask & (q != -(grid_h // 2))
    box = cutoff_mask(grid_h, dim, cutoff_h0)
    return mask if box is None else mask & box


def cutoff_mask(grid_h: int, dim: int, cutoff_h0: int | None) -> np.ndarray | None:
    """Boolean box ``|q_s| <= H0/2`` for every axis; ``None`` when nothing is cut."""
    if cutoff_h0 is None or cutoff_h0 >= grid_h:
        return None
    mask = np.ones((grid_h,) * dim, dtype=bool)
    for q in _axis_modes(grid_h, dim):
        mask = mask & (2 * np.abs(q) <= cutoff_h0)
    return mask


def forward_density(phi: GridScalar) -> SpectralField:
    """Fourier coefficients of a deposited mass grid."""
    d = phi.dim
    coeffs = sfft.fftn(sfft.ifftshift(phi.values), workers=_FFT_WORKERS) / phi.box_len**d
    return SpectralField(coeffs, phi.box_len, role="beta")


def inverse_grid(field: SpectralField, cutoff_h0: int | None = None,
                 check: bool = True) -> GridScalar:
    """Evaluate ``sum_q alpha_q exp(2 pi i q.x/L)`` at every grid node."""
    coeffs = field.coeffs
    mask = cutoff_mask(field.grid_h, field.dim, cutoff_h0)
    if mask is not None:
        coeffs = np.where(mask, coeffs, 0)
    return GridScalar(_real_inverse(coeffs, field.coeffs, check), field.box_len)


def _real_inverse(coeffs: np.ndarray, reference: np.ndarray, check: bool) -> np.ndarray:
    n = coeffs.size
    values = sfft.fftshift(sfft.ifftn(coeffs, workers=_FFT_WORKERS)) * n
    if check:
        scale = np.abs(reference).sum()
        resid = np.abs(values.imag).max() if values.size else 0.0
        if resid > 1e-12 * max(scale, np.finfo(float).tiny):
            raise ValueError(
                f"field is not Hermitian: imaginary residue {resid:.3e} "
                f"vs coefficient norm {scale:.3e}")
    return np.ascontiguousarray(values.real)


def update_alpha(alpha_prev: SpectralField, beta: SpectralField, params) -> SpectralField:
    """One implicit-Euler step of ``eps c_t = Lap c - k^2 c + rho`` in Fourier space.

    Parabolic::

        alpha_q = alpha_prev_q / (1 + tau/eps * (w_q + k^2))
                  + beta_q / (w_q + k^2 + eps/tau),   w_q = 4 pi^2 |q|^2 / L^2

    Elliptic: ``alpha_q = beta_q / (w_q + k^2)``; the zero mode is pinned to 0
    when ``k = 0``.
    """
    if alpha_prev.coeffs.shape != beta.coeffs.shape:
        raise ValueError("alpha and beta shapes differ")
    w = wavenumber_sq(beta.grid_h, beta.dim, beta.box_len) + params.kappa**2
    if params.elliptic:
        zero = w == 0
        w_safe = np.where(zero, 1.0, w)
        coeffs = np.where(zero, 0.0, beta.coeffs / w_safe)
    else:
        tau, eps = params.dt, params.eps
        coeffs = alpha_prev.coeffs / (1.0 + (tau / eps) * w) + beta.coeffs / (w + eps / tau)
    return SpectralField(coeffs, beta.box_len, role="alpha")


def gradient_grid(alpha: SpectralField, cutoff_h0: int | None = None,
                  check: bool = True) -> GridVector:
    """Gradient of the cutoff-restricted concentration at every grid node.

    Modes on a Nyquist plane are excluded (see :func:`gradient_mask`).
    ``check=False`` assumes ``alpha`` is Hermitian and uses half-spectrum
    real transforms, about twice as fast; the engine takes this path.
    """
    h, d, box = alpha.grid_h, alpha.dim, alpha.box_len
    base = np.where(gradient_mask(h, d, cutoff_h0), alpha.coeffs, 0)
    comps = []
    for q in _axis_modes(h, d):
        ik = (2j * np.pi / box) * q
        if check:
            values = _real_inverse(base * ik, alpha.coeffs, True)
        else:
            half = base[..., : h // 2 + 1] * ik[..., : h // 2 + 1]
            values = sfft.fftshift(sfft.irfftn(half, s=base.shape, workers=_FFT_WORKERS)) * base.size
        comps.append(GridScalar(np.ascontiguousarray(values), box))
    return GridVector(comps)


def sup_norm_c(alpha: SpectralField, cutoff_h0: int | None = None) -> float:
    """``max_x |c(x)|`` over grid nodes for the cutoff-restricted field."""
    return float(np.abs(inverse_grid(alpha, cutoff_h0).values).max())


def write_grid_csv(path: str | Path, grid: GridScalar) -> None:
    """One row per node: index columns then value, row-major node order."""
    d = grid.dim
    header = [f"i{s + 1}" for s in range(d)] + ["value"]
    idx = np.indices(grid.values.shape).reshape(d, -1).T
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row, v in zip(idx, grid.values.ravel()):
            w.writerow([*row.tolist(), repr(float(v))])


def read_grid_csv(path: str | Path, box_len: float) -> GridScalar:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    d = data.shape[1] - 1
    h = int(data[:, 0].max()) + 1
    values = np.zeros((h,) * d)
    values[tuple(data[:, :d].astype(int).T)] = data[:, d]
    return GridScalar(values, box_len)


def hermitian_part(field: SpectralField) -> SpectralField:
    """``(alpha_q + conj(alpha_{-q})) / 2``; modes without a partner in the index set are kept real."""
    c = field.coeffs
    flipped = c
    for axis in range(c.ndim):
        flipped = np.roll(np.flip(flipped, axis=axis), 1, axis=axis)
    return SpectralField(0.5 * (c + np.conj(flipped)), field.box_len, field.role)
