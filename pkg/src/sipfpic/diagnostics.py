"""Run diagnostics: radial mass distributions, the quantile Wasserstein-1 error,
the second moment and the spectral blow-up indicator."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .spectral import SpectralField, sup_norm_c


def _radii(ens_or_positions) -> np.ndarray:
    pos = getattr(ens_or_positions, "positions", ens_or_positions)
    return np.linalg.norm(np.asarray(pos, dtype=float), axis=1)


def empirical_radial_cdf(ens, r):
    """Fraction of particles with ``|X_p| <= r``."""
    radii = np.sort(_radii(ens))
    m = np.searchsorted(radii, np.asarray(r, dtype=float), side="right") / radii.size
    return float(m) if np.ndim(m) == 0 else m


class EmpiricalRadialCDF:
    """Radial distribution of a particle cloud; quantiles are exact order statistics."""

    def __init__(self, ens_or_positions=None, *, radii=None):
        radii = _radii(ens_or_positions) if radii is None else np.asarray(radii, float)
        self.radii = np.sort(radii)

    def __call__(self, r):
        m = np.searchsorted(self.radii, np.asarray(r, float), side="right") / self.radii.size
        return m

    def quantile(self, levels) -> np.ndarray:
        """Smallest ``r`` with ``m(r) >= level``."""
        levels = np.asarray(levels, float)
        n = self.radii.size
        k = np.ceil(levels * n - 1e-9).astype(np.int64)
        out = np.zeros(levels.shape)
        pos = k > 0
        out[pos] = self.radii[np.minimum(k[pos], n) - 1]
        return out


class TabulatedRadialCDF:
    """Piecewise-linear CDF through ``(r_i, m_i)`` samples, normalised to end at 1."""

    def __init__(self, r, m):
        r = np.asarray(r, float)
        m = np.asarray(m, float)
        if r.shape != m.shape or r.ndim != 1 or r.size < 2:
            raise ValueError("r and m must be matching 1D arrays")
        if np.any(np.diff(r) <= 0):
            raise ValueError("radii must be strictly increasing")
        if np.any(np.diff(m) < 0):
            raise ValueError("CDF values must be non-decreasing")
        if m[-1] <= 0:
            raise ValueError("CDF carries no mass")
        self.r = r
        self.m = m / m[-1]

    @classmethod
    def from_profile(cls, profile) -> "TabulatedRadialCDF":
        from .radial import cdf_table
        return cls(*cdf_table(profile))

    def __call__(self, r):
        return np.interp(r, self.r, self.m, left=0.0, right=1.0)

    def quantile(self, levels) -> np.ndarray:
        levels = np.asarray(levels, float)
        i = np.searchsorted(self.m, levels, side="left")
        i = np.clip(i, 1, self.r.size - 1)
        m0, m1 = self.m[i - 1], self.m[i]
        r0, r1 = self.r[i - 1], self.r[i]
        t = np.where(m1 > m0, (levels - m0) / np.where(m1 > m0, m1 - m0, 1.0), 1.0)
        out = r0 + np.clip(t, 0.0, 1.0) * (r1 - r0)
        return np.where(levels <= self.m[0], self.r[0], out)


def _quantiles(cdf, levels, r_cap):
    if hasattr(cdf, "quantile"):
        return cdf.quantile(levels)
    if not callable(cdf):
        raise TypeError("cdf must be callable or provide quantile()")
    # bisection on a plain callable
    lo = np.zeros(levels.shape)
    hi = np.full(levels.shape, float(r_cap))
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        below = np.asarray(cdf(mid)) < levels
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return hi


def wasserstein1_radial(cdf_a, cdf_b, n_quantiles: int = 10_000, r_cap: float = 50.0) -> float:
    """Mean absolute difference of capped quantiles at levels ``j/n``, ``j = 0..n-1``."""
    levels = np.arange(n_quantiles) / n_quantiles
    qa = np.minimum(_quantiles(cdf_a, levels, r_cap), r_cap)
    qb = np.minimum(_quantiles(cdf_b, levels, r_cap), r_cap)
    if np.any(np.diff(qa) < 0) or np.any(np.diff(qb) < 0):
        raise ValueError("CDF is not monotone")
    return float(np.mean(np.abs(qa - qb)))


def second_moment(ens) -> float:
    """``M2 = (M0/P) * sum_p |X_p|^2 / 2``."""
    pos = ens.positions
    return float(ens.total_mass / pos.shape[0] * 0.5 * np.einsum("pd,pd->", pos, pos))


def blowup_ratio(alpha: SpectralField, h0_lo: int = 8, h0_hi: int = 32) -> float:
    """``sup|c|`` with the wide cutoff divided by ``sup|c|`` with the narrow one."""
    if not h0_lo < h0_hi <= alpha.grid_h:
        raise ValueError(f"need h0_lo < h0_hi <= H, got {h0_lo}, {h0_hi}, H={alpha.grid_h}")
    lo = sup_norm_c(alpha, h0_lo)
    if lo == 0.0:
        raise ZeroDivisionError("field vanished: sup|c| is zero at the narrow cutoff")
    return sup_norm_c(alpha, h0_hi) / lo


def mean_cylindrical_radius(ens) -> float:
    """Mean of ``sqrt(x1^2 + x2^2)`` over particles (ensemble or (P, 3) array)."""
    pos = np.asarray(getattr(ens, "positions", ens), dtype=float)
    return float(np.mean(np.hypot(pos[:, 0], pos[:, 1])))


@dataclass
class MetricsRecord:
    step: int
    time: float
    second_moment: float
    sup_c_lo: float
    sup_c_hi: float
    blowup_ratio: float
    w1_error: float | None = None


def metrics_record(step: int, dt: float, ens, alpha: SpectralField, h0_lo: int = 8,
                   h0_hi: int = 32, reference=None) -> MetricsRecord:
    h0_hi = min(h0_hi, alpha.grid_h)
    h0_lo = min(h0_lo, h0_hi)
    lo = sup_norm_c(alpha, h0_lo)
    hi = sup_norm_c(alpha, h0_hi)
    ratio = hi / lo if lo > 0 else math.nan
    w1 = None
    if reference is not None:
        w1 = wasserstein1_radial(EmpiricalRadialCDF(ens), reference)
    return MetricsRecord(step, step * dt, second_moment(ens), lo, hi, ratio, w1)


METRICS_HEADER = ["step", "time", "M2", "sup_c_lo", "sup_c_hi", "blowup_ratio"]


class MetricsWriter:
    """Appends :class:`MetricsRecord` rows to ``metrics.csv``."""

    def __init__(self, path: str | Path, with_w1: bool = False):
        self.path = Path(path)
        self.with_w1 = with_w1
        self._fh = open(self.path, "w", newline="")
        self._w = csv.writer(self._fh)
        self._w.writerow(METRICS_HEADER + (["w1_error"] if with_w1 else []))

    def write(self, rec: MetricsRecord) -> None:
        row = [rec.step, repr(rec.time), repr(rec.second_moment), repr(rec.sup_c_lo),
               repr(rec.sup_c_hi), repr(rec.blowup_ratio)]
        if self.with_w1:
            row.append("" if rec.w1_error is None else repr(rec.w1_error))
        self._w.writerow(row)
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_metrics(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        return [{k: (float(v) if v != "" else None) for k, v in row.items()}
                for row in csv.DictReader(fh)]


def fit_slope(t, y) -> float:
    """Least-squares slope of ``y`` against ``t``."""
    return float(np.polyfit(np.asarray(t, float), np.asarray(y, float), 1)[0])
