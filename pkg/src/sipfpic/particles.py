"""Particle ensemble, counter-based Gaussian increments and the Euler-Maruyama step."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class BlowupError(RuntimeError):
    """A run was aborted because the solution left the representable regime."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


class NonFiniteDriftError(BlowupError):
    def __init__(self, particle: int, step: int | None = None):
        super().__init__(f"non-finite drift at particle {particle}", step)
        self.particle = particle


@dataclass
class ParticleEnsemble:
    positions: np.ndarray        # (P, d), inside [-L/2, L/2)
    total_mass: float
    box_len: float
    step_index: int = 0

    @property
    def n_particles(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def particle_mass(self) -> float:
        return self.total_mass / self.n_particles

    def copy(self) -> "ParticleEnsemble":
        return ParticleEnsemble(self.positions.copy(), self.total_mass,
                                self.box_len, self.step_index)

    def in_box(self) -> bool:
        half = 0.5 * self.box_len
        return bool(np.all(self.positions >= -half) and np.all(self.positions < half))


def wrap_periodic(x, box_len: float):
    """Map coordinates into the half-open box ``[-L/2, L/2)``."""
    x = np.asarray(x, dtype=float)
    half = 0.5 * box_len
    y = x - box_len * np.floor((x + half) / box_len)
    # rounding can land exactly on +L/2 (or a hair below -L/2)
    y = np.where(y >= half, y - box_len, y)
    y = np.where(y < -half, y + box_len, y)
    return y


_TWO_PI = 2.0 * np.pi
_INV_2_53 = 1.0 / 9007199254740992.0


def _key(seed: int, step: int) -> np.ndarray:
    return np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, int(step) & 0xFFFFFFFFFFFFFFFF],
                    dtype=np.uint64)


def _box_muller(raw: np.ndarray) -> np.ndarray:
    """Four normals per Philox block of four 64-bit words. ``raw`` has shape (n, 4)."""
    u = (raw >> np.uint64(11)).astype(float) * _INV_2_53
    out = np.empty(raw.shape)
    for a, b in ((0, 1), (2, 3)):
        r = np.sqrt(-2.0 * np.log1p(-u[:, a]))     # 1 - u in (0, 1]
        theta = _TWO_PI * u[:, b]
        out[:, a] = r * np.cos(theta)
        out[:, b] = r * np.sin(theta)
    return out


def rng_stream(seed: int, step: int, particle: int, dim: int = 3) -> np.ndarray:
    """Standard normal ``dim``-vector for one (seed, step, particle) triple.

    Philox4x64 keyed by ``(seed, step)``; particle ``p`` owns the counter block
    ``p``.  The value depends on nothing else, so it is independent of
    execution order.
    """
    gen = np.random.Philox(key=_key(seed, step), counter=int(particle))
    return _box_muller(gen.random_raw(4).reshape(1, 4))[0, :dim]


def gaussian_block(seed: int, step: int, n_particles: int, dim: int,
                   first: int = 0) -> np.ndarray:
    """Rows ``first .. first+n-1`` of the per-step normal stream, shape (n, dim).

    Row ``p`` equals ``rng_stream(seed, step, first + p, dim)``.
    """
    gen = np.random.Philox(key=_key(seed, step), counter=int(first))
    raw = gen.random_raw(4 * n_particles).reshape(n_particles, 4)
    return _box_muller(raw)[:, :dim]


def sampling_generator(seed: int, stream: int = 0) -> np.random.Generator:
    """Generator for initial-condition sampling; step key 0 is never used by stepping."""
    return np.random.Generator(np.random.Philox(key=_key(seed, 0), counter=[0, 0, 0, stream]))


def em_step(ens: ParticleEnsemble, drift: np.ndarray, params, seed: int | None = None
            ) -> ParticleEnsemble:
    """``X <- wrap(X + chi*tau*drift + sqrt(2*mu*tau) * N(0, I))``.

    The noise for step ``n = ens.step_index + 1`` comes from the counter
    stream keyed by ``(seed, n)``.
    """
    drift = np.asarray(drift, dtype=float)
    if drift.shape != ens.positions.shape:
        raise ValueError(f"drift shape {drift.shape} != positions shape {ens.positions.shape}")
    step = ens.step_index + 1
    finite = np.isfinite(drift).all(axis=1)
    if not finite.all():
        raise NonFiniteDriftError(int(np.argmin(finite)), step)
    seed = params.rng_seed if seed is None else seed
    x = ens.positions + (params.chi * params.dt) * drift
    if params.mu > 0:
        noise = gaussian_block(seed, step, ens.n_particles, ens.dim)
        x += np.sqrt(2.0 * params.mu * params.dt) * noise
    return ParticleEnsemble(wrap_periodic(x, ens.box_len), ens.total_mass,
                            ens.box_len, step)


# --- snapshots -------------------------------------------------------------

_MAGIC = b"SIPFPART"


def write_particles_csv(path: str | Path, positions: np.ndarray) -> None:
    d = positions.shape[1]
    header = ",".join(f"x{s + 1}" for s in range(d))
    np.savetxt(path, positions, delimiter=",", header=header, comments="", fmt="%.17g")


def read_particles_csv(path: str | Path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def write_particles_bin(path: str | Path, positions: np.ndarray) -> None:
    """16-byte header (magic, u32 P, u32 d) then little-endian float64 rows."""
    p, d = positions.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC + struct.pack("<II", p, d))
        fh.write(np.ascontiguousarray(positions, dtype="<f8").tobytes())


def read_particles_bin(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:8] != _MAGIC:
        raise ValueError(f"{path}: not a particle snapshot")
    p, d = struct.unpack("<II", data[8:16])
    arr = np.frombuffer(data, dtype="<f8", offset=16)
    if arr.size != p * d:
        raise ValueError(f"{path}: truncated snapshot")
    return arr.reshape(p, d).astype(float)
