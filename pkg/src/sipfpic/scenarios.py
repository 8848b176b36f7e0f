"""Initial particle configurations: uniform ball or disk, four-ball tetrahedron, solid torus."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .particles import ParticleEnsemble, sampling_generator

TETRA_VERTICES = np.array([
    [1.0, 0.0, 0.0],
    [-0.5, math.sqrt(3) / 2, 0.0],
    [-0.5, -math.sqrt(3) / 2, 0.0],
    [0.0, 0.0, math.sqrt(2)],
])
TETRA_RADIUS = 0.5
TORUS_MAJOR = 1.0
TORUS_MINOR = 0.4

KINDS = ("ball", "disk", "tetra", "torus")


@dataclass
class ScenarioSpec:
    kind: str = "ball"
    mass: float | None = None       # None: take total_mass from the run parameters
    center: tuple[float, ...] | None = None
    radius: float = 1.0
    major: float = TORUS_MAJOR
    minor: float = TORUS_MINOR

    def extent(self, dim: int) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned bounding box of the support."""
        if self.kind in ("ball", "disk"):
            c = np.zeros(dim) if self.center is None else np.asarray(self.center, float)
            return c - self.radius, c + self.radius
        if self.kind == "tetra":
            return TETRA_VERTICES.min(0) - TETRA_RADIUS, TETRA_VERTICES.max(0) + TETRA_RADIUS
        if self.kind == "torus":
            r = self.major + self.minor
            return np.array([-r, -r, -self.minor]), np.array([r, r, self.minor])
        raise ValueError(f"unknown scenario kind {self.kind!r}")

    def check_fits(self, box_len: float, grid_h: int, dim: int) -> None:
        """Require the support to stay at least one grid cell inside the box."""
        lo, hi = self.extent(dim)
        margin = box_len / grid_h
        half = 0.5 * box_len
        if np.any(lo < -half + margin) or np.any(hi > half - margin):
            raise ValueError(f"{self.kind} scenario does not fit inside the box "
                             f"with a one-cell margin (L={box_len}, H={grid_h})")


def rejection_sample(rng: np.random.Generator, lo, hi, inside, n: int,
                     batch: int | None = None) -> tuple[np.ndarray, int]:
    """Uniform samples from ``{x in [lo, hi]: inside(x)}``.

    Returns the accepted points and the number of proposals drawn.
    """
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    chunks, have, drawn = [], 0, 0
    batch = batch or max(1024, 2 * n)
    while have < n:
        x = lo + (hi - lo) * rng.random((batch, lo.size))
        drawn += batch
        x = x[inside(x)]
        chunks.append(x)
        have += len(x)
    pts = np.concatenate(chunks)
    # proposals beyond the n-th acceptance are discarded but still counted
    return pts[:n], drawn


def _ball_points(rng, center, radius, n):
    center = np.asarray(center, float)
    pts, _ = rejection_sample(
        rng, center - radius, center + radius,
        lambda x: np.sum((x - center) ** 2, axis=1) <= radius**2, n)
    return pts


def _ensemble(points, mass, box_len):
    half = 0.5 * box_len
    if np.any(points < -half) or np.any(points >= half):
        raise ValueError("scenario exits the periodic box")
    return ParticleEnsemble(np.ascontiguousarray(points), float(mass), float(box_len))


def sample_ball(M0: float, center, radius: float, P: int, rng: np.random.Generator,
                box_len: float) -> ParticleEnsemble:
    """``P`` uniform points in a ball (3D) or disk (2D), each carrying ``M0/P``."""
    center = np.asarray(center, float)
    half = 0.5 * box_len
    if np.any(center - radius < -half) or np.any(center + radius >= half):
        raise ValueError("ball exits the periodic box")
    return _ensemble(_ball_points(rng, center, radius, P), M0, box_len)


def sample_tetra(M0: float, P: int, rng: np.random.Generator, box_len: float,
                 dim: int = 3) -> ParticleEnsemble:
    """Four equal-mass radius-1/2 balls on the tetrahedron vertices.

    ``P mod 4`` leftover particles go to the first balls.
    """
    if dim != 3:
        raise ValueError("the tetrahedral scenario is three-dimensional")
    counts = [P // 4 + (1 if i < P % 4 else 0) for i in range(4)]
    pts = np.concatenate([_ball_points(rng, v, TETRA_RADIUS, c)
                          for v, c in zip(TETRA_VERTICES, counts)])
    return _ensemble(pts, M0, box_len)


def in_torus(x, major: float = TORUS_MAJOR, minor: float = TORUS_MINOR):
    rho = np.hypot(x[:, 0], x[:, 1])
    return (major - rho) ** 2 + x[:, 2] ** 2 <= minor**2


def sample_torus(M0: float, P: int, rng: np.random.Generator, box_len: float,
                 dim: int = 3, major: float = TORUS_MAJOR,
                 minor: float = TORUS_MINOR) -> ParticleEnsemble:
    """Uniform points in the solid torus by rejection from its bounding box."""
    if dim != 3:
        raise ValueError("the torus scenario is three-dimensional")
    r = major + minor
    pts, _ = rejection_sample(rng, [-r, -r, -minor], [r, r, minor],
                              lambda x: in_torus(x, major, minor), P)
    return _ensemble(pts, M0, box_len)


def sample_scenario(spec: ScenarioSpec, params) -> ParticleEnsemble:
    """Draw the initial ensemble for ``spec`` from the run's seeded sampling stream."""
    mass = params.total_mass if spec.mass is None else spec.mass
    rng = sampling_generator(params.rng_seed)
    P, L, d = params.n_particles, params.box_len, params.dim
    spec.check_fits(L, params.grid_h, d)
    if spec.kind in ("ball", "disk"):
        if (spec.kind == "disk") != (d == 2):
            raise ValueError(f"scenario {spec.kind!r} does not match dim={d}")
        center = np.zeros(d) if spec.center is None else spec.center
        return sample_ball(mass, center, spec.radius, P, rng, L)
    if spec.kind == "tetra":
        return sample_tetra(mass, P, rng, L, d)
    if spec.kind == "torus":
        return sample_torus(mass, P, rng, L, d, spec.major, spec.minor)
    raise ValueError(f"unknown scenario kind {spec.kind!r}")


def scenario_from_mapping(raw: dict[str, str]) -> ScenarioSpec:
    """Build a spec from ``scenario.*`` config keys (prefix already stripped)."""
    spec = ScenarioSpec()
    for key, value in raw.items():
        if key == "kind":
            if value not in KINDS:
                raise ValueError(f"scenario.kind must be one of {KINDS}")
            spec.kind = value
        elif key == "mass":
            spec.mass = float(value)
        elif key == "center":
            spec.center = tuple(float(v) for v in value.split(","))
        elif key in ("radius", "major", "minor"):
            setattr(spec, key, float(value))
        else:
            raise ValueError(f"unknown scenario key {key!r}")
    return spec


def scenario_to_mapping(spec: ScenarioSpec) -> dict[str, str]:
    out = {"kind": spec.kind}
    if spec.mass is not None:
        out["mass"] = repr(float(spec.mass))
    if spec.center is not None:
        out["center"] = ",".join(repr(float(c)) for c in spec.center)
    if spec.kind in ("ball", "disk"):
        out["radius"] = repr(float(spec.radius))
    if spec.kind == "torus":
        out["major"] = repr(float(spec.major))
        out["minor"] = repr(float(spec.minor))
    return out
