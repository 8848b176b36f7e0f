"""Run parameters: definition, validation and flat ``key = value`` serialization."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path


class ConfigError(ValueError):
    """Raised when a parameter set violates an invariant or cannot be parsed."""


FIELD_UPDATES = ("auto", "parabolic", "elliptic")


@dataclass(frozen=True)
class SimParams:
    """Physical and numerical constants of one Keller-Segel run.

    ``eps = 0`` selects the elliptic field update; ``field_update`` may force
    either path explicitly.  ``cutoff_h0 = None`` means "no cutoff" and is
    resolved to ``grid_h`` by :func:`validate`.
    """

    chi: float = 1.0
    mu: float = 1.0
    eps: float = 1e-4
    kappa: float = 0.1
    box_len: float = 20.0
    dim: int = 3
    grid_h: int = 64
    cutoff_h0: int | None = None
    dt: float = 1e-5
    n_steps: int = 200
    n_particles: int = 2**15
    total_mass: float = 80.0
    p2g_order: int = 4
    g2p_order: int = 2
    rng_seed: int = 0
    field_update: str = "auto"

    @property
    def total_time(self) -> float:
        return self.n_steps * self.dt

    @property
    def elliptic(self) -> bool:
        if self.field_update == "auto":
            return self.eps == 0
        return self.field_update == "elliptic"

    @property
    def cell(self) -> float:
        return self.box_len / self.grid_h

    def replace(self, **changes) -> "SimParams":
        return dataclasses.replace(self, **changes)


_INT_KEYS = {"dim", "grid_h", "cutoff_h0", "n_steps", "n_particles",
             "p2g_order", "g2p_order", "rng_seed"}
_STR_KEYS = {"field_update"}
PARAM_KEYS = tuple(f.name for f in fields(SimParams))


def validate(params: SimParams) -> SimParams:
    """Check every invariant and fill derived fields.

    Returns a (possibly new) :class:`SimParams`; raises :class:`ConfigError`
    naming the first violated invariant.  Idempotent.
    """
    p = params
    if p.dim not in (2, 3):
        raise ConfigError(f"dim must be 2 or 3, got {p.dim}")
    if p.grid_h < 4:
        raise ConfigError(f"grid_h must be >= 4, got {p.grid_h}")
    if p.grid_h % 2:
        raise ConfigError(f"grid_h must be even, got {p.grid_h}")
    h0 = p.grid_h if p.cutoff_h0 is None else p.cutoff_h0
    if h0 < 1:
        raise ConfigError(f"cutoff_h0 must be positive, got {h0}")
    if h0 > p.grid_h:
        raise ConfigError(f"cutoff exceeds grid: cutoff_h0={h0} > grid_h={p.grid_h}")
    for name in ("dt", "box_len", "total_mass", "mu"):
        value = getattr(p, name)
        if not (math.isfinite(value) and value > 0):
            raise ConfigError(f"{name} must be positive, got {value}")
    # chi = 0 decouples the field: the pure-diffusion limit used by checks
    if not (math.isfinite(p.chi) and p.chi >= 0):
        raise ConfigError(f"chi must be non-negative, got {p.chi}")
    if p.n_particles < 1:
        raise ConfigError(f"n_particles must be positive, got {p.n_particles}")
    if p.n_steps < 1:
        raise ConfigError(f"n_steps must be positive, got {p.n_steps}")
    for name in ("eps", "kappa"):
        value = getattr(p, name)
        if not (math.isfinite(value) and value >= 0):
            raise ConfigError(f"{name} must be non-negative, got {value}")
    if p.p2g_order not in (2, 4) or p.g2p_order not in (2, 4):
        raise ConfigError("interpolation orders must be 2 or 4")
    if p.field_update not in FIELD_UPDATES:
        raise ConfigError(f"field_update must be one of {FIELD_UPDATES}")
    if p.eps == 0 and p.field_update == "parabolic":
        raise ConfigError("eps=0 requires the elliptic update path")
    if not 0 <= p.rng_seed < 2**64:
        raise ConfigError("rng_seed must fit in an unsigned 64-bit integer")
    if h0 != p.cutoff_h0:
        p = dataclasses.replace(p, cutoff_h0=h0)
    return p


def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce(key: str, raw: str):
    raw = raw.strip()
    if key in _STR_KEYS:
        return raw
    if key in _INT_KEYS:
        if key == "cutoff_h0" and raw.lower() in ("none", ""):
            return None
        try:
            return int(raw)
        except ValueError:
            # integral floats such as 1e4 are accepted
            value = float(raw)
            if value != int(value):
                raise ConfigError(f"{key} must be an integer, got {raw!r}") from None
            return int(value)
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key} must be a real number, got {raw!r}") from None


def serialize(params: SimParams) -> str:
    """Flat ``key = value`` text, one line per field plus the derived total time."""
    lines = [f"{f.name} = {_format(getattr(params, f.name))}" for f in fields(SimParams)]
    lines.append(f"total_time = {_format(params.total_time)}")
    return "\n".join(lines) + "\n"


def parse_kv(text: str) -> dict[str, str]:
    """Read ``key = value`` lines; ``#`` starts a comment.  Duplicate keys are an error."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def params_from_mapping(raw: dict[str, str], base: SimParams | None = None) -> SimParams:
    """Build parameters from string values; unknown keys raise."""
    values = {}
    derived_time = None
    for key, value in raw.items():
        if key == "total_time":
            derived_time = float(value)
            continue
        if key not in PARAM_KEYS:
            raise ConfigError(f"unknown parameter key {key!r}")
        values[key] = _coerce(key, value)
    params = dataclasses.replace(base or SimParams(), **values)
    if derived_time is not None and not math.isclose(
            derived_time, params.total_time, rel_tol=1e-12, abs_tol=0.0):
        raise ConfigError(
            f"total_time={derived_time} disagrees with n_steps*dt={params.total_time}")
    return params


def parse(text: str) -> SimParams:
    return params_from_mapping(parse_kv(text))


def load(path: str | Path) -> SimParams:
    return validate(parse(Path(path).read_text()))
