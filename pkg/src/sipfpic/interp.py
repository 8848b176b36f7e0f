"""Particle-to-grid deposition and grid-to-particle gathering.

Two stencils are provided.  Order 2 is the usual cloud-in-cell (multilinear)
kernel on the ``2**d`` vertices of the cell containing the particle.  Order 4
adds, for every axis, the two face-extension layers at offsets -1 and 2 along
that axis (``2d * 2**(d-1)`` extra nodes) and rescales the inner weights so
that the weights still sum to one.

Offsets are enumerated in a fixed order: the inner cell vertices in
lexicographic order, then for each axis the -1 layer followed by the 2 layer,
each in lexicographic order over the remaining axes.  Deposition accumulates
contributions offset by offset in this order, particles in index order within
each offset, so results are bitwise reproducible.

Grid node ``i`` (per axis) sits at ``-L/2 + i*L/H``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .spectral import GridScalar, GridVector


@dataclass
class InterpStencil:
    order: int
    offsets: np.ndarray   # (K, d) signed integer offsets
    weights: np.ndarray   # (K,)
    base_index: np.ndarray
    frac: np.ndarray


@lru_cache(maxsize=None)
def stencil_offsets(order: int, dim: int) -> np.ndarray:
    """Signed offsets of the stencil in the documented enumeration order."""
    inner = list(itertools.product((0, 1), repeat=dim))
    if order == 2:
        offs = inner
    elif order == 4:
        offs = list(inner)
        for axis in range(dim):
            for edge in (-1, 2):
                for rest in itertools.product((0, 1), repeat=dim - 1):
                    o = list(rest)
                    o.insert(axis, edge)
                    offs.append(tuple(o))
    else:
        raise ValueError(f"order must be 2 or 4, got {order}")
    arr = np.array(offs, dtype=np.int64)
    arr.setflags(write=False)
    return arr


def _axis_tables(frac: np.ndarray, order: int) -> np.ndarray:
    """Per-axis 1D factors for offsets -1, 0, 1, 2; shape (d, 4, P).

    Offsets -1 and 2 carry the face-extension factors and are zero for order 2.
    """
    lam = frac.T                                     # (d, P)
    tab = np.zeros((lam.shape[0], 4, lam.shape[1]))
    tab[:, 1] = 1.0 - lam
    tab[:, 2] = lam
    if order == 4:
        curv = lam * (1.0 - lam)                     # lambda (1 - lambda)
        tab[:, 0] = -(2.0 - lam) * curv / 6.0
        tab[:, 3] = -(1.0 + lam) * curv / 6.0
    return tab


def _weights_kp(frac: np.ndarray, order: int) -> np.ndarray:
    """Stencil weights in (K, P) layout."""
    if order not in (2, 4):
        raise ValueError(f"order must be 2 or 4, got {order}")
    dim = frac.shape[1]
    offs = stencil_offsets(order, dim) + 1
    tab = _axis_tables(frac, order)
    w = tab[0][offs[:, 0]]
    for s in range(1, dim):
        w *= tab[s][offs[:, s]]
    if order == 4:
        # each extension node has exactly one axis at -1 or 2; the inner
        # vertices are rescaled so the weights sum to one
        inner = 2**dim
        w[:inner] *= 1.0 + 0.5 * (frac * (1.0 - frac)).sum(axis=1)
    return w


def stencil_weights(frac: np.ndarray, order: int) -> np.ndarray:
    """Weights for many particles at once.

    Parameters
    ----------
    frac : (P, d) array of in-cell fractions, each in [0, 1).
    order : 2 or 4.

    Returns
    -------
    (P, K) array aligned with ``stencil_offsets(order, d)``.
    """
    frac = np.asarray(frac, dtype=float)
    if frac.ndim != 2:
        raise ValueError("frac must have shape (P, d)")
    return _weights_kp(frac, order).T


def _check_frac(frac) -> np.ndarray:
    frac = np.atleast_1d(np.asarray(frac, dtype=float))
    if frac.ndim != 1 or frac.size not in (2, 3):
        raise ValueError("frac must be a 2- or 3-vector")
    if np.any(frac < 0) or np.any(frac >= 1):
        raise ValueError(f"frac components must lie in [0, 1), got {frac}")
    return frac


def weights2(frac) -> InterpStencil:
    """Multilinear stencil for one in-cell fraction vector."""
    frac = _check_frac(frac)
    return InterpStencil(2, stencil_offsets(2, frac.size),
                         stencil_weights(frac[None], 2)[0],
                         np.zeros(frac.size, dtype=np.int64), frac)


def weights4(frac) -> InterpStencil:
    """Face-extended fourth-order stencil for one in-cell fraction vector."""
    frac = _check_frac(frac)
    return InterpStencil(4, stencil_offsets(4, frac.size),
                         stencil_weights(frac[None], 4)[0],
                         np.zeros(frac.size, dtype=np.int64), frac)


def locate(positions: np.ndarray, box_len: float, grid_h: int):
    """Cell base index and in-cell fraction of each position.

    Positions must lie in ``[-L/2, L/2)``.  A position exactly on a node gets
    that node as base and a zero fraction.
    """
    x = np.asarray(positions, dtype=float)
    half = 0.5 * box_len
    if np.any(x < -half) or np.any(x >= half) or not np.all(np.isfinite(x)):
        raise ValueError("positions must lie inside [-L/2, L/2); wrap them first")
    s = (x + half) * (grid_h / box_len)
    base = np.floor(s)
    frac = s - base
    base = base.astype(np.int64)
    # s can round up to exactly grid_h for x just below L/2
    base %= grid_h
    return base, frac


def _flat_indices_kp(base: np.ndarray, offsets: np.ndarray, grid_h: int) -> np.ndarray:
    """Row-major flat node index of every (offset, particle) pair, shape (K, P)."""
    dim = base.shape[1]
    dtype = np.int32 if grid_h**dim < 2**31 else np.int64
    shifts = np.arange(-1, 3)
    idx = None
    for s in range(dim):
        axis = ((base[:, s][None, :] + shifts[:, None]) % grid_h).astype(dtype)
        axis *= grid_h ** (dim - 1 - s)
        part = axis[offsets[:, s] + 1]
        idx = part if idx is None else idx + part
    return idx


def _stencil_kp(positions, box_len: float, grid_h: int, order: int):
    base, frac = locate(positions, box_len, grid_h)
    offs = stencil_offsets(order, base.shape[1])
    return _flat_indices_kp(base, offs, grid_h), _weights_kp(frac, order)


def stencil(positions, box_len: float, grid_h: int, order: int):
    """Flat node indices and weights, each of shape (P, K)."""
    idx, w = _stencil_kp(positions, box_len, grid_h, order)
    return idx.T.astype(np.int64), w.T


def deposit(ensemble, grid_h: int, order: int) -> GridScalar:
    """Spread each particle's mass ``M0/P`` onto its stencil nodes."""
    pos = ensemble.positions
    n, dim = pos.shape
    idx, w = _stencil_kp(pos, ensemble.box_len, grid_h, order)
    w *= ensemble.total_mass / n
    phi = np.bincount(idx.ravel(), weights=w.ravel(), minlength=grid_h**dim)
    return GridScalar(phi.reshape((grid_h,) * dim), ensemble.box_len)


def gather(field: GridScalar | GridVector, positions: np.ndarray, order: int) -> np.ndarray:
    """Interpolate grid values to positions.

    Returns shape (P,) for a scalar field and (P, d) for a vector field.
    """
    idx, w = _stencil_kp(positions, field.box_len, field.grid_h, order)
    if isinstance(field, GridVector):
        return np.stack([np.einsum("kp,kp->p", w, c.values.ravel()[idx])
                         for c in field.components], axis=1)
    return np.einsum("kp,kp->p", w, field.values.ravel()[idx])
