"""Deterministic sample generation: Halton sequences, grids, ball points.

Seeds select an offset into the Halton sequence, so sample sets are exactly
reproducible and grow monotonically: asking for more points with the same
seed returns a superset (prefix property), which is what makes enlarging a
sampling plan refine, never contradict, an earlier verdict.
"""
from __future__ import annotations

import math

import numpy as np

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53)


def _van_der_corput(index: int, base: int) -> float:
    v, denom = 0.0, 1.0
    while index > 0:
        index, digit = divmod(index, base)
        denom *= base
        v += digit / denom
    return v


def halton(count: int, dim: int, seed: int = 0) -> np.ndarray:
    """``count`` Halton points in (0, 1)^dim, offset by ``seed``."""
    if dim > len(_PRIMES):
        raise ValueError(f"halton supports up to {len(_PRIMES)} dimensions")
    start = 1 + int(seed)
    out = np.empty((count, dim))
    for i in range(count):
        for j in range(dim):
            out[i, j] = _van_der_corput(start + i, _PRIMES[j])
    return out


def box_grid(bounds, per_axis: int) -> np.ndarray:
    """Full Cartesian grid over a list of (lo, hi) intervals."""
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in bounds]
    if not axes:
        return np.zeros((1, 0))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def box_halton(bounds, count: int, seed: int = 0) -> np.ndarray:
    """Halton points scaled into a box."""
    dim = len(bounds)
    if count <= 0 or dim == 0:
        return np.zeros((0, dim))
    unit = halton(count, dim, seed)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    return lo + unit * (hi - lo)


def ball_points(count: int, dim: int, radius: float, seed: int = 0) -> np.ndarray:
    """Low-discrepancy points with |x| <= radius (origin always included).

    Rejection from the bounding box keeps the prefix property per seed.
    """
    pts = [np.zeros(dim)]
    index = 0
    batch = max(4 * count, 16)
    while len(pts) < count:
        cand = 2.0 * radius * (halton(batch, dim, seed + index) - 0.5)
        for row in cand:
            if float(np.linalg.norm(row)) <= radius:
                pts.append(row)
                if len(pts) >= count:
                    break
        index += batch
    return np.vstack(pts[:count])


def initial_conditions(radius: float, dim: int, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic initial conditions inside the open ball of given radius.

    Low-discrepancy points in the inscribed box (half-width R/sqrt(n)) plus
    the coordinate-axis near-extremes, which cover the worst-case directions.
    """
    if radius <= 0.0:
        raise ValueError("radius must be > 0")
    extremes = []
    r_edge = radius * (1.0 - 1e-12)
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = r_edge
        extremes.extend([e.copy(), -e])
    n_halton = max(0, count - len(extremes))
    half = radius / math.sqrt(dim)
    pts = 2.0 * half * (halton(n_halton, dim, seed) - 0.5) if n_halton else np.zeros((0, dim))
    return np.vstack([np.array(extremes), pts])[:max(count, 1)]
