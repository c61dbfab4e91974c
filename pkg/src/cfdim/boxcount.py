"""Box-counting dimension of a finite point set on the line."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

MIN_POINTS = 1000
MIN_SCALES = 4
MIN_DECADES = 2.0


class DegenerateScalesError(ValueError):
    pass


@dataclass
class BoxCountResult:
    slope: float
    intercept: float
    r2: float
    scales: list
    counts: list

    def as_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "scales": self.scales,
            "counts": self.counts,
        }


def as_offsets(points) -> np.ndarray:
    """Floats for box counting; exact rationals are shifted by their minimum first.

    Sampled points can share long prefixes, so their spread sits far below
    float64 resolution at their magnitude. Subtracting the minimum exactly
    keeps the relative structure.
    """
    pts = list(points) if not isinstance(points, np.ndarray) else points
    if len(pts) and isinstance(pts[0], Fraction):
        lo = min(pts)
        return np.array([float(p - lo) for p in pts])
    return np.asarray(pts, dtype=float).ravel()


def box_counts(points, scales) -> np.ndarray:
    """Occupied boxes ``N(delta) = #{floor(x / delta)}`` for each scale."""
    x = np.asarray(points, dtype=float).ravel()
    return np.array([np.unique(np.floor(x / d)).size for d in scales])


def check_scales(scales) -> np.ndarray:
    d = np.asarray(scales, dtype=float).ravel()
    if d.size < MIN_SCALES:
        raise DegenerateScalesError(f"need at least {MIN_SCALES} scales, got {d.size}")
    if not np.all(np.isfinite(d)) or np.any(d <= 0):
        raise DegenerateScalesError("scales must be finite and positive")
    if np.unique(d).size != d.size:
        raise DegenerateScalesError("scales must be distinct")
    span = math.log10(d.max() / d.min())
    if span < MIN_DECADES - 1e-12:
        raise DegenerateScalesError(f"scales span {span:.2f} decades, need {MIN_DECADES}")
    return np.sort(d)[::-1]


def box_count_dimension(points, scales) -> BoxCountResult:
    """Least-squares slope of ``log N(delta)`` against ``log(1/delta)``.

    Parameters
    ----------
    points : array_like or sequence of Fraction
        At least 1000 finite reals. Exact rationals are shifted by their
        minimum before rounding (see :func:`as_offsets`), which leaves box
        counts unchanged up to grid alignment.
    scales : sequence of float
        At least 4 distinct box sizes spanning at least 2 decades.
    """
    x = as_offsets(points)
    if x.size < MIN_POINTS:
        raise ValueError(f"need at least {MIN_POINTS} points, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("points must be finite")
    d = check_scales(scales)
    counts = box_counts(x, d)
    u = np.log(1.0 / d)
    v = np.log(counts.astype(float))
    A = np.column_stack([u, np.ones_like(u)])
    (slope, intercept), *_ = np.linalg.lstsq(A, v, rcond=None)
    resid = v - (slope * u + intercept)
    ss_tot = float(((v - v.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return BoxCountResult(float(slope), float(intercept), r2, d.tolist(), counts.tolist())


def relative_scales(points, n_scales: int = 8, decades: float = 2.0, top_fraction: float = 0.5) -> list:
    """Geometric scales from ``top_fraction`` of the sample's span down ``decades`` decades."""
    x = as_offsets(points)
    span = float(x.max() - x.min())
    if span <= 0:
        raise DegenerateScalesError("points have zero span")
    top = top_fraction * span
    return list(top * np.logspace(0.0, -decades, n_scales))


def cantor_sample(n: int, depth: int = 12, seed: Optional[int] = 0) -> np.ndarray:
    """Points of the middle-thirds Cantor set: ``depth`` random ternary digits in {0, 2}
    followed by a random tail inside the remaining subinterval."""
    rng = np.random.default_rng(seed)
    digits = 2 * rng.integers(0, 2, size=(n, depth))
    weights = 3.0 ** -np.arange(1, depth + 1)
    head = digits @ weights
    tail_digits = 2 * rng.integers(0, 2, size=(n, 20))
    tail = (tail_digits @ (3.0 ** -np.arange(1, 21))) * 3.0**-depth
    return head + tail


def scaling_region(
    points,
    n_scales: int = 9,
    min_count: int = 10,
    max_fraction: float = 0.1,
    decades: float = MIN_DECADES,
) -> list:
    """Scales inside the usual scaling region of a finite sample.

    A fine geometric grid below the sample span is scanned; the coarsest
    kept scale is the last one with fewer than ``min_count`` boxes (coarser
    ones only see the overall extent) and the finest is the first with more
    than ``max_fraction`` of the points in distinct boxes (finer ones are
    undersampled). The region is widened downward to ``decades`` if needed
    and ``n_scales`` geometric scales across it are returned.
    """
    x = as_offsets(points)
    span = float(x.max() - x.min())
    if span <= 0:
        raise DegenerateScalesError("points have zero span")
    grid = span * np.logspace(0.0, -12.0, 241)
    counts = box_counts(x, grid)
    cap = max_fraction * x.size
    coarse = np.nonzero(counts < min_count)[0]
    top = grid[coarse[-1]] if coarse.size else grid[0]
    fine = np.nonzero(counts > cap)[0]
    bottom = grid[fine[0]] if fine.size else grid[-1]
    if math.log10(top / bottom) < decades:
        bottom = top * 10.0**-decades
    return list(np.geomspace(top, bottom, n_scales))
