"""The exponent family g_r(s).

``g_1(s) = s`` and ``g_r(s) = s g_{r-1}(s) / (1 - s + g_{r-1}(s))``, with
closed form ``s^r (2s - 1) / (s^r - (1 - s)^r)``.
"""

from __future__ import annotations

import math

import numpy as np


def _check(r, s, extended):
    if int(r) != r or r < 1:
        raise ValueError(f"r must be a positive integer, got {r}")
    s_arr = np.asarray(s, dtype=float)
    if extended:
        bad = (s_arr < 0) | ~np.isfinite(s_arr)
        if np.any(bad):
            raise ValueError("s must be finite and >= 0")
    else:
        bad = (s_arr <= 0) | (s_arr > 1) | ~np.isfinite(s_arr)
        if np.any(bad):
            raise ValueError("s must lie in (0, 1]")
    return int(r), s_arr


def g_recursive(r: int, s, *, extended: bool = False):
    """Evaluate g_r(s) by the defining recursion.

    Accepts scalars or arrays. ``extended=True`` admits any ``s >= 0`` (the
    dimension solvers bisect on [0, 2]); the denominator stays positive there.
    """
    r, s_arr = _check(r, s, extended)
    g = s_arr.copy()
    for _ in range(r - 1):
        g = s_arr * g / (1.0 - s_arr + g)
    return float(g) if g.ndim == 0 else g


def g_closed_form(r: int, s, *, extended: bool = False):
    """Evaluate g_r(s) from the closed form.

    Written in ``d = 2s - 1`` as ``(1+d)^r / (2 sum_{k odd} C(r,k) d^(k-1))``,
    which is the same rational function with the common factor ``d``
    cancelled, so s = 1/2 gives the limit 1/(2r) with no 0/0.
    """
    r, s_arr = _check(r, s, extended)
    d = 2.0 * s_arr - 1.0
    denom = np.zeros_like(d)
    for k in range(1, r + 1, 2):
        denom = denom + math.comb(r, k) * d ** (k - 1)
    g = (1.0 + d) ** r / (2.0 * denom)
    return float(g) if g.ndim == 0 else g


def g_closed_form_literal(r: int, s: float) -> float:
    """The closed form exactly as written; undefined at s = 1/2."""
    r, _ = _check(r, s, True)
    s = float(s)
    den = s**r - (1.0 - s) ** r
    if den == 0.0:
        return 1.0 / (2 * r)
    return s**r * (2.0 * s - 1.0) / den


def g(r: int, s: float) -> float:
    """g_r(s) for solver use: recursion, any s >= 0."""
    return g_recursive(r, s, extended=True)
