"""Dimension values as roots of monotone quantities in ``s``.

* ``solve_fn_root``: root of ``f_{n,B}(s) = 1``;
* ``solve_pressure_root``: root of ``P_B(T, psi_s) = 0``;
* ``solve_limit``: the pressure root along increasing ``B = {1..M}``;
* ``closed_form_oracle``: root of ``g_r(s) c + s = 1``, exact for
  ``h = log|T'|`` and constant ``tau``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from .growth import g
from .potential import PotentialSpec
from .pressure import (
    DEFAULT_BUDGET,
    NotConverged,
    as_alphabet,
    log_f_n,
    pressure_brute,
    pressure_spectral,
)

logger = logging.getLogger(__name__)

S_LO, S_HI = 0.0, 2.0
FN_TOL = 1e-8
PRESSURE_TOL = 1e-6


class BracketError(RuntimeError):
    """The objective does not change sign on the search interval."""


class MonotonicityError(RuntimeError):
    """``s_M`` decreased in ``M`` by more than the solver tolerance."""


@dataclass
class DimensionResult:
    s_star: float
    bracket: tuple
    method: str
    converged: bool = True
    degenerate: bool = False
    M_sequence: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    extrapolation: Optional[dict] = None
    evaluations: int = 0

    def as_dict(self) -> dict:
        d = {
            "s_star": self.s_star,
            "bracket": list(self.bracket),
            "method": self.method,
            "converged": self.converged,
            "degenerate": self.degenerate,
            "M_sequence": [list(row) for row in self.M_sequence],
            "params": self.params,
            "evaluations": self.evaluations,
        }
        if self.extrapolation is not None:
            d["extrapolation"] = self.extrapolation
        return d


def bisect_decreasing(
    fun: Callable[[float], float], lo: float = S_LO, hi: float = S_HI, tol: float = 1e-8
) -> tuple[float, float, bool, int]:
    """Locate the sign change of a decreasing ``fun`` on ``[lo, hi]``.

    Returns
    -------
    lo, hi : float
        Final bracket, ``fun(lo) > 0 >= fun(hi)``.
    degenerate : bool
        True if ``fun(lo) <= 0`` already, in which case ``(lo, lo)`` is returned.
    evaluations : int
    """
    if not hi > lo:
        raise ValueError("need lo < hi")
    if tol <= 0:
        raise ValueError("tol must be positive")
    f_lo = fun(lo)
    if f_lo <= 0:
        return lo, lo, True, 1
    f_hi = fun(hi)
    if f_hi > 0:
        raise BracketError(f"objective still positive at s = {hi} ({f_hi:.3g}); model error?")
    evals = 2
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if fun(mid) > 0:
            lo = mid
        else:
            hi = mid
        evals += 1
    return lo, hi, False, evals


def _finish(lo, hi, degenerate, evals, method, params) -> DimensionResult:
    s = lo if degenerate else 0.5 * (lo + hi)
    return DimensionResult(
        s_star=s, bracket=(lo, hi), method=method, degenerate=degenerate, params=params, evaluations=evals
    )


def solve_fn_root(
    pspec: PotentialSpec,
    B,
    n: int,
    *,
    tol: float = FN_TOL,
    budget: int = DEFAULT_BUDGET,
    strategy: str = "auto",
    n_jobs: int = 1,
) -> DimensionResult:
    """Root of ``f_{n,B}(s) = 1`` by bisection on [0, 2].

    If ``f_{n,B}(0) <= 1`` the infimum is 0 and the result is flagged
    ``degenerate``.
    """
    B = as_alphabet(B)

    def obj(s):
        return log_f_n(pspec, s, B, n, budget=budget, strategy=strategy, n_jobs=n_jobs)

    lo, hi, deg, ev = bisect_decreasing(obj, tol=tol)
    params = {"alphabet": str(B), "n": n, "tol": tol, "potential": pspec.describe()}
    return _finish(lo, hi, deg, ev, "fn-root", params)


def solve_pressure_root(
    pspec: PotentialSpec,
    B,
    *,
    K: int = 64,
    tol: float = PRESSURE_TOL,
    method: str = "spectral",
    n_list: Sequence[int] = (14, 15, 16),
    eig_tol: float = 1e-12,
    max_iter: int = 100_000,
    budget: int = DEFAULT_BUDGET,
) -> DimensionResult:
    """Root of ``P_B(T, psi_s) = 0`` by bisection on [0, 2].

    ``method="spectral"`` (default) uses :func:`pressure_spectral` with grid
    ``K``; ``"brute"`` uses the ratio estimator at the depths ``n_list``.
    An unconverged pressure evaluation aborts with :class:`NotConverged`.
    """
    B = as_alphabet(B)
    if method not in ("spectral", "brute"):
        raise ValueError("method must be 'spectral' or 'brute'")
    fallbacks = []

    def obj(s):
        if method == "spectral":
            est = pressure_spectral(pspec, s, B, K, tol=eig_tol, max_iter=max_iter)
            if est.method != "spectral":
                fallbacks.append(s)
        else:
            est = pressure_brute(pspec, s, B, n_list, budget=budget)
        if not est.converged:
            raise NotConverged(f"pressure did not converge at s = {s} (residual {est.residual:.3g})")
        return est.value

    lo, hi, deg, ev = bisect_decreasing(obj, tol=tol)
    params = {"alphabet": str(B), "method": method, "tol": tol, "potential": pspec.describe()}
    if method == "spectral":
        params["K"] = K
    else:
        params["n_list"] = list(n_list)
    if fallbacks:
        params["linear_fallbacks"] = len(fallbacks)
    return _finish(lo, hi, deg, ev, "pressure-root", params)


def _fit_inverse_M(Ms, ss) -> Optional[dict]:
    if len(Ms) < 3:
        return None
    X = np.column_stack([np.ones(len(Ms)), -1.0 / np.asarray(Ms, dtype=float)])
    coef, *_ = np.linalg.lstsq(X, np.asarray(ss, dtype=float), rcond=None)
    return {"s_infinity": float(coef[0]), "C": float(coef[1]), "model": "s_M = s_inf - C/M", "heuristic": True}


def solve_limit(
    pspec: PotentialSpec,
    M_list: Sequence[int],
    *,
    method: str = "pressure",
    n: int = 12,
    K: int = 64,
    tol: Optional[float] = None,
    extrapolate: bool = True,
    n_jobs: int = 1,
    budget: int = DEFAULT_BUDGET,
) -> DimensionResult:
    """Solve along ``B = {1..M}`` for each ``M`` and report the monotone sequence.

    The last ``s_M`` is a lower bound for the full-system value (it is a
    supremum over finite alphabets). A fitted ``s_inf - C/M`` is attached as
    ``extrapolation`` and marked heuristic; it is never returned as
    ``s_star``.

    Raises
    ------
    MonotonicityError
        If some ``s_M`` falls below its predecessor by more than twice the
        solver tolerance.
    """
    M_list = [int(M) for M in M_list]
    if not M_list or any(b <= a for a, b in zip(M_list, M_list[1:])):
        raise ValueError("M_list must be nonempty and increasing")
    if method not in ("pressure", "fn"):
        raise ValueError("method must be 'pressure' or 'fn'")
    if tol is None:
        tol = PRESSURE_TOL if method == "pressure" else FN_TOL

    def one(M):
        if method == "pressure":
            return solve_pressure_root(pspec, M, K=K, tol=tol)
        return solve_fn_root(pspec, M, n, tol=tol, budget=budget)

    if n_jobs == 1:
        results = [one(M) for M in M_list]
    else:
        results = Parallel(n_jobs=n_jobs)(delayed(one)(M) for M in M_list)
    seq = [(M, r.s_star, r.bracket[0], r.bracket[1]) for M, r in zip(M_list, results)]
    for (M0, s0, *_), (M1, s1, *_) in zip(seq, seq[1:]):
        if s1 < s0 - 2 * tol:
            raise MonotonicityError(f"s_M decreased from {s0} (M={M0}) to {s1} (M={M1})")
    last = results[-1]
    params = {
        "M_list": M_list,
        "method": method,
        "tol": tol,
        "potential": pspec.describe(),
        "lower_bound": True,
    }
    if method == "pressure":
        params["K"] = K
    else:
        params["n"] = n
    return DimensionResult(
        s_star=last.s_star,
        bracket=last.bracket,
        method=f"limit/{method}",
        degenerate=last.degenerate,
        M_sequence=seq,
        params=params,
        extrapolation=_fit_inverse_M(M_list, [row[1] for row in seq]) if extrapolate else None,
        evaluations=sum(r.evaluations for r in results),
    )


def closed_form_oracle(r: int, c: float, tol: float = 1e-15) -> float:
    """The ``s`` in (0, 1] with ``g_r(s) c + s = 1``.

    This is the exact dimension when ``h = log|T'|`` and ``tau = c``: the
    potential is then ``-(g_r(s) c + s) log|T'|`` and the full-system
    pressure of ``-t log|T'|`` vanishes at ``t = 1``.
    """
    if c < 0:
        raise ValueError("c must be >= 0")
    if c == 0:
        return 1.0
    lo, hi, _, _ = bisect_decreasing(lambda s: 1.0 - g(r, s) * c - s, 0.0, 1.0, tol)
    return 0.5 * (lo + hi)
