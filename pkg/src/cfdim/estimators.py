"""scikit-learn style wrappers around the functional API.

The numerical routines are plain functions; these classes only add the
familiar ``fit`` / ``get_params`` surface so the tools slot into parameter
sweeps and pipelines.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .boxcount import box_count_dimension, scaling_region
from .cantor import Construction, build_schedule, gamma_ladder, generate_points
from .dimension import closed_form_oracle, solve_limit
from .potential import make_potential


class BoxCountingDimension(BaseEstimator):
    """Box-counting slope of a 1-D point sample.

    Parameters
    ----------
    scales : sequence of float, optional
        Box sizes. If omitted, :func:`scaling_region` picks them from the data.
    n_scales : int
        Number of automatic scales.
    """

    def __init__(self, scales: Optional[Sequence[float]] = None, n_scales: int = 9):
        self.scales = scales
        self.n_scales = n_scales

    def fit(self, X, y=None):
        X = check_array(X, ensure_2d=False, dtype=np.float64)
        if X.ndim == 2:
            if X.shape[1] != 1:
                raise ValueError(f"expected one feature, got {X.shape[1]}")
            X = X[:, 0]
        scales = self.scales if self.scales is not None else scaling_region(X, self.n_scales)
        res = box_count_dimension(X, scales)
        self.dimension_ = res.slope
        self.r2_ = res.r2
        self.scales_ = np.asarray(res.scales)
        self.counts_ = np.asarray(res.counts)
        return self

    def score(self, X=None, y=None):
        check_is_fitted(self, "dimension_")
        return self.r2_


class DimensionSolver(BaseEstimator):
    """Pressure-root dimension along ``B = {1..M}``.

    ``fit`` ignores its arguments; the potential is fully described by the
    parameters.
    """

    def __init__(
        self,
        r: int = 1,
        tau="const:0.5",
        h="logT",
        M_list: Sequence[int] = (20, 50, 100, 200),
        method: str = "pressure",
        K: int = 64,
        n: int = 12,
        tol: Optional[float] = None,
    ):
        self.r = r
        self.tau = tau
        self.h = h
        self.M_list = M_list
        self.method = method
        self.K = K
        self.n = n
        self.tol = tol

    def fit(self, X=None, y=None):
        pspec = make_potential(self.r, self.tau, self.h)
        res = solve_limit(pspec, self.M_list, method=self.method, K=self.K, n=self.n, tol=self.tol)
        self.result_ = res
        self.s_star_ = res.s_star
        self.bracket_ = res.bracket
        self.M_sequence_ = np.array([row[:2] for row in res.M_sequence])
        self.potential_ = pspec
        return self

    def oracle(self) -> Optional[float]:
        """Closed-form value when ``h = log|T'|`` and ``tau`` is constant, else None."""
        check_is_fitted(self, "s_star_")
        p = self.potential_
        if p.h.kind == "logT" and p.tau.constant_value is not None:
            return closed_form_oracle(p.r, p.tau.constant_value)
        return None


class CantorSampler(BaseEstimator):
    """Seeded points of the Cantor construction.

    ``s`` is the ladder exponent for ``r >= 2``; when omitted it is the
    pressure root at ``M`` minus ``3 * eps``.
    """

    def __init__(
        self,
        r: int = 1,
        tau="const:0.5",
        h="logT",
        M: int = 20,
        J: int = 4,
        t0: int = 1,
        m_rule=None,
        s: Optional[float] = None,
        eps: float = 0.01,
        seed: int = 0,
    ):
        self.r = r
        self.tau = tau
        self.h = h
        self.M = M
        self.J = J
        self.t0 = t0
        self.m_rule = m_rule
        self.s = s
        self.eps = eps
        self.seed = seed

    def fit(self, X=None, y=None):
        from .dimension import solve_pressure_root

        pspec = make_potential(self.r, self.tau, self.h)
        schedule = build_schedule(self.r, self.t0, self.m_rule, self.J, self.M)
        s = self.s
        if s is None and self.r >= 2:
            s = solve_pressure_root(pspec, self.M).s_star - 3 * self.eps
        ladder = gamma_ladder(self.r, s) if self.r >= 2 else None
        self.s_ = s
        self.construction_ = Construction(schedule, ladder, pspec)
        return self

    def sample(self, n_points: int, seed: Optional[int] = None):
        """List of :class:`~cfdim.cantor.SampledPoint`, seeds ``seed .. seed + n - 1``."""
        check_is_fitted(self, "construction_")
        return generate_points(self.construction_, n_points, self.seed if seed is None else seed)

    def transform(self, X):
        """Map integer seeds (one column) to float64 point values."""
        check_is_fitted(self, "construction_")
        seeds = check_array(X, ensure_2d=False, dtype=np.int64).ravel()
        return np.array([float(self.construction_.generate(int(sd)).value) for sd in seeds])
