"""Finite-alphabet pressure of ``psi_s``.

Two independent routes:

* brute force: ``f_n(s) = sum_{w in B^n} exp(-g_r(s) tau_min S_n h(z_w) - 2 s log q_n(w))``
  over every word, reduced in the log domain;
* spectral: the leading eigenvalue of the transfer operator
  ``(L phi)(x) = sum_a exp(psi_s(1/(a+x))) phi(1/(a+x))`` discretised by
  Chebyshev collocation.

Since ``f_n(s) = (L^n 1)(0)``, the ratio ``f_n / f_{n-1}`` converges to the
leading eigenvalue geometrically, which is why it is the default brute
estimator.
"""

from __future__ import annotations

import itertools
import logging
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy.special import logsumexp

from .potential import PotentialSpec

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = 10**8
DIRECT_THRESHOLD = 2 * 10**6
CHUNK = 2**18
SPLIT_MAX_Y = 0.9


class BudgetExceeded(RuntimeError):
    """The requested enumeration would exceed the configured budget."""

    def __init__(self, required: int, budget: int):
        super().__init__(f"enumeration needs {required} terms, budget is {budget}")
        self.required = required
        self.budget = budget


class NotConverged(RuntimeError):
    pass


class Alphabet:
    """A finite set of partial quotients, either ``{1..M}`` or explicit."""

    def __init__(self, digits: Iterable[int]):
        ds = sorted(set(int(a) for a in digits))
        if not ds:
            raise ValueError("alphabet must be nonempty")
        if ds[0] < 1:
            raise ValueError("alphabet members must be >= 1")
        self.digits = tuple(ds)

    @classmethod
    def contiguous(cls, M: int) -> "Alphabet":
        if M < 1:
            raise ValueError("M must be >= 1")
        return cls(range(1, M + 1))

    @classmethod
    def parse(cls, text: str) -> "Alphabet":
        """Parse ``"1..M"``, ``"a..b"`` or ``"{a,b,c}"``."""
        text = text.strip()
        m = re.fullmatch(r"(\d+)\s*\.\.\s*(\d+)", text)
        if m:
            lo, hi = int(m.group(1)), int(m.group(2))
            if lo > hi:
                raise ValueError(f"empty range {text!r}")
            return cls(range(lo, hi + 1))
        m = re.fullmatch(r"\{\s*(\d+(?:\s*,\s*\d+)*)\s*\}", text)
        if m:
            return cls(int(t) for t in m.group(1).split(","))
        raise ValueError(f"bad alphabet {text!r}; use 1..M or {{a,b,c}}")

    @property
    def is_contiguous(self) -> bool:
        return self.digits == tuple(range(1, len(self.digits) + 1))

    def __len__(self):
        return len(self.digits)

    def __iter__(self):
        return iter(self.digits)

    def __eq__(self, other):
        return isinstance(other, Alphabet) and self.digits == other.digits

    def __hash__(self):
        return hash(self.digits)

    def __repr__(self):
        return f"Alphabet({self})"

    def __str__(self):
        if self.is_contiguous:
            return f"1..{len(self.digits)}"
        return "{" + ",".join(map(str, self.digits)) + "}"


def as_alphabet(B) -> Alphabet:
    if isinstance(B, Alphabet):
        return B
    if isinstance(B, int):
        return Alphabet.contiguous(B)
    if isinstance(B, str):
        return Alphabet.parse(B)
    return Alphabet(B)


@dataclass
class PressureEstimate:
    value: float
    method: str
    s: float
    alphabet: str
    residual: float
    converged: bool
    params: dict = field(default_factory=dict)
    sequence: Optional[list] = None

    def as_dict(self) -> dict:
        d = {
            "value": self.value,
            "method": self.method,
            "params": dict(self.params, s=self.s, alphabet=self.alphabet),
            "residual": self.residual,
            "converged": self.converged,
        }
        if self.sequence is not None:
            d["sequence"] = self.sequence
        return d


# ---------------------------------------------------------------------------
# brute force
# ---------------------------------------------------------------------------


class _Suffixes:
    """Arrays over all words ``v`` of one length: ``[v]``, ``log q(v)``, ``S h([v])``."""

    __slots__ = ("x", "lq", "sh", "length")

    def __init__(self, x, lq, sh, length):
        self.x, self.lq, self.sh, self.length = x, lq, sh, length

    @classmethod
    def empty(cls):
        z = np.zeros(1)
        return cls(z, z.copy(), z.copy(), 0)

    def prepend(self, a: int, h) -> "_Suffixes":
        d = a + self.x
        x = 1.0 / d
        lq = self.lq + np.log(d)
        sh = self.sh + h(x) if h is not None else self.sh
        return _Suffixes(x, lq, sh, self.length + 1)

    def extend(self, digits, h) -> "_Suffixes":
        parts = [self.prepend(a, h) for a in digits]
        return _Suffixes(
            np.concatenate([p.x for p in parts]),
            np.concatenate([p.lq for p in parts]),
            np.concatenate([p.sh for p in parts]),
            self.length + 1,
        )


def _all_words(digits, length, h) -> _Suffixes:
    st = _Suffixes.empty()
    for _ in range(length):
        st = st.extend(digits, h)
    return st


class _Weights:
    """Log-weight of a word from its suffix arrays, for one (potential, s)."""

    def __init__(self, pspec: PotentialSpec, s: float):
        self.coef = pspec.coefficient(s)
        self.s = s
        self.kind = pspec.separable
        self.h = pspec.h
        self.const = pspec.h.constant_value
        # h only needs pointwise evaluation for expression kinds
        self.h_eval = pspec.h if (self.kind is None and self.coef != 0.0) else None

    def log_weight(self, st: _Suffixes) -> np.ndarray:
        if self.kind == "q":
            return -2.0 * (self.coef + self.s) * st.lq
        if self.kind == "n":
            return -self.coef * self.const * st.length - 2.0 * self.s * st.lq
        sh = st.sh if self.h_eval is not None else 0.0
        return -self.coef * sh - 2.0 * self.s * st.lq


def _branch_lse(st: _Suffixes, prefix_len: int, digits, weights: _Weights) -> float:
    if prefix_len == 0:
        return float(logsumexp(weights.log_weight(st)))
    vals = [_branch_lse(st.prepend(a, weights.h_eval), prefix_len - 1, digits, weights) for a in digits]
    return float(logsumexp(vals))


def _log_fn_direct(pspec, s, B: Alphabet, n: int, n_jobs: int = 1) -> float:
    weights = _Weights(pspec, s)
    digits = B.digits
    k = len(digits)
    m = n
    while m > 0 and k**m > CHUNK:
        m -= 1
    base = _all_words(digits, m, weights.h_eval)
    c = n - m
    if c == 0:
        return float(logsumexp(weights.log_weight(base)))
    # partition on the outermost prefix digit; each part reduces independently
    tasks = [(base.prepend(a, weights.h_eval), c - 1) for a in digits]
    if n_jobs == 1:
        parts = [_branch_lse(st, pl, digits, weights) for st, pl in tasks]
    else:
        parts = Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(_branch_lse)(st, pl, digits, weights) for st, pl in tasks
        )
    return float(logsumexp(parts))


def _split_plan(B: Alphabet, n: int):
    k = n // 2
    return k, n - k


def _log_fn_split(pspec, s, B: Alphabet, n: int) -> float:
    """Exact factorisation for potentials where ``S_n h`` depends on ``q_n`` or ``n`` only.

    With ``w = uv``, ``q(uv) = q(u) q(v) (1 + rho_u x_v)`` where
    ``rho_u = q_{k-1}(u)/q_k(u)`` and ``x_v = [v]``. Expanding
    ``(1 + y)^-beta`` binomially separates the double sum into products of
    one-sided moment sums. Terms are taken until the tail bound is below
    1e-17 of a lower bound for the total.
    """
    weights = _Weights(pspec, s)
    if weights.kind is None:
        raise ValueError("split enumeration needs h = logT or a constant h")
    k1, k2 = _split_plan(B, n)
    U = _all_words(B.digits, k1, None)  # reversal-closed: x over B^k are the rho_u values
    V = _all_words(B.digits, k2, None)
    if weights.kind == "q":
        beta = 2.0 * (weights.coef + s)
        shift = 0.0
    else:
        beta = 2.0 * s
        shift = -weights.coef * weights.const * n
    y_max = float(U.x.max() * V.x.max())
    if y_max > SPLIT_MAX_Y:
        raise ValueError(f"split series would converge too slowly (y_max = {y_max:.3f})")
    lu = -beta * U.lq
    lv = -beta * V.lq
    su, sv = lu.max(), lv.max()
    a = np.exp(lu - su)
    b = np.exp(lv - sv)
    lower = (1.0 + y_max) ** (-beta)
    total = 0.0
    coeff = 1.0
    bound = 1.0  # |C_m| y_max^m
    pa, pb = a.copy(), b.copy()
    a0b0 = a.sum() * b.sum()
    m = 0
    while True:
        total += coeff * pa.sum() * pb.sum()
        nxt = coeff * (-beta - m) / (m + 1)
        ratio = (beta + m) / (m + 1) * y_max
        bound = abs(nxt) * y_max ** (m + 1)
        m += 1
        if nxt == 0.0 or (ratio < 1.0 and bound / (1.0 - ratio) < 1e-17 * lower):
            break
        if m > 20000:
            raise NotConverged("split series did not converge")
        coeff = nxt
        pa *= U.x
        pb *= V.x
    if total <= 0 or total < 0.5 * lower * a0b0:
        raise NotConverged("split series lost all precision")
    return float(math.log(total) + su + sv + shift)


def enumeration_cost(B, n: int, strategy: str) -> int:
    k = len(as_alphabet(B))
    if strategy == "split":
        k1, k2 = _split_plan(as_alphabet(B), n)
        return k**k1 + k**k2
    return k**n


def _choose_strategy(pspec, B: Alphabet, n: int, budget: int, strategy: str) -> str:
    if strategy not in ("auto", "direct", "split"):
        raise ValueError(f"unknown strategy {strategy!r}")
    if strategy != "auto":
        cost = enumeration_cost(B, n, strategy)
        if cost > budget:
            raise BudgetExceeded(cost, budget)
        return strategy
    direct = enumeration_cost(B, n, "direct")
    if direct <= DIRECT_THRESHOLD or pspec.separable is None or n < 4:
        if direct > budget:
            raise BudgetExceeded(direct, budget)
        return "direct"
    k1, k2 = _split_plan(B, n)
    # the series converges like y_max^m; bail to direct when it would crawl
    y_est = _max_x(B) ** 2
    split = enumeration_cost(B, n, "split")
    if y_est <= SPLIT_MAX_Y and split <= budget:
        return "split"
    if direct > budget:
        raise BudgetExceeded(direct, budget)
    return "direct"


def _max_x(B: Alphabet) -> float:
    # [a_1, a_2, ...] = 1/(a_1 + t) with t >= 1/(a_2 + 1), for finite words too
    lo, hi = B.digits[0], B.digits[-1]
    return 1.0 / (lo + 1.0 / (hi + 1.0))


def log_f_n(
    pspec: PotentialSpec,
    s: float,
    B,
    n: int,
    *,
    budget: int = DEFAULT_BUDGET,
    strategy: str = "auto",
    n_jobs: int = 1,
) -> float:
    """``log f_{n,B}(s)``, summing every word of ``B^n`` at its anchor.

    ``strategy`` picks plain enumeration (``"direct"``), the exact
    factorised sum (``"split"``, only for ``h = logT`` or constant ``h``) or
    lets the routine decide (``"auto"``). Raises :class:`BudgetExceeded` if
    the work exceeds ``budget`` terms.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if s < 0:
        raise ValueError("s must be >= 0")
    B = as_alphabet(B)
    chosen = _choose_strategy(pspec, B, n, budget, strategy)
    if chosen == "split":
        return _log_fn_split(pspec, s, B, n)
    return _log_fn_direct(pspec, s, B, n, n_jobs=n_jobs)


def f_n(pspec: PotentialSpec, s: float, B, n: int, **kw) -> float:
    """``f_{n,B}(s)`` itself; may overflow to inf for large alphabets at small s."""
    return math.exp(log_f_n(pspec, s, B, n, **kw))


def pressure_brute(
    pspec: PotentialSpec,
    s: float,
    B,
    n_list: Sequence[int] = (8, 10, 12),
    *,
    estimator: str = "ratio",
    budget: int = DEFAULT_BUDGET,
    strategy: str = "auto",
    n_jobs: int = 1,
) -> PressureEstimate:
    """Pressure from ``f_n`` at the largest affordable depth in ``n_list``.

    ``estimator="mean"`` returns ``(1/n) log f_n``, whose error is O(1/n);
    ``"ratio"`` returns ``log f_n - log f_{n-1}``. Both columns are kept in
    the returned sequence.
    """
    if estimator not in ("ratio", "mean"):
        raise ValueError("estimator must be 'ratio' or 'mean'")
    n_list = list(n_list)
    if not n_list or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be nonempty and increasing")
    B = as_alphabet(B)
    cache: dict[int, float] = {}

    def lf(n):
        if n not in cache:
            cache[n] = log_f_n(pspec, s, B, n, budget=budget, strategy=strategy, n_jobs=n_jobs)
        return cache[n]

    seq = []
    first_error = None
    for n in n_list:
        try:
            cur = lf(n)
            prev = lf(n - 1) if n > 1 else 0.0
        except BudgetExceeded as exc:
            first_error = exc
            break
        seq.append({"n": n, "log_f": cur, "mean": cur / n, "ratio": cur - prev})
    if not seq:
        raise first_error
    col = estimator
    value = seq[-1][col]
    residual = abs(seq[-1][col] - seq[-2][col]) if len(seq) > 1 else float("nan")
    return PressureEstimate(
        value=value,
        method="brute",
        s=s,
        alphabet=str(B),
        residual=residual,
        converged=True,
        params={"n": seq[-1]["n"], "estimator": estimator, "potential": pspec.describe()},
        sequence=seq,
    )


# ---------------------------------------------------------------------------
# spectral
# ---------------------------------------------------------------------------


def chebyshev_nodes(K: int) -> np.ndarray:
    """Chebyshev-Lobatto points mapped to [0, 1], increasing."""
    k = np.arange(K)
    return 0.5 * (1.0 - np.cos(np.pi * k / (K - 1)))


def _bary_weights(K: int) -> np.ndarray:
    w = (-1.0) ** np.arange(K)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def barycentric_matrix(nodes: np.ndarray, weights: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Rows interpolate node values to the points ``y`` (any shape, last axis added)."""
    y = np.asarray(y, dtype=float)
    diff = y[..., None] - nodes
    exact = diff == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        c = weights / diff
        P = c / c.sum(axis=-1, keepdims=True)
    hit = exact.any(axis=-1)
    if np.any(hit):
        P[hit] = exact[hit].astype(float)
    return P


def linear_matrix(nodes: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Piecewise-linear interpolation rows on an increasing grid; entries >= 0."""
    y = np.asarray(y, dtype=float)
    K = len(nodes)
    idx = np.clip(np.searchsorted(nodes, y, side="right") - 1, 0, K - 2)
    left, right = nodes[idx], nodes[idx + 1]
    t = (y - left) / (right - left)
    P = np.zeros(y.shape + (K,))
    np.put_along_axis(P, idx[..., None], (1.0 - t)[..., None], axis=-1)
    np.put_along_axis(P, (idx + 1)[..., None], t[..., None], axis=-1)
    return P


def _one_step_log_weight(pspec: PotentialSpec, s: float, y: np.ndarray) -> np.ndarray:
    coef = pspec.coefficient(s)
    logy = np.log(y)
    if pspec.h.kind == "logT":
        return 2.0 * (coef + s) * logy
    if coef == 0.0:
        return 2.0 * s * logy
    return -coef * pspec.h(y) + 2.0 * s * logy


def transfer_matrix(pspec: PotentialSpec, s: float, B, nodes: np.ndarray, kind: str = "chebyshev") -> np.ndarray:
    """Collocation matrix of the transfer operator on the given nodes."""
    B = as_alphabet(B)
    K = len(nodes)
    A = np.zeros((K, K))
    digits = np.array(B.digits, dtype=float)
    weights = _bary_weights(K) if kind == "chebyshev" else None
    step = max(1, 2**16 // (K * K))
    for start in range(0, len(digits), step):
        a = digits[start : start + step]
        y = 1.0 / (a[:, None] + nodes[None, :])
        lw = _one_step_log_weight(pspec, s, y)
        P = barycentric_matrix(nodes, weights, y) if kind == "chebyshev" else linear_matrix(nodes, y)
        A += np.einsum("ai,aij->ij", np.exp(lw), P)
    return A


def _power_iteration(A: np.ndarray, tol: float, max_iter: int):
    v = np.ones(A.shape[0])
    lam = 0.0
    residual = float("inf")
    negative = False
    for it in range(1, max_iter + 1):
        u = A @ v
        if np.any(u < 0):
            negative = True
        lam_new = float(np.max(np.abs(u)))
        if lam_new == 0.0:
            return 0.0, 0.0, it, negative, v
        v = u / lam_new
        residual = abs(lam_new - lam) / lam_new
        lam = lam_new
        if residual < tol and it > 2:
            return lam, residual, it, negative, v
    return lam, residual, max_iter, negative, v


def pressure_spectral(
    pspec: PotentialSpec,
    s: float,
    B,
    K: int = 64,
    *,
    tol: float = 1e-12,
    max_iter: int = 100_000,
) -> PressureEstimate:
    """Pressure as ``log`` of the leading eigenvalue of the discretised operator.

    Collocation at ``K`` Chebyshev points with barycentric interpolation,
    then power iteration from the constant function. If an iterate goes
    negative (interpolation overshoot), the operator is rebuilt on a uniform
    grid with piecewise-linear interpolation, which keeps it positive.
    """
    if K < 8:
        raise ValueError("K must be >= 8")
    if s < 0:
        raise ValueError("s must be >= 0")
    B = as_alphabet(B)
    nodes = chebyshev_nodes(K)
    A = transfer_matrix(pspec, s, B, nodes, "chebyshev")
    lam, residual, iters, negative, _ = _power_iteration(A, tol, max_iter)
    method = "spectral"
    grid = K
    if negative:
        logger.info("negative iterate in Chebyshev discretisation; using piecewise-linear grid")
        grid = max(8 * K, 512)
        nodes = np.linspace(0.0, 1.0, grid)
        A = transfer_matrix(pspec, s, B, nodes, "linear")
        lam, residual, iters, _, _ = _power_iteration(A, tol, max_iter)
        method = "spectral-linear"
    converged = residual < tol
    if lam <= 0:
        raise NotConverged("operator has no positive leading eigenvalue")
    return PressureEstimate(
        value=math.log(lam),
        method=method,
        s=s,
        alphabet=str(B),
        residual=residual,
        converged=bool(converged),
        params={"grid": grid, "iterations": iters, "tol": tol, "potential": pspec.describe()},
    )
