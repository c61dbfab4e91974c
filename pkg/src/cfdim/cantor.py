"""Sampling the lower-bound Cantor construction for ``R_r(tau)``.

Digit layout of level ``j`` (1-based positions, ``L_j = n_j + r - 1``)::

    L_{j-1}+1 .. L_{j-1}+t_j      copy of the first t_j digits of the word
    L_{j-1}+t_j+1 .. n_j-1        m_j free digits in 1..M
    n_j .. n_j+r-1                r window digits

The block ``w[L_{j-1} : n_j-1]`` (length ``l_j = t_j + m_j``) has rational
anchor ``z_j`` and level exponent ``E_j = tau(z_j) S_{l_j} h(z_j)``. Window
``i < r-1`` is ``[gamma_i^E, 2 gamma_i^E)`` and the last window is
``[(e/prod gamma)^E, 2 (e/prod gamma)^E)``, so the product of the lower ends
is ``e^E``.
"""

from __future__ import annotations

import csv
import itertools
import logging
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import mpmath
import numpy as np

from .cf import DomainError, _log_int, anchor, as_word, cylinder, expand, last_convergent
from .dimension import bisect_decreasing
from .growth import g
from .potential import PotentialSpec, ergodic_sum

logger = logging.getLogger(__name__)

MEMBERSHIP_SLACK = 1e-12


class ConstructionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# schedule and ladder
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Schedule:
    """Index sequences of the construction; lists are indexed by level ``j``.

    ``t[0]`` and ``m[0]``, ``l[0]`` are unused placeholders so that ``t[j]``
    reads naturally; ``n[0] = n0``.
    """

    r: int
    t0: int
    J: int
    M: int
    n0: int
    t: tuple
    m: tuple
    n: tuple

    @property
    def l(self) -> tuple:
        return (0,) + tuple(self.t[j] + self.m[j] for j in range(1, self.J + 1))

    def level_end(self, j: int) -> int:
        """``L_j = n_j + r - 1``, the length of the word after level ``j``."""
        return self.n[j] + self.r - 1

    @property
    def length(self) -> int:
        return self.level_end(self.J)

    def position(self, p: int) -> tuple[str, int, int]:
        """Role of the 1-based position ``p``: ``(kind, level, offset)``.

        ``kind`` is ``"base"`` (level 0), ``"copy"``, ``"free"`` or
        ``"window"``; for windows ``offset`` is the window index ``i``.
        """
        if p < 1 or p > self.length:
            raise IndexError(f"position {p} outside 1..{self.length}")
        if p <= self.level_end(0):
            return "base", 0, p - 1
        for j in range(1, self.J + 1):
            start = self.level_end(j - 1)
            if p <= self.level_end(j):
                k = p - start
                if k <= self.t[j]:
                    return "copy", j, k - 1
                if p < self.n[j]:
                    return "free", j, p - start - self.t[j] - 1
                return "window", j, p - self.n[j]
        raise AssertionError("unreachable")

    def construction_indices(self) -> list[tuple[int, int]]:
        """``(n_j - 1, L_{j-1})`` pairs: membership index and its block start."""
        return [(self.n[j] - 1, self.level_end(j - 1)) for j in range(1, self.J + 1)]


def _m_values(m_rule, J: int) -> list[int]:
    if m_rule is None:
        return [4 * j for j in range(1, J + 1)]
    if callable(m_rule):
        return [int(m_rule(j)) for j in range(1, J + 1)]
    vals = [int(v) for v in m_rule]
    if len(vals) < J:
        raise ValueError(f"m_rule lists {len(vals)} values, need J = {J}")
    return vals[:J]


def build_schedule(
    r: int,
    t0: int,
    m_rule: Union[Callable[[int], int], Sequence[int], None],
    J: int,
    M: int,
    n0: Optional[int] = None,
) -> Schedule:
    """Materialise ``t_j = t0 + j``, ``m_j``, ``n_j`` and ``l_j = t_j + m_j``.

    Parameters
    ----------
    m_rule : callable, sequence or None
        ``j -> m_j`` or the explicit values ``m_1..m_J``; strictly increasing
        and at least 1. ``None`` means ``m_j = 4j``.
    n0 : int, optional
        Level-0 length parameter; needs ``n0 + r - 1 >= t_2``. Defaults to
        the smallest value allowed.
    """
    if int(r) != r or r < 1:
        raise ValueError("r must be a positive integer")
    if J < 1:
        raise ValueError("J must be >= 1")
    if M < 1:
        raise ValueError("M must be >= 1")
    if t0 < 0:
        raise ValueError("t0 must be >= 0")
    m = _m_values(m_rule, J)
    if any(v < 1 for v in m):
        raise ValueError("every m_j must be >= 1")
    if any(b <= a for a, b in zip(m, m[1:])):
        raise ValueError(f"m_j must be strictly increasing, got {m}")
    t = [t0 + j for j in range(1, J + 1)]
    need = max(1, t0 + 2 - (r - 1))
    if n0 is None:
        n0 = need
    elif n0 < 1 or n0 + r - 1 < t0 + 2:
        raise ValueError(f"n0 + r - 1 must be >= t_2 = {t0 + 2}")
    n = [n0]
    for j in range(J):
        n.append(n[-1] + (r - 1) + t[j] + m[j] + 1)
    return Schedule(int(r), t0, J, M, n0, (0, *t), (0, *m), tuple(n))


@dataclass(frozen=True)
class GammaLadder:
    """``log gamma_i = g_r(s) (1-s)^i / s^(i+1)`` for ``i = 0..r-2``."""

    r: int
    s: float
    log_gammas: tuple

    @property
    def gammas(self) -> tuple:
        return tuple(math.exp(v) for v in self.log_gammas)

    @property
    def window_logs(self) -> tuple:
        """Log-bases of the r windows; the last one is ``log(e / prod gamma)``."""
        return self.log_gammas + (1.0 - math.fsum(self.log_gammas),)

    def telescoping_residual(self) -> float:
        """``(1-s) log prod gamma - s + g_r(s)``, zero in exact arithmetic.

        For r = 1 the ladder is empty and the identity reads ``-s = -g_1(s)``.
        """
        total = math.fsum(self.log_gammas)
        return (1.0 - self.s) * total - self.s + g(self.r, self.s)


def gamma_ladder(r: int, s: float) -> GammaLadder:
    """The ladder for exponent ``s`` in (1/2, 1).

    With these logs the ladder is non-increasing (``log gamma_{i+1} /
    log gamma_i = (1-s)/s < 1``) and lies in ``[1, e]``.
    """
    if int(r) != r or r < 1:
        raise ValueError("r must be a positive integer")
    if not 0.5 < s < 1.0:
        raise DomainError(f"ladder needs s in (1/2, 1), got {s}")
    gr = g(r, s)
    logs = tuple(gr * (1.0 - s) ** i / s ** (i + 1) for i in range(r - 1))
    return GammaLadder(int(r), float(s), logs)


# ---------------------------------------------------------------------------
# the construction
# ---------------------------------------------------------------------------


def _window_bounds(x: float) -> tuple[int, int]:
    """``(ceil(e^x), ceil(2 e^x))``, exact integers even for large ``x``."""
    if x <= 0:
        return 1, 2
    with mpmath.workdps(int(x / 2.3) + 30):
        v = mpmath.exp(mpmath.mpf(x))
        return int(mpmath.ceil(v)), int(mpmath.ceil(2 * v))


@dataclass(frozen=True)
class Window:
    lo: int
    hi: int  # exclusive
    log_base: float
    widened: bool = False

    @property
    def count(self) -> int:
        return self.hi - self.lo


@dataclass
class LevelRecord:
    j: int
    block_start: int
    anchor: Fraction
    tau_at_anchor: float
    sum_h: float
    E: float
    windows: list


@dataclass
class SampledPoint:
    seed: int
    word: tuple
    levels: list
    widened: int

    @property
    def value(self) -> Fraction:
        return anchor(self.word)

    @property
    def depth(self) -> int:
        return len(self.levels)


def base_digits(pspec: PotentialSpec, length: int) -> tuple[int, ...]:
    """Digits of a point ``z_0`` near where ``tau`` attains its minimum.

    Expands the best rational approximation of the grid argmin with
    denominator at most the grid size, then one large digit and 1s. Argmins at the ends of [0, 1] become a large
    leading digit so ``z_0`` stays within one grid cell. A constant ``tau``
    is minimal everywhere and gets all 1s.
    """
    if pspec.tau.constant_value is not None:
        return (1,) * length
    x = pspec.tau_argmin
    big = max(2, pspec.tau_grid)
    if x <= 1.0 / big:
        digits = (big,)
    elif x >= 1.0 - 1.0 / big:
        digits = (1, big)
    else:
        # best rational at grid resolution, then a large digit to pin the tail
        digits = expand(Fraction(x).limit_denominator(big), length) + (big,)
    digits = tuple(digits[:length])
    return digits + (1,) * (length - len(digits))


class Construction:
    """Schedule, ladder and potential bundled with cached level data."""

    def __init__(self, schedule: Schedule, ladder: Optional[GammaLadder], pspec: PotentialSpec):
        if ladder is not None and ladder.r != schedule.r:
            raise ValueError("ladder and schedule disagree on r")
        if pspec.r != schedule.r:
            raise ValueError("potential and schedule disagree on r")
        if ladder is None:
            if schedule.r != 1:
                raise ValueError("r >= 2 needs a gamma ladder")
            ladder = GammaLadder(1, float("nan"), ())
        self.schedule = schedule
        self.ladder = ladder
        self.pspec = pspec
        self.base = base_digits(pspec, schedule.level_end(0))
        self._cache: dict = {}

    def level_exponent(self, block: tuple) -> tuple[Fraction, float, float, float]:
        """``(z, tau(z), S_l h(z), E)`` for a block word."""
        hit = self._cache.get(block)
        if hit is None:
            z = anchor(block)
            tz = float(self.pspec.tau(np.array(float(z))))
            sh = ergodic_sum(self.pspec.h, block)
            hit = (z, tz, sh, tz * sh)
            self._cache[block] = hit
        return hit

    def windows(self, E: float) -> list[Window]:
        out = []
        for lb in self.ladder.window_logs:
            lo, hi = _window_bounds(E * lb)
            widened = False
            if hi <= lo:
                hi = lo + 1
                widened = True
            out.append(Window(lo, hi, lb, widened))
        return out

    def block_of(self, word: Sequence[int], j: int) -> tuple:
        sch = self.schedule
        return tuple(word[sch.level_end(j - 1) : sch.n[j] - 1])

    def next_range(self, prefix: Sequence[int]) -> tuple[int, int, str]:
        """Admissible range ``[lo, hi)`` of the digit after ``prefix``, with its role."""
        sch = self.schedule
        p = len(prefix) + 1
        kind, j, off = sch.position(p)
        if kind == "base":
            d = self.base[off]
            return d, d + 1, kind
        if kind == "copy":
            d = prefix[off]
            return d, d + 1, kind
        if kind == "free":
            return 1, sch.M + 1, kind
        block = self.block_of(prefix, j)
        E = self.level_exponent(block)[3]
        win = self.windows(E)[off]
        return win.lo, win.hi, kind

    def is_admissible(self, word: Sequence[int]) -> bool:
        for k in range(len(word)):
            lo, hi, _ = self.next_range(word[:k])
            if not lo <= word[k] < hi:
                return False
        return True

    # -- sampling ----------------------------------------------------------

    def generate(self, seed: int) -> SampledPoint:
        sch = self.schedule
        ss = np.random.SeedSequence(int(seed))
        rng = random.Random(int.from_bytes(ss.generate_state(4, dtype=np.uint64).tobytes(), "little"))
        word = list(self.base)
        levels = []
        widened = 0
        for j in range(1, sch.J + 1):
            start = sch.level_end(j - 1)
            word.extend(word[: sch.t[j]])
            word.extend(rng.randint(1, sch.M) for _ in range(sch.m[j]))
            block = tuple(word[start:])
            z, tz, sh, E = self.level_exponent(block)
            wins = self.windows(E)
            for w in wins:
                widened += w.widened
                word.append(rng.randrange(w.lo, w.hi))
            levels.append(LevelRecord(j, start, z, tz, sh, E, wins))
        if widened:
            logger.warning("widened %d empty digit windows", widened)
        return SampledPoint(int(seed), tuple(word), levels, widened)


def _construction(schedule, ladder, pspec) -> Construction:
    if isinstance(schedule, Construction):
        return schedule
    return Construction(schedule, ladder, pspec)


def generate_point(schedule: Schedule, ladder: Optional[GammaLadder], pspec: PotentialSpec, seed: int) -> SampledPoint:
    """One admissible word of length ``n_J + r - 1``, deterministic in ``seed``.

    Free digits are uniform on 1..M and window digits uniform on their
    windows. The returned point's exact value is the anchor of the word.
    """
    return _construction(schedule, ladder, pspec).generate(seed)


def generate_points(construction: Construction, count: int, seed: int = 0) -> list[SampledPoint]:
    """``count`` points with seeds ``seed, seed+1, ...``."""
    return [construction.generate(seed + i) for i in range(count)]


# ---------------------------------------------------------------------------
# membership
# ---------------------------------------------------------------------------


def membership_margin(w: Sequence[int], pspec: PotentialSpec, n: int, r: int, start: int = 0) -> float:
    """``log(a_{n+1}...a_{n+r}) - tau(z) S h(z)`` with ``z`` the anchor of ``w[start:n]``."""
    w = as_word(w)
    if n < 1 or not 0 <= start < n:
        raise ValueError("need 0 <= start < n and n >= 1")
    if len(w) < n + r:
        raise ValueError(f"word of length {len(w)} is too short for n = {n}, r = {r}")
    block = w[start:n]
    tz = float(pspec.tau(np.array(float(anchor(block)))))
    threshold = tz * ergodic_sum(pspec.h, block) if tz != 0.0 else 0.0
    lhs = math.fsum(_log_int(a) for a in w[n : n + r])
    return lhs - threshold


def membership_check(w: Sequence[int], pspec: PotentialSpec, n: int, r: int, start: int = 0) -> bool:
    """Whether ``a_{n+1}(w) ... a_{n+r}(w) >= e^{tau(z) S h(z)}``.

    With ``start = 0`` this is the set's defining inequality at the anchor
    of the length-``n`` prefix. The construction controls the level sums
    over its blocks, so construction checks pass ``start = L_{j-1}`` and
    ``n = n_j - 1``. Comparison is in logs with a relative slack of 1e-12.
    """
    margin = membership_margin(w, pspec, n, r, start)
    if margin >= 0:
        return True
    w = as_word(w)
    scale = max(1.0, math.fsum(_log_int(a) for a in w[n : n + r]))
    return margin >= -MEMBERSHIP_SLACK * scale


def check_construction_membership(construction: Construction, point: SampledPoint) -> list[bool]:
    """Membership at every construction index ``n_j - 1`` over the level block."""
    r = construction.schedule.r
    return [
        membership_check(point.word, construction.pspec, n, r, start=start)
        for n, start in construction.schedule.construction_indices()
    ]


# ---------------------------------------------------------------------------
# measure
# ---------------------------------------------------------------------------


@dataclass
class MeasureNode:
    word: tuple
    weight: float
    nominal: float
    case: str
    parent: int
    children: list = field(default_factory=list)


@dataclass
class MeasureTree:
    """Weights of every admissible cylinder down to ``n_J + r - 1``.

    ``weight`` splits window levels uniformly over the integers in the
    window, so children always sum to their parent. ``nominal`` carries the
    closed-form factors ``gamma_i^{-E}`` and ``(prod gamma / e)^E``, which
    only approximate ``1/count``.
    """

    nodes: list
    level_exponents: list

    def consistency_error(self) -> float:
        worst = 0.0
        for node in self.nodes:
            if node.children:
                tot = math.fsum(self.nodes[c].weight for c in node.children)
                worst = max(worst, abs(tot - node.weight))
        return worst

    def leaves(self) -> list:
        return [n for n in self.nodes if not n.children]


def level_exponent_root(E: np.ndarray, logq: np.ndarray, r: int) -> tuple[float, bool]:
    """Root ``s_j`` of ``sum exp(-g_r(s) E - 2 s log q) = 1`` on [0, 1]."""
    E = np.asarray(E, dtype=float)
    logq = np.asarray(logq, dtype=float)

    def obj(s):
        v = -g(r, s) * E - 2.0 * s * logq
        mx = v.max()
        return float(mx + math.log(np.exp(v - mx).sum()))

    if obj(1.0) > 0:
        raise ConstructionError("level normalisation has no root in (0, 1]")
    lo, hi, deg, _ = bisect_decreasing(obj, 0.0, 1.0, 1e-13)
    return (lo if deg else 0.5 * (lo + hi)), deg


def assign_measure(construction: Construction, max_nodes: int = 500_000) -> MeasureTree:
    """Build the full measure tree; only feasible for small ``M`` and ``m_j``."""
    sch = construction.schedule
    ladder = construction.ladder
    nodes = [MeasureNode((), 1.0, 1.0, "root", -1)]
    level_info = []

    def add(word, weight, nominal, case, parent):
        if len(nodes) >= max_nodes:
            raise ConstructionError(f"measure tree exceeds {max_nodes} nodes")
        nodes.append(MeasureNode(tuple(word), weight, nominal, case, parent))
        idx = len(nodes) - 1
        nodes[parent].children.append(idx)
        return idx

    # level 0: a single chain
    cur = 0
    for k in range(1, sch.level_end(0) + 1):
        cur = add(construction.base[:k], 1.0, 1.0, "base", cur)
    frontier = [cur]

    for j in range(1, sch.J + 1):
        nxt = []
        for parent in frontier:
            pw = nodes[parent].word
            node = parent
            for k in range(sch.t[j]):
                node = add(pw + pw[: k + 1], nodes[parent].weight, nodes[parent].nominal, "copy", node)
            copied = nodes[node].word
            blocks = list(itertools.product(range(1, sch.M + 1), repeat=sch.m[j]))
            start = sch.level_end(j - 1)
            data = [construction.level_exponent(tuple(copied[start:]) + b) for b in blocks]
            E = np.array([d[3] for d in data])
            logq = np.array([_log_int(last_convergent(tuple(copied[start:]) + b).q) for b in blocks])
            s_j, _ = level_exponent_root(E, logq, sch.r)
            logw = -g(sch.r, s_j) * E - 2.0 * s_j * logq
            raw = np.exp(logw)
            share = raw / raw.sum()
            level_info.append({"j": j, "s_j": s_j, "blocks": len(blocks), "normaliser": float(raw.sum())})
            base_w, base_nom = nodes[node].weight, nodes[node].nominal
            # free digits: a trie whose internal weights are sums of block weights
            trie = {(): node}
            for b, sh, rw in zip(blocks, share, raw):
                for k in range(1, len(b)):
                    key = b[:k]
                    if key not in trie:
                        trie[key] = add(copied + key, 0.0, 0.0, "free", trie[key[:-1]])
                    nodes[trie[key]].weight += base_w * sh
                    nodes[trie[key]].nominal += base_nom * rw
                leaf = add(copied + b, base_w * sh, base_nom * rw, "block", trie[b[:-1]])
                trie[b] = leaf
                E_b = construction.level_exponent(tuple(copied[start:]) + b)[3]
                wins = construction.windows(E_b)
                layer = [leaf]
                for i, win in enumerate(wins):
                    case = "final" if i == len(wins) - 1 else f"window{i}"
                    factor = math.exp(-E_b * win.log_base)
                    new_layer = []
                    for par in layer:
                        pw2 = nodes[par].word
                        for a in range(win.lo, win.hi):
                            new_layer.append(
                                add(pw2 + (a,), nodes[par].weight / win.count, nodes[par].nominal * factor, case, par)
                            )
                    layer = new_layer
                nxt.extend(layer)
        frontier = nxt
    return MeasureTree(nodes, level_info)


# ---------------------------------------------------------------------------
# fundamental cylinders and gaps
# ---------------------------------------------------------------------------

_CASE_OF_KIND = {"base": "3e", "copy": "3e", "free": "3a"}


@dataclass(frozen=True)
class FundamentalCylinder:
    """``J_n``: the union of admissible children of ``I_n(word)``.

    ``lo``/``hi`` bound its convex hull; ``next_range`` is the admissible
    ``[lo, hi)`` range of the next digit.
    """

    word: tuple
    case: str
    next_range: tuple
    lo: Fraction
    hi: Fraction


def fundamental_cylinder(construction: Construction, word: Sequence[int]) -> FundamentalCylinder:
    word = as_word(word)
    sch = construction.schedule
    lo_d, hi_d, kind = construction.next_range(word)
    if kind == "window":
        _, j, off = sch.position(len(word) + 1)
        if off == 0:
            case = "3b"
        elif off == sch.r - 1:
            case = "3d"
        else:
            case = "3c"
    else:
        case = _CASE_OF_KIND[kind]
    c = last_convergent(word)
    ends = [Fraction(a * c.p + c.p_prev, a * c.q + c.q_prev) for a in (lo_d, hi_d)]
    return FundamentalCylinder(word, case, (lo_d, hi_d), min(ends), max(ends))


@dataclass(frozen=True)
class GapRecord:
    n: int
    kind: str
    gap: Fraction
    bound: Fraction

    @property
    def ok(self) -> bool:
        return self.gap >= self.bound


def _hull_distance(a: FundamentalCylinder, b: FundamentalCylinder) -> Fraction:
    return max(b.lo - a.hi, a.lo - b.hi, Fraction(0))


def gap_checks(construction: Construction, word: Sequence[int]) -> list[GapRecord]:
    """Exact gaps between ``J_n(word)`` and ``J_n`` of the successor ``a_n + 1``.

    Gap I covers ``L_{j-1} + t_j < n < n_j - 1`` (bound ``|I_n|/(3M)``);
    Gap II covers ``n = n_j + i - 1`` for ``0 <= i <= r-2`` and Gap III
    ``n = n_j + r - 2`` (bound ``|I_n|/8``). Positions whose successor
    digit is not admissible are skipped.
    """
    word = as_word(word)
    sch = construction.schedule
    out = []
    for j in range(1, sch.J + 1):
        start = sch.level_end(j - 1)
        spots = [(n, "I") for n in range(start + sch.t[j] + 1, sch.n[j] - 1)]
        spots += [(sch.n[j] + i - 1, "II") for i in range(sch.r - 1)]
        spots.append((sch.n[j] + sch.r - 2, "III"))
        for n, kind in spots:
            if n + 1 > len(word):
                continue
            prefix = word[:n]
            lo, hi, _ = construction.next_range(prefix[:-1])
            succ = prefix[:-1] + (prefix[-1] + 1,)
            if not lo <= succ[-1] < hi:
                continue
            here = fundamental_cylinder(construction, prefix)
            there = fundamental_cylinder(construction, succ)
            length = cylinder(prefix).length
            bound = length / (3 * sch.M) if kind == "I" else length / 8
            out.append(GapRecord(n, kind, _hull_distance(here, there), bound))
    return out


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

POINT_COLUMNS = ("seed", "depth", "numerator", "denominator", "float64_value")


def write_points_csv(path, points: Sequence[SampledPoint]) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(POINT_COLUMNS)
        for p in points:
            v = p.value
            wr.writerow([p.seed, p.depth, v.numerator, v.denominator, repr(float(v))])


def read_points_csv(path, exact: bool = False):
    """Point values of a points CSV.

    Returns the ``float64_value`` column as an array, or with ``exact=True``
    a list of Fractions from ``numerator`` / ``denominator`` when present.
    """
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        cols = rd.fieldnames or []
        if exact and "numerator" in cols and "denominator" in cols:
            return [Fraction(int(row["numerator"]), int(row["denominator"])) for row in rd]
        if "float64_value" not in cols:
            raise ValueError(f"{path}: missing float64_value column")
        return np.array([float(row["float64_value"]) for row in rd])
