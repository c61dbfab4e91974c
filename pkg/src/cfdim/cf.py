"""Exact continued-fraction arithmetic on the Gauss system [0, 1).

Words are plain tuples of positive ints. All interval geometry is done with
:class:`fractions.Fraction` so nothing overflows; floats only show up in
log-domain quantities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, NamedTuple, Sequence

Word = tuple  # tuple[int, ...]; digits >= 1, may be empty


class DomainError(ValueError):
    """Raised when a point lies outside the Gauss system domain [0, 1)."""


class InsufficientDataError(ValueError):
    pass


def as_word(digits: Iterable[int]) -> tuple[int, ...]:
    """Validate ``digits`` and return them as a word (tuple of ints)."""
    w = tuple(int(a) for a in digits)
    for a in w:
        if a < 1:
            raise ValueError(f"partial quotients must be >= 1, got {a}")
    return w


class ConvergentPair(NamedTuple):
    p: int
    q: int
    p_prev: int
    q_prev: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.p, self.q)


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def _check_domain(x) -> None:
    if not 0 <= x < 1:
        raise DomainError(f"x = {x} is outside [0, 1)")


def gauss_apply(x) -> Fraction:
    """One step of the Gauss map ``T(x) = 1/x - floor(1/x)``, ``T(0) = 0``."""
    x = _to_fraction(x)
    _check_domain(x)
    if x == 0:
        return Fraction(0)
    inv = 1 / x
    return inv - (inv.numerator // inv.denominator)


def _expand_exact(x: Fraction, n_max: int) -> list[int]:
    digits = []
    num, den = x.numerator, x.denominator
    while num and len(digits) < n_max:
        a, rem = divmod(den, num)
        digits.append(a)
        num, den = rem, num
    return digits


def expand_real(x: float, n_max: int) -> tuple[tuple[int, ...], int]:
    """Expand a float and report how many digits survive its rounding.

    The float stands for every real within half an ulp of it; a digit is
    trusted only if both ends of that interval share it.

    Returns
    -------
    digits : tuple of int
        The trusted digits (at most ``n_max``).
    n_trusted : int
        ``len(digits)``, kept separate for clarity at call sites.
    """
    _check_domain(x)
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    centre = Fraction(x)
    if centre == 0:
        return (), 0
    half_ulp = Fraction(math.ulp(x)) / 2
    lo = _expand_exact(max(centre - half_ulp, Fraction(0)), n_max + 1)
    hi = _expand_exact(min(centre + half_ulp, Fraction(1, 1) - Fraction(1, 2**60)), n_max + 1)
    k = 0
    while k < min(len(lo), len(hi)) and lo[k] == hi[k]:
        k += 1
    # a shared final digit of a terminating side is a boundary artefact
    if k and (k == len(lo) or k == len(hi)):
        k -= 1
    trusted = lo[: min(k, n_max)]
    return tuple(trusted), len(trusted)


def expand(x, n_max: int) -> tuple[int, ...]:
    """Partial quotients of ``x`` by iterating the Gauss map.

    Exact for rationals (the expansion terminates and is canonical). For a
    float only the digits its precision supports are returned; see
    :func:`expand_real` for the trusted count.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    if isinstance(x, float):
        return expand_real(x, n_max)[0]
    x = _to_fraction(x)
    _check_domain(x)
    return tuple(_expand_exact(x, n_max))


def convergents(w: Sequence[int]) -> list[ConvergentPair]:
    """Convergent data ``(p_k, q_k, p_{k-1}, q_{k-1})`` for k = 1..n."""
    w = as_word(w)
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    out = []
    for a in w:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        out.append(ConvergentPair(p, q, p_prev, q_prev))
    return out


def last_convergent(w: Sequence[int]) -> ConvergentPair:
    """Final convergent pair; for the empty word this is (0, 1, 1, 0)."""
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    for a in w:
        if a < 1:
            raise ValueError(f"partial quotients must be >= 1, got {a}")
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
    return ConvergentPair(p, q, p_prev, q_prev)


def anchor(w: Sequence[int]) -> Fraction:
    """The rational point ``p_n/q_n = [a_1, ..., a_n]`` inside the cylinder of ``w``."""
    c = last_convergent(w)
    return Fraction(c.p, c.q)


@dataclass(frozen=True)
class Cylinder:
    """Basic cylinder of a word, with exact endpoints.

    Odd order intervals are closed on the right, even order ones on the
    left. The point 1 (right end of ``I_1(1)``) is never in the domain, so
    :meth:`contains` rejects it regardless of the flag.
    """

    word: tuple[int, ...]
    lo: Fraction
    hi: Fraction
    lo_closed: bool
    hi_closed: bool
    p: int
    q: int
    p_prev: int
    q_prev: int

    @property
    def order(self) -> int:
        return len(self.word)

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        x = _to_fraction(x)
        if not 0 <= x < 1:
            return False
        above = x >= self.lo if self.lo_closed else x > self.lo
        below = x <= self.hi if self.hi_closed else x < self.hi
        return above and below

    def contains_interval(self, other: "Cylinder") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi


def cylinder(w: Sequence[int]) -> Cylinder:
    """Exact cylinder ``I_n(a_1..a_n)``; the empty word gives [0, 1)."""
    w = as_word(w)
    if not w:
        return Cylinder((), Fraction(0), Fraction(1), True, False, 0, 1, 1, 0)
    c = last_convergent(w)
    a = Fraction(c.p, c.q)
    b = Fraction(c.p + c.p_prev, c.q + c.q_prev)
    if len(w) % 2 == 0:
        return Cylinder(w, a, b, True, False, *c)
    return Cylinder(w, b, a, False, True, *c)


def derivative_product(w: Sequence[int], x=None) -> float:
    """``log prod_{k<n} |T'(T^k x)|`` for ``x`` in the cylinder of ``w``.

    With ``x`` omitted the anchor ``p_n/q_n`` is used, where the value is
    exactly ``2 log q_n``. Otherwise ``|(T^n)'(x)| = (x q_{n-1} - p_{n-1})^-2``.
    """
    w = as_word(w)
    if not w:
        raise ValueError("derivative_product needs a nonempty word")
    c = last_convergent(w)
    if x is None:
        return 2.0 * _log_int(c.q)
    if isinstance(x, float):
        d = abs(x * c.q_prev - c.p_prev)
        return -2.0 * math.log(d)
    x = _to_fraction(x)
    d = abs(x * c.q_prev - c.p_prev)
    return -2.0 * (_log_int(d.numerator) - _log_int(d.denominator))


def _log_int(n: int) -> float:
    """Natural log of a positive int of any size."""
    if n < 1:
        raise ValueError("log of non-positive integer")
    bits = n.bit_length()
    if bits < 1000:
        return math.log(n)
    shift = bits - 60
    return math.log(n >> shift) + shift * math.log(2.0)


def log_q(w: Sequence[int]) -> float:
    return _log_int(last_convergent(w).q)


def legendre_check(x, p: int, q: int) -> bool:
    """True iff ``|x - p/q| < 1/(2 q^2)``."""
    if q < 1:
        raise ValueError("q must be >= 1")
    if isinstance(x, float):
        return abs(x - p / q) < 1.0 / (2.0 * q * q)
    x = _to_fraction(x)
    return abs(x - Fraction(p, q)) < Fraction(1, 2 * q * q)


def irrationality_exponent_estimate(w: Sequence[int]) -> float:
    """Finite-depth lower estimate ``2 + max_n log a_{n+1} / log q_n``.

    This is not the limsup defining the exponent, only what the supplied
    digits show. Depths with ``q_n = 1`` carry no information and are skipped.
    """
    w = as_word(w)
    if len(w) < 3:
        raise InsufficientDataError("need at least 3 partial quotients")
    best = 0.0
    for k, c in enumerate(convergents(w[:-1])):
        if c.q > 1:
            best = max(best, math.log(w[k + 1]) / _log_int(c.q))
    return 2.0 + best
