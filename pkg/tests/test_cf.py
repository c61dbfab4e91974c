import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfdim.cf import (
    DomainError,
    InsufficientDataError,
    anchor,
    convergents,
    cylinder,
    derivative_product,
    expand,
    expand_real,
    gauss_apply,
    last_convergent,
    legendre_check,
    irrationality_exponent_estimate,
)

words = st.lists(st.integers(1, 50), min_size=1, max_size=30).map(tuple)
unit_rationals = st.fractions(min_value=0, max_value=1, max_denominator=10**6).filter(lambda x: x < 1)


@pytest.mark.parametrize("x, digits", [(Fraction(2, 7), (3, 2)), (Fraction(0), ()), (Fraction(5, 8), (1, 1, 1, 2))])
def test_expand_examples(x, digits):
    assert expand(x, 10) == digits


@pytest.mark.parametrize("x", [Fraction(1), Fraction(-1, 3), Fraction(3, 2)])
def test_expand_rejects_outside_unit_interval(x):
    with pytest.raises(DomainError):
        expand(x, 5)


def test_expand_float_only_trusts_supported_digits():
    digits, n = expand_real(0.6180339887498949, 60)
    assert n == len(digits)
    assert 30 < n < 60
    assert set(digits) == {1}


def test_convergents_fibonacci():
    cs = convergents([1, 1, 1, 1, 1])
    assert [c.q for c in cs] == [1, 2, 3, 5, 8]
    assert [c.p for c in cs] == [1, 1, 2, 3, 5]


def test_convergents_final_value():
    assert anchor([3, 2]) == Fraction(2, 7)


@pytest.mark.parametrize("a", [1, 2, 7, 1000])
def test_single_digit_convergent(a):
    (c,) = convergents([a])
    assert (c.p, c.q) == (1, a)
    assert c.p_prev * c.q - c.p * c.q_prev == -1


@pytest.mark.parametrize(
    "w, lo, hi, length",
    [
        ((1,), Fraction(1, 2), Fraction(1), Fraction(1, 2)),
        ((2,), Fraction(1, 3), Fraction(1, 2), Fraction(1, 6)),
        ((1, 1), Fraction(1, 2), Fraction(2, 3), Fraction(1, 6)),
    ],
)
def test_cylinder_examples(w, lo, hi, length):
    c = cylinder(w)
    assert (c.lo, c.hi, c.length) == (lo, hi, length)


def test_cylinder_endpoint_conventions():
    odd = cylinder((1,))
    assert not odd.contains(Fraction(1, 2)) and not odd.contains(1)
    even = cylinder((1, 1))
    assert even.contains(Fraction(1, 2)) and not even.contains(Fraction(2, 3))


def test_empty_word_cylinder_is_unit_interval():
    c = cylinder(())
    assert (c.lo, c.hi) == (0, 1)


@pytest.mark.parametrize("x, y", [(Fraction(2, 7), Fraction(1, 2)), (Fraction(0), Fraction(0)), (Fraction(1, 3), Fraction(0))])
def test_gauss_apply_examples(x, y):
    assert gauss_apply(x) == y


def test_derivative_product_examples():
    assert derivative_product([1, 1, 1, 1, 1]) == pytest.approx(2 * math.log(8), abs=1e-15)
    for a in (1, 3, 99):
        assert derivative_product([a]) == pytest.approx(2 * math.log(a), abs=1e-15)


def test_derivative_product_at_interior_point():
    # |(T^n)'(x)| = (x q_{n-1} - p_{n-1})^-2; at x = p_n/q_n this is q_n^2
    w = (2, 5, 1, 3)
    assert derivative_product(w, anchor(w)) == pytest.approx(derivative_product(w), rel=1e-14)


def test_legendre_examples():
    assert legendre_check(0.6180339887, 5, 8)
    assert (5, 8) == tuple(convergents(expand(0.6180339887, 5))[4][:2])
    assert legendre_check(Fraction(1, 2), 1, 2)
    assert not legendre_check(0.5, 1, 3)


def test_irrationality_exponent_examples():
    assert 2.0 <= irrationality_exponent_estimate([1] * 20) <= 2.2
    big = [1, 1, 1, 1, 10**6, 1, 1]
    assert irrationality_exponent_estimate(big) >= 2 + 6 * math.log(10) / math.log(5) - 1e-12
    assert irrationality_exponent_estimate([2, 2, 2]) >= 2
    with pytest.raises(InsufficientDataError):
        irrationality_exponent_estimate([1, 2])


@given(words)
def test_determinant_identity(w):
    for n, c in enumerate(convergents(w), start=1):
        assert c.p_prev * c.q - c.p * c.q_prev == (-1) ** n


@given(words)
def test_cylinder_length_identity(w):
    c = last_convergent(w)
    assert cylinder(w).length == Fraction(1, c.q * (c.q + c.q_prev))


@given(words, words)
def test_concatenation_bounds(u, v):
    qu, qv, quv = last_convergent(u).q, last_convergent(v).q, last_convergent(u + v).q
    assert qu * qv <= quv <= 2 * qu * qv


@given(words.filter(lambda w: w != (1,)))
def test_expand_inverts_anchor(w):
    x = anchor(w)
    digits = expand(x, len(w) + 1)
    assert anchor(digits) == x


@given(words, st.integers(1, 20))
def test_cylinders_nest(w, a):
    assert cylinder(w).contains_interval(cylinder(w + (a,)))


@given(words)
def test_anchor_lies_in_its_cylinder(w):
    c = cylinder(w)
    x = anchor(w)
    assert c.lo <= x <= c.hi
    if x < 1:
        assert c.contains(x)


@settings(max_examples=300)
@given(unit_rationals, st.integers(1, 2000))
def test_legendre_positive_cases_are_convergents(x, q):
    p = round(x * q)
    if legendre_check(x, p, q):
        target = Fraction(p, q)
        fracs = {Fraction(c.p, c.q) for c in convergents(expand(x, 200))} | {Fraction(0)}
        assert target in fracs
