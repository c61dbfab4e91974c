import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cfdim.growth import g, g_closed_form, g_closed_form_literal, g_recursive

S = st.floats(0.01, 1.0)
R = st.integers(1, 12)


def test_recursive_examples():
    assert g_recursive(1, 0.7) == pytest.approx(0.7, abs=1e-15)
    assert g_recursive(2, 0.7) == pytest.approx(0.49, abs=1e-15)
    assert g_recursive(3, 0.7) == pytest.approx(0.4341772151898734, abs=1e-15)


def test_closed_form_examples():
    for r in range(1, 13):
        assert g_closed_form(r, 1.0) == pytest.approx(1.0, abs=1e-15)
    assert g_closed_form(2, 0.5) == pytest.approx(0.25, abs=1e-15)
    assert g_closed_form(3, 0.7) == pytest.approx(0.343 * 0.4 / (0.343 - 0.027), abs=1e-15)


@pytest.mark.parametrize("r", range(1, 13))
def test_half_limit(r):
    assert g_closed_form(r, 0.5) == pytest.approx(1 / (2 * r), abs=1e-15)
    assert g_recursive(r, 0.5) == pytest.approx(1 / (2 * r), abs=1e-15)


def test_literal_form_loses_accuracy_near_half():
    # the textbook formula is 0/0 at s = 1/2; the stable one is not
    s = 0.5 + 1e-9
    assert abs(g_closed_form(6, s) - g_recursive(6, s)) < 1e-15
    assert abs(g_closed_form_literal(6, s) - g_recursive(6, s)) > 1e-12
    assert g_closed_form_literal(6, 0.5) == pytest.approx(1 / 12, abs=1e-15)


@pytest.mark.parametrize("s", [0.0, -0.1, 1.5, float("nan")])
def test_domain(s):
    with pytest.raises(ValueError):
        g_recursive(2, s)
    with pytest.raises(ValueError):
        g_closed_form(2, s)


def test_bad_r():
    with pytest.raises(ValueError):
        g_recursive(0, 0.5)


def test_extended_domain_for_solvers():
    assert g(2, 0.0) == 0.0
    assert g(2, 1.5) == pytest.approx(1.5**2, abs=1e-14)


@given(R, S)
def test_forms_agree(r, s):
    assert g_recursive(r, s) == pytest.approx(g_closed_form(r, s), abs=1e-12)


@given(R, S)
def test_bounded_by_s(r, s):
    v = g_recursive(r, s)
    assert 0 < v <= s + 1e-15


@given(st.integers(1, 11), S)
def test_decreasing_in_r(r, s):
    assert g_recursive(r + 1, s) <= g_recursive(r, s) + 1e-15


def test_vectorised():
    s = np.linspace(0.05, 1, 50)
    assert np.allclose(g_recursive(3, s), [g_recursive(3, float(v)) for v in s], atol=0, rtol=0)
