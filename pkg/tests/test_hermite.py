import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import hermite_e

from chaosrate.hermite import (
    MAX_ORDER,
    check_order,
    gauss_hermite_nodes,
    gaussian_expectation,
    hermite_coefficients,
    hermite_eval,
)


@pytest.mark.parametrize("q, coeffs", [
    (0, [1]),
    (1, [0, 1]),
    (2, [-1, 0, 1]),
    (3, [0, -3, 0, 1]),
    (4, [3, 0, -6, 0, 1]),
    (6, [-15, 0, 45, 0, -15, 0, 1]),
])
def test_coefficients_low_orders(q, coeffs):
    assert hermite_coefficients(q) == coeffs


@pytest.mark.parametrize("q", range(MAX_ORDER + 1))
def test_recurrence_matches_numpy(q):
    x = np.linspace(-5, 5, 41)
    ref = hermite_e.hermeval(x, [0] * q + [1])
    np.testing.assert_allclose(hermite_eval(q, x), ref, rtol=1e-12, atol=1e-9)


@pytest.mark.parametrize("q", range(MAX_ORDER + 1))
def test_coefficients_match_recurrence(q):
    x = np.linspace(-3, 3, 13)
    poly = np.polynomial.Polynomial(hermite_coefficients(q))
    np.testing.assert_allclose(poly(x), hermite_eval(q, x), rtol=1e-12, atol=1e-9)


def test_scalar_in_scalar_out():
    assert hermite_eval(2, 3.0) == 8.0
    assert isinstance(hermite_eval(3, 1.5), float)


@pytest.mark.parametrize("m, n", [(2, 2), (3, 3), (2, 4), (4, 4), (5, 3), (6, 6)])
def test_orthogonality(m, n):
    val = gaussian_expectation(lambda x: hermite_eval(m, x) * hermite_eval(n, x))
    expected = math.factorial(n) if m == n else 0.0
    assert val == pytest.approx(expected, abs=1e-9)


def test_gauss_hermite_weights_are_a_probability():
    for m in (2, 8, 64, 256):
        _, w = gauss_hermite_nodes(m)
        assert w.sum() == pytest.approx(1.0, abs=1e-13)
        assert np.all(w > 0)


def test_gaussian_moments():
    assert gaussian_expectation(lambda x: x**4) == pytest.approx(3.0, rel=1e-13)
    assert gaussian_expectation(lambda x: x**3) == pytest.approx(0.0, abs=1e-13)
    assert gaussian_expectation(np.cos) == pytest.approx(math.exp(-0.5), rel=1e-13)


@pytest.mark.parametrize("bad", [-1, MAX_ORDER + 1, 2.5, "3"])
def test_order_guard(bad):
    with pytest.raises(ValueError):
        check_order(bad)


def test_order_minimum():
    with pytest.raises(ValueError, match="minimum"):
        check_order(1, minimum=2)


def test_nonfinite_rejected():
    with pytest.raises(ValueError):
        hermite_eval(2, np.array([0.0, np.nan]))


def test_too_few_nodes():
    with pytest.raises(ValueError):
        gauss_hermite_nodes(1)


@settings(max_examples=60, deadline=None)
@given(q=st.integers(0, MAX_ORDER), x=st.floats(-8, 8))
def test_parity(q, x):
    assert hermite_eval(q, -x) == pytest.approx((-1) ** q * hermite_eval(q, x), rel=1e-12, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(q=st.integers(1, MAX_ORDER), x=st.floats(-6, 6))
def test_derivative_identity(q, x):
    # H_q' = q H_{q-1}
    step = 1e-5
    num = (hermite_eval(q, x + step) - hermite_eval(q, x - step)) / (2 * step)
    assert num == pytest.approx(q * hermite_eval(q - 1, x), rel=1e-6, abs=1e-4)
