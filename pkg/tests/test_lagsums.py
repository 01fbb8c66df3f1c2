import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import toeplitz

from chaosrate import lagsums


def _brute_triangle(c):
    n = len(c)
    T = toeplitz(c)
    return sum(T[k, l] * T[k, j] * T[l, j] for j, k, l in itertools.product(range(n), repeat=3))


def _brute_k4(a, b, c):
    A, B, C = toeplitz(a), toeplitz(b), toeplitz(c)
    n = len(a)
    total = 0.0
    for i, j, k, l in itertools.product(range(n), repeat=4):
        total += A[i, j] * A[k, l] * B[i, k] * B[j, l] * C[i, l] * C[j, k]
    return total


seqs = st.integers(1, 6).flatmap(
    lambda n: st.lists(st.floats(-1, 1), min_size=n, max_size=n).map(np.array))


def test_span_weight():
    assert lagsums.span_weight(10, 0) == 10
    assert lagsums.span_weight(10, 3, -2) == 5
    assert lagsums.span_weight(4, 3, -2) == 0
    np.testing.assert_array_equal(lagsums.span_weight(5, np.array([0, 1, 6])), [5, 4, 0])
    assert lagsums.trapezoid_weight(8, 2) == 0.75


def test_toeplitz_product_matches_dense():
    rng = np.random.default_rng(1)
    for n in (1, 2, 5, 33):
        a, b = rng.normal(size=n), rng.normal(size=n)
        np.testing.assert_allclose(lagsums.toeplitz_product(a, b), toeplitz(a) @ toeplitz(b),
                                   atol=1e-12)


def test_toeplitz_product_length_mismatch():
    with pytest.raises(ValueError):
        lagsums.toeplitz_product(np.ones(3), np.ones(4))


@settings(max_examples=30, deadline=None)
@given(c=seqs)
def test_triangle_routes_agree(c):
    ref = _brute_triangle(c)
    assert lagsums.triangle_sum_lags(c) == pytest.approx(ref, abs=1e-10)
    assert lagsums.triangle_sum_trace(c) == pytest.approx(ref, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(data=st.data(), n=st.integers(1, 5))
def test_k4_routes_agree(data, n):
    vec = st.lists(st.floats(-1, 1), min_size=n, max_size=n).map(np.array)
    a, b, c = data.draw(vec), data.draw(vec), data.draw(vec)
    ref = _brute_k4(a, b, c)
    assert lagsums.k4_sum(a, b, c) == pytest.approx(ref, abs=1e-10)
    assert lagsums.k4_sum_lags(a, b, c) == pytest.approx(ref, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(data=st.data(), n=st.integers(1, 40))
def test_cycle_trace_routes_agree(data, n):
    vec = st.lists(st.floats(-1, 1), min_size=n, max_size=n).map(np.array)
    a, b = data.draw(vec), data.draw(vec)
    ref = lagsums.cycle_trace_dense(a, b)
    assert lagsums.cycle_trace(a, b) == pytest.approx(ref, rel=1e-10, abs=1e-10)


def test_k4_with_unit_sequence_is_cycle():
    rng = np.random.default_rng(3)
    a, b = rng.uniform(-1, 1, 12), rng.uniform(-1, 1, 12)
    ones = np.ones(12)
    ref = lagsums.cycle_trace(a, b)
    assert lagsums.k4_sum(a, b, ones) == pytest.approx(ref, rel=1e-12)
    assert lagsums.k4_sum_lags(a, b, ones) == pytest.approx(ref, rel=1e-12)


def test_k4_symmetric_in_sequences():
    rng = np.random.default_rng(4)
    a, b, c = (rng.uniform(-1, 1, 9) for _ in range(3))
    vals = [lagsums.k4_sum(*p) for p in itertools.permutations((a, b, c))]
    np.testing.assert_allclose(vals, vals[0], rtol=1e-12)


def test_large_cycle_trace_against_dense():
    rng = np.random.default_rng(5)
    a, b = rng.uniform(-1, 1, 700), rng.uniform(-1, 1, 700)
    assert lagsums.cycle_trace(a, b) == pytest.approx(lagsums.cycle_trace_dense(a, b), rel=1e-10)


def test_large_triangle_routes():
    c = 1.0 / (1.0 + np.arange(600)) ** 0.4
    assert lagsums.triangle_sum_lags(c) == pytest.approx(lagsums.triangle_sum_trace(c), rel=1e-11)
