import math

import numpy as np
import pytest

from chaosrate import stein
from chaosrate.hermite import gauss_hermite_nodes, hermite_eval

SQRT_E = math.sqrt(math.e)
GRID = np.linspace(-8.0, 8.0, 17)


def _poly(name, coeffs, certify=False):
    p = np.polynomial.Polynomial(coeffs)
    d1, d2 = p.deriv(), p.deriv(2)
    return stein.make_test_function(name, lambda x: p(np.asarray(x, dtype=float)),
                                    lambda x: d1(np.asarray(x, dtype=float)),
                                    lambda x: d2(np.asarray(x, dtype=float)), certify=certify)


@pytest.fixture(scope="module")
def pair():
    return stein.test_pair()


@pytest.fixture(scope="module")
def cos_fn():
    return stein.make_test_function("cos", np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x),
                                    certify=True)


def test_pair_functionals(pair):
    g, h = pair
    assert g.e_f2 == pytest.approx(1 / (3 * SQRT_E), abs=1e-12)
    assert abs(g.e_f3) < 1e-12
    assert abs(h.e_f2) < 1e-12
    assert h.e_f3 == pytest.approx(-1 / (4 + 4 * SQRT_E), abs=1e-12)
    assert g.e_f2 == pytest.approx(0.2021769, abs=1e-7)
    assert h.e_f3 == pytest.approx(-0.0943852, abs=1e-7)
    assert g.in_class and h.in_class


def test_pair_second_derivative_sup(pair):
    g, h = pair
    assert np.max(np.abs(g.d2h(stein.CLASS_GRID))) == pytest.approx(1.0, abs=1e-6)
    assert np.max(np.abs(h.d2h(stein.CLASS_GRID))) <= 1.0


def test_gaussian_functional_lookup(pair):
    g, _ = pair
    assert stein.gaussian_functional(g, "h") == pytest.approx(0.0, abs=1e-15)
    assert stein.gaussian_functional(g, "f2") == g.e_f2
    with pytest.raises(ValueError):
        stein.gaussian_functional(g, "f4")


def test_linear_and_quadratic_solutions():
    lin = _poly("x", [0, 1])
    sq = _poly("x^2", [0, 0, 1])
    for x in (-6.0, -1.0, 0.0, 0.5, 7.0):
        assert stein.stein_solve(lin, x) == pytest.approx(-1.0, abs=1e-10)
        assert stein.stein_solve(sq, x) == pytest.approx(-x, abs=1e-9)


def test_odd_polynomial_mean():
    cube = _poly("x^3", [0, 0, 0, 1])
    assert cube.mean == pytest.approx(0.0, abs=1e-14)
    # E f'' = -E[x^3 H_3]/3 = -2
    assert cube.e_f2 == pytest.approx(-2.0, rel=1e-12)


def test_certification_rejects_large_curvature():
    with pytest.raises(ValueError, match="exceeds 1"):
        _poly("x^2", [0, 0, 1], certify=True)


@pytest.mark.parametrize("x", GRID)
def test_stein_residual(pair, x):
    for tf in pair:
        assert stein.stein_residual(tf, x) <= 1e-7


def test_solution_continuous_at_zero(pair):
    for tf in pair:
        assert stein.stein_solve(tf, 1e-12) == pytest.approx(stein.stein_solve(tf, 0.0), abs=1e-10)


def test_far_tail_stable(pair):
    for tf in pair:
        for x in (-12.0, 12.0):
            assert math.isfinite(stein.stein_solve(tf, x))


def _expect_f2(tf, m=64):
    nodes, w = gauss_hermite_nodes(m)
    return float(sum(wi * stein.stein_derivatives(tf, x)[2] for x, wi in zip(nodes, w)))


def test_identity_cross_check(pair, cos_fn):
    cube = _poly("x^3", [0, 0, 0, 1])
    for tf in (pair[0], cos_fn, cube, pair[1]):
        expected = -stein.gaussian_mean(lambda x: tf.h(x) * hermite_eval(3, x)) / 3
        assert _expect_f2(tf) == pytest.approx(expected, abs=1e-6)


def test_growth_bound(pair, cos_fn):
    for tf in (*pair, cos_fn):
        for x in GRID:
            assert abs(stein.stein_derivatives(tf, x)[2]) <= 2 + 2 * abs(x)


def test_daly_bounds(pair):
    g, h = pair
    assert stein.daly_bound_check(g, 0)
    assert stein.daly_bound_check(h, 1)
    assert stein.daly_bound_check(_poly("x", [0, 1]), 0)
    with pytest.raises(ValueError):
        stein.daly_bound_check(g, 2)


def test_edgeworth_predictions(pair):
    g, h = pair
    k3, k4 = 0.35355339059327373, 0.1875
    assert stein.edgeworth_prediction(k3, k4, g) == pytest.approx(k3 / (6 * SQRT_E), abs=1e-12)
    assert stein.edgeworth_prediction(k3, k4, h) == pytest.approx(-k4 / (24 + 24 * SQRT_E), abs=1e-12)
    assert stein.edgeworth_prediction(0.0, 0.0, g) == 0.0


def test_gauss_hermite_nonconvergence():
    with pytest.raises(stein.QuadratureError) as info:
        stein.make_test_function("abs", np.abs, np.sign, lambda x: 0 * x)
    assert info.value.residual > 0


def test_stein_quadrature_failure_reported(pair, monkeypatch):
    monkeypatch.setattr(stein, "_QUAD_TOL", -1.0)
    with pytest.raises(stein.QuadratureError, match="residual"):
        stein.stein_solve(pair[0], 0.3)


def test_nonfinite_point(pair):
    with pytest.raises(ValueError):
        stein.stein_solve(pair[0], math.inf)
