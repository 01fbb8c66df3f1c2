"""Stein equation solutions and Gaussian functionals of test functions.

For a test function ``h`` the Stein solution ``f_h`` solves
``f'(x) - x f(x) = h(x) - E[h(N)]`` and vanishes against ``e^{x^2/2}`` at
both ends. Its derivatives at the Gaussian are obtained without numerical
differentiation from ``E[f_h''(N)] = -E[h(N) H_3(N)] / 3`` and
``E[f_h'''(N)] = -E[h(N) H_4(N)] / 4``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .hermite import gauss_hermite_nodes, hermite_eval

SQRT_E = math.sqrt(math.e)

_GH_START = 64
_GH_MAX = 512
_GH_TOL = 1e-10
_QUAD_UPPER = 40.0
_QUAD_TOL = 1e-10
CLASS_GRID = np.linspace(-12.0, 12.0, 4801)


class QuadratureError(ArithmeticError):
    """A quadrature failed to reach its tolerance; ``residual`` holds the estimate."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual estimate {residual:.3g})")
        self.residual = residual


def gaussian_mean(func: Callable) -> float:
    """``E[func(N)]`` with Gauss-Hermite node doubling until two values agree."""
    m = _GH_START
    prev = None
    diff = math.inf
    while m <= _GH_MAX:
        nodes, weights = gauss_hermite_nodes(m)
        val = float(np.dot(weights, func(nodes)))
        if prev is not None:
            diff = abs(val - prev)
            if diff <= _GH_TOL * max(1.0, abs(val)):
                return val
        prev = val
        m *= 2
    raise QuadratureError(f"Gauss-Hermite rule did not converge by {_GH_MAX} nodes", diff)


@dataclass(frozen=True)
class TestFunction:
    """A ``C^2`` function with its first derivatives and Gaussian functionals.

    ``in_class`` certifies ``sup |h''| <= 1``, i.e. membership in the class
    over which the smooth distance takes its supremum.
    """

    __test__ = False  # not a pytest class

    name: str
    h: Callable
    dh: Callable
    d2h: Callable
    in_class: bool
    mean: float
    e_f2: float
    e_f3: float

    def __call__(self, x):
        return self.h(x)


def make_test_function(name: str, h, dh, d2h, certify: bool = False) -> TestFunction:
    """Build a :class:`TestFunction`, precomputing its Gaussian functionals."""
    if certify:
        sup = float(np.max(np.abs(d2h(CLASS_GRID))))
        if sup > 1.0 + 1e-9:
            raise ValueError(f"{name}: sup |h''| = {sup:.6g} exceeds 1 on the check grid")
    mean = gaussian_mean(h)
    e_f2 = -gaussian_mean(lambda x: h(x) * hermite_eval(3, x)) / 3.0
    e_f3 = -gaussian_mean(lambda x: h(x) * hermite_eval(4, x)) / 4.0
    return TestFunction(name, h, dh, d2h, certify, mean, e_f2, e_f3)


def gaussian_functional(tf: TestFunction, which: str) -> float:
    """``E[h(N)]``, ``E[f_h''(N)]`` or ``E[f_h'''(N)]`` (``which`` in h, f2, f3)."""
    try:
        return {"h": tf.mean, "f2": tf.e_f2, "f3": tf.e_f3}[which]
    except KeyError:
        raise ValueError(f"unknown functional {which!r}; expected 'h', 'f2' or 'f3'") from None


def stein_solve(tf: TestFunction, x: float) -> float:
    """``f_h(x)`` from the one-sided integral that needs no cancellation.

    ``x <= 0``: ``int_0^inf (h(x-t) - Eh) exp(xt - t^2/2) dt``;
    ``x > 0``: ``-int_0^inf (h(x+t) - Eh) exp(-xt - t^2/2) dt``. The two
    agree because ``h - Eh`` integrates to zero against the Gaussian.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("stein_solve needs a finite point")
    mu = tf.mean
    if x <= 0:
        def integrand(t):
            return (tf.h(x - t) - mu) * math.exp(x * t - 0.5 * t * t)
        sign = 1.0
    else:
        def integrand(t):
            return (tf.h(x + t) - mu) * math.exp(-x * t - 0.5 * t * t)
        sign = -1.0
    val, err = integrate.quad(integrand, 0.0, _QUAD_UPPER, epsabs=1e-12, epsrel=1e-11, limit=400)
    if not err <= _QUAD_TOL * max(1.0, abs(val)):
        raise QuadratureError(f"Stein integral at x={x} did not converge", err)
    return sign * val


def stein_derivatives(tf: TestFunction, x: float) -> tuple[float, float, float, float]:
    """``(f, f', f'', f''')`` at ``x`` by differentiating the Stein equation."""
    f = stein_solve(tf, x)
    f1 = x * f + float(tf.h(x)) - tf.mean
    f2 = f + x * f1 + float(tf.dh(x))
    f3 = 2.0 * f1 + x * f2 + float(tf.d2h(x))
    return f, f1, f2, f3


def stein_residual(tf: TestFunction, x: float, step: float = 1e-3) -> float:
    """``|f'(x) - x f(x) - h(x) + Eh|`` with ``f'`` from a five-point stencil."""
    fs = [stein_solve(tf, x + k * step) for k in (-2, -1, 1, 2)]
    deriv = (fs[0] - 8 * fs[1] + 8 * fs[2] - fs[3]) / (12 * step)
    return abs(deriv - x * stein_solve(tf, x) - float(tf.h(x)) + tf.mean)


def edgeworth_prediction(kappa3: float, kappa4: float, tf: TestFunction) -> float:
    """First-order prediction of ``E[h(N)] - E[h(F)]``.

    ``(kappa3 / 2) E[f''(N)] + (kappa4 / 6) E[f'''(N)]``; the expectations
    are taken at the Gaussian limit instead of at ``F``.
    """
    return 0.5 * kappa3 * tf.e_f2 + kappa4 / 6.0 * tf.e_f3


def daly_bound_check(tf: TestFunction, k: int, grid=None) -> bool:
    """Check ``sup |f_h^{(k+2)}| <= 2 sup |h^{(k+1)}|`` on a grid (``k`` in 0, 1)."""
    if k not in (0, 1):
        raise ValueError("only k = 0 and k = 1 are supported")
    grid = np.linspace(-8.0, 8.0, 161) if grid is None else np.asarray(grid)
    lhs = max(abs(stein_derivatives(tf, x)[k + 2]) for x in grid)
    hder = tf.dh if k == 0 else tf.d2h
    rhs = 2.0 * float(np.max(np.abs(hder(grid))))
    return lhs <= rhs + 1e-6


def _sin_function() -> TestFunction:
    return make_test_function("sin", np.sin, np.cos, lambda x: -np.sin(x), certify=True)


def _cos_h2_function() -> TestFunction:
    c = 1.0 / (1.0 + SQRT_E)
    return make_test_function(
        "cos-h2",
        lambda x: c * (SQRT_E * np.cos(x) - 1.0 + 0.5 * (np.asarray(x) ** 2 - 1.0)),
        lambda x: c * (-SQRT_E * np.sin(x) + np.asarray(x)),
        lambda x: c * (1.0 - SQRT_E * np.cos(x)),
        certify=True,
    )


def test_pair() -> tuple[TestFunction, TestFunction]:
    """Functions ``g, h`` separating the third and fourth cumulant contributions.

    ``g = sin`` has ``E[f_g''(N)] = 1/(3 sqrt e)`` and ``E[f_g'''(N)] = 0``;
    ``h = (sqrt(e) cos x - 1 + H_2(x)/2) / (1 + sqrt e)`` has
    ``E[f_h''(N)] = 0`` and ``E[f_h'''(N)] = -1/(4 + 4 sqrt e)``.
    """
    return _sin_function(), _cos_h2_function()


test_pair.__test__ = False
