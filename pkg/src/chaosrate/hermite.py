"""Probabilists' Hermite polynomials and Gauss-Hermite quadrature.

``H_q`` is orthogonal for the standard Gaussian weight, with
``E[H_p(N) H_q(N)] = q! 1{p = q}``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import roots_hermitenorm

MAX_ORDER = 12


def check_order(q, *, minimum: int = 0) -> int:
    """Validate a Hermite degree against the cap and return it as ``int``."""
    if isinstance(q, bool) or int(q) != q:
        raise ValueError(f"Hermite order must be an integer, got {q!r}")
    q = int(q)
    if q > MAX_ORDER:
        raise ValueError(f"Hermite order {q} exceeds the cap q <= {MAX_ORDER}")
    if q < minimum:
        raise ValueError(f"Hermite order {q} is below the minimum {minimum}")
    return q


def hermite_eval(q, x):
    """Evaluate ``H_q(x)`` with the three-term recurrence.

    ``x`` may be a scalar or an array; the return type follows numpy
    broadcasting (a Python float for scalar input).
    """
    q = check_order(q)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("hermite_eval needs finite arguments")
    h_prev = np.ones_like(x)
    if q == 0:
        out = h_prev
    else:
        h = x.copy()
        for k in range(1, q):
            h, h_prev = x * h - k * h_prev, h
        out = h
    return float(out) if out.ndim == 0 else out


def hermite_coefficients(q) -> list[int]:
    """Monomial coefficients of ``H_q`` (index = power), exact integers."""
    q = check_order(q)
    return [
        0 if (q - k) % 2 else
        (-1) ** ((q - k) // 2) * math.factorial(q)
        // (math.factorial(k) * math.factorial((q - k) // 2) * 2 ** ((q - k) // 2))
        for k in range(q + 1)
    ]


def gauss_hermite_nodes(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for expectations against ``N(0, 1)``.

    The weights sum to one, and the rule integrates polynomials of degree
    up to ``2m - 1`` exactly.
    """
    if int(m) != m or m < 2:
        raise ValueError(f"need at least 2 quadrature nodes, got {m!r}")
    # scipy switches to asymptotic nodes for large m, where hermegauss overflows
    nodes, weights = roots_hermitenorm(int(m))
    return nodes, weights / math.sqrt(2.0 * math.pi)


def gaussian_expectation(func, m: int = 64) -> float:
    """``E[func(N)]`` with an ``m``-node Gauss-Hermite rule."""
    nodes, weights = gauss_hermite_nodes(m)
    return float(np.dot(weights, func(nodes)))
