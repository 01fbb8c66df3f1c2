"""Brute-force Gaussian moments of Hermite products by diagram enumeration.

For jointly Gaussian unit-variance ``X_1..X_v`` with correlations ``c_ab``,

    E[prod_a H_{q_a}(X_a)] = sum_M prod_a q_a! / prod_{a<b} m_ab! * prod_{a<b} c_ab^{m_ab}

over symmetric nonnegative integer matrices ``M`` with zero diagonal and row
sums ``q_a``. Combinatorial weights and correlation powers are accumulated
as exact rationals, converted to float once. This module is ground truth for
tiny ``n`` and shares nothing with the lag-sum engine except ``v_n``.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from fractions import Fraction

import numpy as np

MAX_VERTICES = 8
MAX_DEGREE = 12


def enumerate_diagrams(degrees):
    """Yield upper-triangle multiplicities ``{(a, b): m_ab}`` of every admissible diagram."""
    degrees = [int(d) for d in degrees]
    v = len(degrees)
    pairs = {}

    def fill_vertex(a, rem):
        if a == v:
            yield dict(pairs)
            return
        if a == v - 1:
            if rem[a] == 0:
                yield dict(pairs)
            return
        # the rest of row a must be absorbed by later vertices
        if rem[a] > sum(rem[a + 1:]):
            return
        yield from fill_entry(a, a + 1, rem[a], rem)

    def fill_entry(a, b, need, rem):
        if b == v - 1:
            if need <= rem[b]:
                pairs[(a, b)] = need
                rem[b] -= need
                yield from fill_vertex(a + 1, rem)
                rem[b] += need
                del pairs[(a, b)]
            return
        later = sum(rem[b + 1:])
        for m in range(max(0, need - later), min(need, rem[b]) + 1):
            pairs[(a, b)] = m
            rem[b] -= m
            yield from fill_entry(a, b + 1, need - m, rem)
            rem[b] += m
            del pairs[(a, b)]

    if v == 0:
        yield {}
        return
    if v == 1:
        if degrees[0] == 0:
            yield {}
        return
    yield from fill_vertex(0, list(degrees))


def _check_corr(corr: np.ndarray, v: int) -> None:
    if corr.shape != (v, v):
        raise ValueError(f"correlation matrix must be {v}x{v}, got {corr.shape}")
    if not np.array_equal(corr, corr.T):
        raise ValueError("correlation matrix must be symmetric")
    if not np.all(np.diag(corr) == 1.0):
        raise ValueError("correlation matrix must have unit diagonal")
    if np.any(np.abs(corr) > 1.0):
        raise ValueError("correlations must lie in [-1, 1]")


def hermite_product_moment_exact(degrees, corr) -> Fraction:
    """Exact rational value of ``E[prod H_{q_a}(X_a)]`` for float correlations."""
    degrees = [int(d) for d in degrees]
    v = len(degrees)
    if v > MAX_VERTICES:
        raise ValueError(f"{v} vertices exceed the enumeration guard of {MAX_VERTICES}")
    if degrees and (max(degrees) > MAX_DEGREE or min(degrees) < 0):
        raise ValueError(f"degrees must lie in [0, {MAX_DEGREE}]")
    corr = np.asarray(corr, dtype=float)
    _check_corr(corr, v)
    if sum(degrees) % 2:
        return Fraction(0)
    top = math.prod(math.factorial(d) for d in degrees)
    c = {(a, b): Fraction(float(corr[a, b])) for a in range(v) for b in range(a + 1, v)}
    total = Fraction(0)
    for diagram in enumerate_diagrams(degrees):
        weight = top // math.prod(math.factorial(m) for m in diagram.values())
        term = Fraction(weight)
        for ab, m in diagram.items():
            if m:
                term *= c[ab] ** m
        total += term
    return total


def hermite_product_moment(degrees, corr) -> float:
    """``E[prod_a H_{q_a}(X_a)]`` by diagram enumeration."""
    return float(hermite_product_moment_exact(degrees, corr))


def _raw_moment(spec, order: int) -> Fraction:
    """``E[(sum_{k<n} H_q(X_k))^order]`` summed over index multisets."""
    n, q = spec.n, spec.q
    if n > 6 or order > 4 or q > 6:
        raise ValueError("brute-force moments need n <= 6, order <= 4 and q <= 6")
    total = Fraction(0)
    for combo in itertools.combinations_with_replacement(range(n), order):
        counts = Counter(combo)
        mult = math.factorial(order)
        for c in counts.values():
            mult //= math.factorial(c)
        idx = np.asarray(combo)
        corr = spec.model.rho(idx[:, None] - idx[None, :])
        total += mult * hermite_product_moment_exact([q] * order, corr)
    return total


def oracle_variance_vn(spec) -> float:
    """``v_n = E[V_n^2]`` straight from the diagram sum."""
    return float(_raw_moment(spec, 2) / spec.n)


def moments_bruteforce(spec, order: int, vn: float | None = None) -> float:
    """``E[F_n^order]``, normalised by ``v_n`` from the engine unless given."""
    if vn is None:
        from .cumulants import variance_vn

        vn = variance_vn(spec)
    return float(_raw_moment(spec, order)) / (spec.n * vn) ** (order / 2)


def cumulants_from_moments(m1, m2, m3, m4) -> tuple[float, float, float, float]:
    """First four cumulants from raw moments."""
    k1 = m1
    k2 = m2 - m1**2
    k3 = m3 - 3 * m2 * m1 + 2 * m1**3
    k4 = m4 - 4 * m3 * m1 - 3 * m2**2 + 12 * m2 * m1**2 - 6 * m1**4
    return k1, k2, k3, k4


def moments_from_cumulants(k1, k2, k3, k4) -> tuple[float, float, float, float]:
    """Raw moments via ``E[F^{m+1}] = sum_s C(m, s) kappa_{s+1} E[F^{m-s}]``."""
    kappas = (k1, k2, k3, k4)
    moments = [1.0]
    for m in range(4):
        moments.append(sum(math.comb(m, s) * kappas[s] * moments[m - s] for s in range(m + 1)))
    return tuple(moments[1:])


def oracle_cumulants(spec, vn: float | None = None) -> tuple[float, float, float, float]:
    """Cumulants of ``F_n`` from brute-force moments."""
    moments = [moments_bruteforce(spec, m, vn) for m in (1, 2, 3, 4)]
    return cumulants_from_moments(*moments)
