"""Exact cumulants of normalised Hermite partial sums.

For a stationary unit-variance Gaussian sequence ``X_k`` with covariance
``rho`` and a Hermite order ``q >= 2``,

    F_n = (n v_n)^{-1/2} sum_{k<n} H_q(X_k),   v_n = E[(n^{-1/2} sum H_q(X_k))^2].

``F_n = I_q(f_n)`` lives in the ``q``-th chaos; its third and fourth
cumulants are polynomial in the ``rho(k - l)``. The contraction norms are
index sums over ``[0, n)^4``; those are evaluated by the kernels in
:mod:`chaosrate.lagsums`.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import lagsums
from .covariance import CovarianceModel, lp_partial_norm
from .hermite import check_order

N_EXACT = 512
MAX_N = 2**14

EXACT_LAG_SUM = "exact-lag-sum"
TOEPLITZ_TRACE = "toeplitz-trace"
BRACKET = "bracket"


class BracketOnlyError(ValueError):
    """Raised when a symmetrised contraction is requested above ``n_exact``."""


@dataclass(frozen=True)
class ChaosSumSpec:
    """The triple ``(q, n, model)`` defining ``F_n``."""

    q: int
    n: int
    model: CovarianceModel

    def __post_init__(self):
        check_order(self.q, minimum=2)
        if int(self.n) != self.n or not 1 <= self.n <= MAX_N:
            raise ValueError(f"n must be an integer in [1, {MAX_N}], got {self.n}")

    def to_dict(self) -> dict:
        return {"q": self.q, "n": self.n, "model": self.model.to_dict()}


def d3_coefficient(q: int) -> int:
    """``2 q q! (q/2 - 1)! C(q-1, q/2-1)^2`` for even ``q``."""
    if q % 2:
        raise ValueError("the third-cumulant coefficient is defined for even q only")
    h = q // 2
    return 2 * q * math.factorial(q) * math.factorial(h - 1) * math.comb(q - 1, h - 1) ** 2


def kappa4_weight(q: int, r: int) -> int:
    return math.factorial(q) ** 2 * math.comb(q, r) ** 2


def gamma1_weight(q: int, r: int) -> int:
    """Squared chaos coefficient of ``Gamma_1`` times the chaos-norm factorial."""
    c = q * math.factorial(r - 1) * math.comb(q - 1, r - 1) ** 2
    return c * c * math.factorial(2 * q - 2 * r)


def symmetrisation_weight(a: int, s: int) -> float:
    """Fraction of the ``(2a)!`` permutations sending ``s`` legs across."""
    return math.comb(a, s) ** 2 * math.factorial(a) ** 2 / math.factorial(2 * a)


# ---------------------------------------------------------------------------
# cached building blocks (specs are hashable)


@functools.lru_cache(maxsize=256)
def _rho_power(spec: ChaosSumSpec, e: int) -> np.ndarray:
    seq = spec.model.rho_seq(spec.n) ** e
    seq.setflags(write=False)
    return seq


@functools.lru_cache(maxsize=4096)
def _graph_sum(spec: ChaosSumSpec, exponents: tuple[int, int, int]) -> float:
    """Complete-graph sum with exponents per perfect matching (order-free)."""
    e0, e1, e2 = exponents
    if e0 == 0:
        return lagsums.cycle_trace(_rho_power(spec, e1), _rho_power(spec, e2))
    return lagsums.k4_sum(_rho_power(spec, e0), _rho_power(spec, e1), _rho_power(spec, e2))


def graph_sum(spec: ChaosSumSpec, a: int, b: int, c: int) -> float:
    """``sum_{[0,n)^4} rho(1-2)^a rho(3-4)^a rho(1-3)^b rho(2-4)^b rho(1-4)^c rho(2-3)^c``."""
    return _graph_sum(spec, tuple(sorted((a, b, c))))


def clear_caches() -> None:
    """Drop memoised covariance powers, graph sums, variances and third cumulants."""
    for fn in (_rho_power, _graph_sum, variance_vn, kappa3):
        fn.cache_clear()


def _check_r(spec: ChaosSumSpec, r: int) -> None:
    if int(r) != r or not 1 <= r <= spec.q - 1:
        raise ValueError(f"contraction index r must lie in [1, {spec.q - 1}], got {r}")


# ---------------------------------------------------------------------------
# operations


@functools.lru_cache(maxsize=1024)
def variance_vn(spec: ChaosSumSpec) -> float:
    """``v_n = q! sum_{|j|<n} (1 - |j|/n) rho(j)^q``."""
    n, q = spec.n, spec.q
    vals = _rho_power(spec, q)
    j = np.arange(1, n)
    vn = math.factorial(q) * (vals[0] + 2.0 * np.sum((1.0 - j / n) * vals[1:]))
    if not vn > 0:
        raise ArithmeticError(f"non-positive v_n = {vn} for {spec}: covariance model is broken")
    return float(vn)


def _norm_factor(spec: ChaosSumSpec) -> float:
    return 1.0 / (variance_vn(spec) * spec.n) ** 2


@functools.lru_cache(maxsize=1024)
def kappa3(spec: ChaosSumSpec) -> float:
    """Third cumulant; zero for odd ``q``, a weighted double-lag sum otherwise."""
    if spec.q % 2:
        return 0.0
    tri = lagsums.triangle_sum_lags(_rho_power(spec, spec.q // 2))
    return d3_coefficient(spec.q) * tri / (variance_vn(spec) * spec.n) ** 1.5


def contraction_norm(spec: ChaosSumSpec, r: int) -> float:
    """``||f_n (x)_r f_n||^2`` as a normalised ``tr(T_r T_{q-r} T_r T_{q-r})``."""
    _check_r(spec, r)
    return _norm_factor(spec) * graph_sum(spec, r, spec.q - r, 0)


def contraction_norm_lags(spec: ChaosSumSpec, r: int) -> float:
    """Same norm through the ``O(n^3)`` triple-lag reduction (cross-check)."""
    _check_r(spec, r)
    a, b = _rho_power(spec, r), _rho_power(spec, spec.q - r)
    return _norm_factor(spec) * lagsums.k4_sum_lags(a, b, np.ones(spec.n))


def sym_contraction_norm(spec: ChaosSumSpec, r: int, n_exact: int = N_EXACT) -> float:
    """``||f_n (x~)_r f_n||^2`` by matching the legs of the symmetrised kernel.

    With ``a = q - r``, a permutation of the ``2a`` free slots sends ``s``
    legs of one block across; averaging gives weights
    ``C(a,s)^2 a!^2 / (2a)!`` on complete-graph sums with exponents
    ``(r, a - s, s)``. For ``q = 2`` the contraction is already symmetric.
    """
    _check_r(spec, r)
    if spec.q == 2:
        return contraction_norm(spec, r)
    if spec.n > n_exact:
        raise BracketOnlyError(
            f"n = {spec.n} exceeds n_exact = {n_exact}: symmetrised contractions are "
            "not computed there, use the kappa4 bracket instead")
    a = spec.q - r
    total = sum(symmetrisation_weight(a, s) * graph_sum(spec, r, a - s, s) for s in range(a + 1))
    return _norm_factor(spec) * total


def exact_mode(spec: ChaosSumSpec, n_exact: int = N_EXACT) -> bool:
    return spec.q == 2 or spec.n <= n_exact


@dataclass(frozen=True)
class Kappa4:
    """Fourth cumulant, exact (``lower == upper == value``) or bracketed."""

    value: float | None
    lower: float
    upper: float
    method: str

    @property
    def is_exact(self) -> bool:
        return self.value is not None


def kappa4_bracket(spec: ChaosSumSpec) -> tuple[float, float]:
    """``[L, U]``: drop the symmetrised terms, or bound each by the plain norm."""
    lo = hi = 0.0
    for r in range(1, spec.q):
        w = kappa4_weight(spec.q, r) * contraction_norm(spec, r)
        lo += w
        hi += w * (1 + math.comb(2 * spec.q - 2 * r, spec.q - r))
    return lo, hi


def kappa4(spec: ChaosSumSpec, n_exact: int = N_EXACT) -> Kappa4:
    """Fourth cumulant from the contraction expansion, or its bracket above ``n_exact``."""
    q = spec.q
    if not exact_mode(spec, n_exact):
        lo, hi = kappa4_bracket(spec)
        return Kappa4(None, lo, hi, BRACKET)
    total = 0.0
    for r in range(1, q):
        plain = contraction_norm(spec, r)
        sym = sym_contraction_norm(spec, r, n_exact)
        total += kappa4_weight(q, r) * (plain + math.comb(2 * q - 2 * r, q - r) * sym)
    method = TOEPLITZ_TRACE if q == 2 else EXACT_LAG_SUM
    return Kappa4(total, total, total, method)


def gamma1_variance(spec: ChaosSumSpec, n_exact: int = N_EXACT) -> float:
    """``Var(Gamma_1(F_n))``, read off chaos by chaos (the ``r = q`` term is the mean)."""
    return sum(gamma1_weight(spec.q, r) * sym_contraction_norm(spec, r, n_exact)
               for r in range(1, spec.q))


def kappa3_bound(spec: ChaosSumSpec) -> float:
    """``d3(q) / (v_n^{3/2} sqrt(n)) (sum_{|k|<n} |rho(k)|^{3q/4})^2`` (even ``q``)."""
    s = lp_partial_norm(spec.model, 0.75 * spec.q, spec.n)
    return d3_coefficient(spec.q) * s * s / (variance_vn(spec) ** 1.5 * math.sqrt(spec.n))


def kappa4_bound(spec: ChaosSumSpec) -> float:
    """Covariance functional bounding ``kappa4`` up to an unknown constant.

    ``q <= 3``: ``(sum |rho|^{2q/3})^3``; otherwise
    ``(sum |rho|^{q-1})^2 sum |rho|^2``; both divided by ``v_n^2 n``.
    """
    q, n, m = spec.q, spec.n, spec.model
    if q <= 3:
        s = lp_partial_norm(m, 2.0 * q / 3.0, n) ** 3
    else:
        s = lp_partial_norm(m, q - 1, n) ** 2 * lp_partial_norm(m, 2, n)
    return s / (variance_vn(spec) ** 2 * n)


def tv_bound(q: int, k4: float) -> float:
    """Fourth-moment bound ``2 sqrt((q-1)/(3q) kappa4)`` on the total variation distance."""
    return 2.0 * math.sqrt((q - 1) / (3.0 * q) * k4)


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class CumulantReport:
    spec: ChaosSumSpec
    v_n: float
    kappa3: float
    kappa4: Kappa4
    contraction_norms: tuple[tuple[int, float, float | None], ...]
    gamma1_variance: float | None
    tv_bound: float
    methods: dict = field(default_factory=dict)

    CSV_COLUMNS = ("q", "H", "n", "v_n", "kappa3", "kappa4_lo", "kappa4_hi", "gamma1_var")

    def to_dict(self) -> dict:
        k4 = self.kappa4
        return {
            "spec": self.spec.to_dict(),
            "v_n": self.v_n,
            "kappa3": self.kappa3,
            "kappa4": {"value": k4.value, "lower": k4.lower, "upper": k4.upper},
            "contraction_norms": [
                {"r": r, "plain": p, "symmetrised": s} for r, p, s in self.contraction_norms
            ],
            "gamma1_variance": self.gamma1_variance,
            "tv_bound": self.tv_bound,
            "methods": dict(self.methods),
        }

    def csv_row(self) -> tuple:
        hurst = self.spec.model.hurst if self.spec.model.hurst is not None else math.nan
        g1 = self.gamma1_variance if self.gamma1_variance is not None else math.nan
        return (self.spec.q, hurst, self.spec.n, self.v_n, self.kappa3,
                self.kappa4.lower, self.kappa4.upper, g1)


def cumulant_report(spec: ChaosSumSpec, n_exact: int = N_EXACT) -> CumulantReport:
    """All exact quantities for ``spec``; symmetrised pieces only in exact mode."""
    exact = exact_mode(spec, n_exact)
    norms = tuple(
        (r, contraction_norm(spec, r), sym_contraction_norm(spec, r, n_exact) if exact else None)
        for r in range(1, spec.q)
    )
    k4 = kappa4(spec, n_exact)
    g1 = gamma1_variance(spec, n_exact) if exact else None
    methods = {
        "v_n": EXACT_LAG_SUM,
        "kappa3": EXACT_LAG_SUM,
        "kappa4": k4.method,
        "contraction_norms": TOEPLITZ_TRACE,
        "symmetrised_norms": EXACT_LAG_SUM if exact else None,
        "gamma1_variance": EXACT_LAG_SUM if exact else None,
    }
    return CumulantReport(spec, variance_vn(spec), kappa3(spec), k4, norms, g1,
                          tv_bound(spec.q, k4.upper), methods)
