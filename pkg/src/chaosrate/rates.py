"""Asymptotic rate tables for the cumulants of fGN Hermite sums, limit constants and slope fits.

With ``rho(k) ~ H(2H-1)|k|^{2H-2}`` the third and fourth cumulants of
``F_n`` decay like ``n^e log^p n`` with piecewise-linear exponents in ``H``;
the tables cover ``0 < H < 1 - 1/(2q)``, the range where ``F_n`` is
asymptotically Gaussian.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats

from .covariance import FGN, CovarianceModel, alias_free_grid, spectral_power, torus_integral
from .cumulants import ChaosSumSpec, d3_coefficient, kappa3, kappa4_bracket
from .hermite import check_order

DEFAULT_TOLERANCE = 0.1
BOUNDARY_TOLERANCE = 0.2
BOUNDARY_WINDOW = 0.02
LIMIT_TRUNCATION = 2**18
MIN_POINTS = 5


class RegimeError(ValueError):
    """Parameters lie outside the range where a rate law or limit applies."""


def _exact(h) -> Fraction:
    """Rational form of ``H`` (so that boundaries such as 2/3 are hit exactly)."""
    return Fraction(h).limit_denominator(10_000)


@dataclass(frozen=True)
class RateLaw:
    """``n^exponent log^log_power n`` on one branch of a rate table."""

    exponent: Fraction
    log_power: int
    regime: str
    boundary_distance: float

    @property
    def near_boundary(self) -> bool:
        return self.boundary_distance <= BOUNDARY_WINDOW

    def __call__(self, n):
        n = np.asarray(n, dtype=float)
        return n ** float(self.exponent) * np.log(n) ** self.log_power

    def to_dict(self) -> dict:
        return {"exponent": str(self.exponent), "exponent_float": float(self.exponent),
                "log_power": self.log_power, "regime": self.regime,
                "boundary_distance": self.boundary_distance}


def _guard(q: int, hurst) -> Fraction:
    check_order(q, minimum=2)
    H = _exact(hurst)
    top = 1 - Fraction(1, 2 * q)
    if not 0 < H < top:
        raise RegimeError(f"H = {float(H):g} is outside the rate-table regime (0, {float(top):g}) for q = {q}")
    return H


def _branch(H: Fraction, cuts, laws) -> RateLaw:
    """Pick the branch; ``cuts`` are the interior boundaries, ``laws`` has ``2 len(cuts) + 1`` entries."""
    dist = min(abs(float(H - c)) for c in cuts)
    for i, c in enumerate(cuts):
        if H < c:
            e, p, name = laws[2 * i]
            return RateLaw(e, p, name, dist)
        if H == c:
            e, p, name = laws[2 * i + 1]
            return RateLaw(e, p, name, 0.0)
    e, p, name = laws[-1]
    return RateLaw(e, p, name, dist)


def rate_kappa3(q: int, hurst) -> RateLaw:
    """Decay of ``kappa3(F_n)`` for even ``q``."""
    H = _guard(q, hurst)
    if q % 2:
        raise ValueError("the third cumulant vanishes for odd q; no rate law")
    c = 1 - Fraction(2, 3 * q)
    half = Fraction(-1, 2)
    return _branch(H, [c], [
        (half, 0, "short"),
        (half, 2, "boundary"),
        (Fraction(3, 2) - 3 * q + 3 * q * H, 0, "long"),
    ])


def rate_kappa4(q: int, hurst) -> RateLaw:
    """Decay of ``kappa4(F_n)``; separate tables for ``q <= 3`` and ``q > 3``."""
    H = _guard(q, hurst)
    long_e = 4 * q * H - 4 * q + 2
    if q <= 3:
        c = 1 - Fraction(3, 4 * q)
        return _branch(H, [c], [
            (Fraction(-1), 0, "short"),
            (Fraction(-1), 3, "boundary"),
            (long_e, 0, "long"),
        ])
    c1 = Fraction(3, 4)
    c2 = 1 - Fraction(1, 2 * q - 2)
    return _branch(H, [c1, c2], [
        (Fraction(-1), 0, "short"),
        (Fraction(-1), 1, "boundary-3/4"),
        (4 * H - 4, 0, "intermediate"),
        (4 * H - 4, 2, "boundary-upper"),
        (long_e, 0, "long"),
    ])


# ---------------------------------------------------------------------------
# limit constants


def limit_kappa3(q: int, model: CovarianceModel, K: int = LIMIT_TRUNCATION) -> float:
    """``lim sqrt(n) kappa3(F_n) = d3/q!^{3/2} sqrt(2 pi) int g^3 / (int g^2)^{3/2}``, ``g = g_{q/2}``."""
    check_order(q, minimum=2)
    if q % 2:
        raise ValueError("limit_kappa3 needs even q")
    if model.kind == FGN and not model.hurst < 1 - 2 / (3 * q):
        raise RegimeError(f"H = {model.hurst} >= 1 - 2/(3q): rho is not in l^(3q/4)")
    g = spectral_power(model, q // 2, K, alias_free_grid(K, 3))
    ratio = torus_integral(g, 3) / torus_integral(g, 2) ** 1.5
    val = d3_coefficient(q) / math.factorial(q) ** 1.5 * math.sqrt(2 * math.pi) * ratio
    if not val > 0:
        raise ArithmeticError(f"non-positive limit constant {val}")
    return val


def limit_kappa4_q2(model: CovarianceModel, K: int = LIMIT_TRUNCATION) -> float:
    """``lim n kappa4(F_n) = 24 pi int g_1^4 / (int g_1^2)^2`` for ``q = 2``."""
    if model.kind == FGN and not model.hurst < 0.625:
        raise RegimeError(f"H = {model.hurst} >= 5/8: rho is not in l^(4/3)")
    g = spectral_power(model, 1, K, alias_free_grid(K, 4))
    return 24 * math.pi * torus_integral(g, 4) / torus_integral(g, 2) ** 2


# ---------------------------------------------------------------------------
# slope fits


@dataclass(frozen=True)
class RateVerdict:
    slope: float
    half_width: float
    law: RateLaw
    tolerance: float
    passed: bool
    label: str
    residuals: tuple[float, ...]
    intercept: float

    def to_dict(self) -> dict:
        return {"slope": self.slope, "half_width": self.half_width, "law": self.law.to_dict(),
                "tolerance": self.tolerance, "passed": self.passed, "label": self.label,
                "max_abs_residual": max(map(abs, self.residuals)), "intercept": self.intercept}


def fit_slope(ns, values, law: RateLaw, tolerance: float | None = None) -> RateVerdict:
    """Least-squares slope of ``log(value / log^p n)`` on ``log n``.

    The half-width is the 95% t-interval of the slope. Within
    ``BOUNDARY_WINDOW`` of a branch boundary the tolerance widens to
    ``BOUNDARY_TOLERANCE`` and the verdict is labelled ``boundary``.
    """
    ns = np.asarray(ns, dtype=float)
    vals = np.asarray(values, dtype=float)
    if ns.shape != vals.shape or len(ns) < MIN_POINTS:
        raise ValueError(f"need at least {MIN_POINTS} matching grid points")
    if np.any(~(vals > 0)):
        raise ValueError("slope fits need strictly positive values")
    if np.any(ns < 2):
        raise ValueError("grid points must be >= 2")
    x = np.log(ns)
    y = np.log(vals) - law.log_power * np.log(x)
    res = stats.linregress(x, y)
    tq = stats.t.ppf(0.975, len(x) - 2)
    resid = y - (res.intercept + res.slope * x)
    if tolerance is None:
        tolerance = BOUNDARY_TOLERANCE if law.near_boundary else DEFAULT_TOLERANCE
    label = "boundary" if law.near_boundary else "interior"
    passed = abs(res.slope - float(law.exponent)) <= tolerance
    return RateVerdict(float(res.slope), float(tq * res.stderr), law, float(tolerance), bool(passed),
                       label, tuple(float(r) for r in resid), float(res.intercept))


def dyadic_grid(lo: int, hi: int) -> list[int]:
    """``[2^lo, ..., 2^hi]``."""
    if not 0 <= lo <= hi:
        raise ValueError(f"bad dyadic range {lo}..{hi}")
    return [2**k for k in range(lo, hi + 1)]


def kappa3_grid(q: int, model: CovarianceModel, ns) -> np.ndarray:
    return np.array([kappa3(ChaosSumSpec(q, int(n), model)) for n in ns])


def kappa4_bracket_grid(q: int, model: CovarianceModel, ns) -> np.ndarray:
    """``(len(ns), 2)`` array of bracket endpoints."""
    return np.array([kappa4_bracket(ChaosSumSpec(q, int(n), model)) for n in ns])


@dataclass(frozen=True)
class RateReport:
    q: int
    hurst: float
    kappa3: RateVerdict | None
    kappa4_lower: RateVerdict
    kappa4_upper: RateVerdict
    data: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        k3 = self.kappa3 is None or self.kappa3.passed
        return k3 and self.kappa4_lower.passed and self.kappa4_upper.passed

    def to_dict(self) -> dict:
        return {"q": self.q, "H": self.hurst,
                "kappa3": self.kappa3.to_dict() if self.kappa3 else None,
                "kappa4_lower": self.kappa4_lower.to_dict(),
                "kappa4_upper": self.kappa4_upper.to_dict(), "passed": self.passed}


def rate_report(q: int, hurst: float, ns3, ns4) -> RateReport:
    """Fit exact ``kappa3`` (even ``q``) and both ``kappa4`` bracket endpoints."""
    model = CovarianceModel.fgn(hurst)
    data = {}
    v3 = None
    if q % 2 == 0:
        vals = kappa3_grid(q, model, ns3)
        v3 = fit_slope(ns3, vals, rate_kappa3(q, hurst))
        data["kappa3"] = (list(ns3), vals)
    br = kappa4_bracket_grid(q, model, ns4)
    law4 = rate_kappa4(q, hurst)
    data["kappa4_lower"] = (list(ns4), br[:, 0])
    data["kappa4_upper"] = (list(ns4), br[:, 1])
    return RateReport(q, float(hurst), v3, fit_slope(ns4, br[:, 0], law4),
                      fit_slope(ns4, br[:, 1], law4), data)


# ---------------------------------------------------------------------------
# kappa4 decaying slower than kappa3


@dataclass(frozen=True)
class SurpriseReport:
    q: int
    hurst: float
    law3: RateLaw
    law4: RateLaw
    gap: Fraction
    surprise: bool
    fitted3: float | None = None
    fitted4: tuple[float, float] | None = None

    @property
    def confirmed(self) -> bool | None:
        """Fitted ``kappa4`` slopes both above the fitted ``kappa3`` slope."""
        if self.fitted3 is None or self.fitted4 is None:
            return None
        return min(self.fitted4) > self.fitted3

    def to_dict(self) -> dict:
        return {"q": self.q, "H": self.hurst, "kappa3_law": self.law3.to_dict(),
                "kappa4_law": self.law4.to_dict(), "gap": str(self.gap),
                "surprise": self.surprise, "fitted_kappa3": self.fitted3,
                "fitted_kappa4": list(self.fitted4) if self.fitted4 else None,
                "confirmed": self.confirmed}


def _dominates(law4: RateLaw, law3: RateLaw) -> bool:
    if law4.exponent != law3.exponent:
        return law4.exponent > law3.exponent
    return law4.log_power > law3.log_power


def surprise_check(q: int, hurst, fitted3: float | None = None,
                   fitted4: tuple[float, float] | None = None) -> SurpriseReport:
    """Compare the ``kappa3`` and ``kappa4`` laws; ``surprise`` means ``kappa4`` decays slower.

    ``gap`` is ``exponent(kappa4) - exponent(kappa3)``.
    """
    if q % 2:
        raise ValueError("the comparison needs even q")
    l3, l4 = rate_kappa3(q, hurst), rate_kappa4(q, hurst)
    return SurpriseReport(q, float(hurst), l3, l4, l4.exponent - l3.exponent,
                          _dominates(l4, l3), fitted3, fitted4)


def surprise_range(q: int, points: int = 2001) -> list[float]:
    """Grid values of ``H`` where the tables predict ``kappa4`` decaying slower."""
    top = 1 - 1 / (2 * q)
    hs = np.linspace(0, top, points + 2)[1:-1]
    return [float(h) for h in hs if surprise_check(q, float(h)).surprise]


def plot_data_csv(ns, values, verdict: RateVerdict) -> str:
    """CSV of ``n, value, fitted, theoretical`` (theory anchored at the first point)."""
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    law = verdict.law
    logs = np.log(np.log(ns)) * law.log_power
    fitted = np.exp(verdict.intercept + verdict.slope * np.log(ns) + logs)
    theory = law(ns)
    theory = theory * values[0] / theory[0]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "value", "fitted", "theoretical"])
    for row in zip(ns, values, fitted, theory):
        w.writerow([f"{v:.17g}" for v in row])
    return buf.getvalue()
