"""Stationary unit-variance covariance sequences and their spectral powers.

Three model kinds are supported: fractional Gaussian noise with Hurst index
``H``, white noise, and an explicit finite table (zero beyond its last lag).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

FGN = "fgn"
WHITE = "white"
TABLE = "table"

DEFAULT_TRUNCATION = 2**16
DEFAULT_GRID = 4096

# below this lag the closed form is used directly, above it a series in 1/k
_SERIES_FROM = 8
_SERIES_TERMS = 16


def _fgn_series_coefficients(hurst: float) -> np.ndarray:
    a = 2.0 * hurst
    coef = np.empty(_SERIES_TERMS)
    c = 1.0
    for j in range(1, 2 * _SERIES_TERMS + 1):
        c *= (a - j + 1) / j
        if j % 2 == 0:
            coef[j // 2 - 1] = c
    return coef


def fgn_rho(hurst: float, k):
    """Covariance of fractional Gaussian noise at lag ``k``.

    Large lags use the even series of ``(1+x)^{2H} + (1-x)^{2H} - 2`` in
    ``x = 1/|k|``; the closed form loses about ``k^2`` ulps there.
    """
    if not 0.0 < hurst < 1.0:
        raise ValueError(f"Hurst index must lie in (0, 1), got {hurst}")
    scalar = np.ndim(k) == 0
    k = np.abs(np.asarray(k, dtype=float))
    a = 2.0 * hurst
    out = np.empty_like(k)
    small = k < _SERIES_FROM
    ks = k[small]
    out[small] = 0.5 * (np.abs(ks + 1) ** a - 2 * ks**a + np.abs(ks - 1) ** a)
    kl = k[~small]
    if kl.size:
        x2 = (1.0 / kl) ** 2
        coef = _fgn_series_coefficients(hurst)
        acc = np.zeros_like(kl)
        for c in coef[::-1]:
            acc = acc * x2 + c
        out[~small] = kl**a * x2 * acc
    return float(out) if scalar else out


def rho_asymptotic(hurst: float, k) -> float:
    """Leading-order fGN covariance ``H(2H-1)|k|^{2H-2}`` (diagnostics only)."""
    if hurst == 0.5:
        raise ValueError("the power-law asymptote degenerates at H = 1/2")
    if np.any(np.asarray(k) == 0):
        raise ValueError("the power-law asymptote is undefined at lag 0")
    k = np.abs(np.asarray(k, dtype=float))
    out = hurst * (2 * hurst - 1) * k ** (2 * hurst - 2)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CovarianceModel:
    """A stationary covariance ``rho(k)`` with ``rho(0) = 1``."""

    kind: str
    hurst: float | None = None
    table: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind == FGN:
            if self.hurst is None or not 0.0 < self.hurst < 1.0:
                raise ValueError(f"Hurst index must lie in (0, 1), got {self.hurst}")
        elif self.kind == TABLE:
            vals = self.table
            if not vals:
                raise ValueError("table model needs at least rho(0)")
            if vals[0] != 1.0:
                raise ValueError(f"table model must have rho(0) = 1, got {vals[0]}")
            if any(not math.isfinite(v) or abs(v) > 1.0 for v in vals):
                raise ValueError("table values must be finite with |rho(k)| <= 1")
        elif self.kind != WHITE:
            raise ValueError(f"unknown covariance kind {self.kind!r}")

    @classmethod
    def fgn(cls, hurst: float) -> "CovarianceModel":
        return cls(FGN, hurst=float(hurst))

    @classmethod
    def white_noise(cls) -> "CovarianceModel":
        return cls(WHITE)

    @classmethod
    def from_table(cls, values) -> "CovarianceModel":
        return cls(TABLE, table=tuple(float(v) for v in values))

    @classmethod
    def load_table(cls, path) -> "CovarianceModel":
        """Read a two-column ``lag value`` text file (lags 0, 1, 2, ...)."""
        data = np.loadtxt(Path(path), ndmin=2)
        if data.shape[1] != 2:
            raise ValueError(f"{path}: expected two columns (lag, value)")
        lags = data[:, 0]
        if not np.array_equal(lags, np.arange(len(lags))):
            raise ValueError(f"{path}: lags must start at 0 and be contiguous")
        return cls.from_table(data[:, 1])

    @property
    def label(self) -> str:
        if self.kind == FGN:
            return f"fgn(H={self.hurst:g})"
        if self.kind == TABLE:
            return f"table(len={len(self.table)})"
        return "white"

    def rho(self, k):
        """Covariance at integer lag(s) ``k``; symmetric in ``k``."""
        if self.kind == FGN:
            return fgn_rho(self.hurst, k)
        scalar = np.ndim(k) == 0
        k = np.abs(np.asarray(k, dtype=np.int64))
        if self.kind == WHITE:
            out = (k == 0).astype(float)
        else:
            tab = np.asarray(self.table)
            out = np.where(k < len(tab), tab[np.minimum(k, len(tab) - 1)], 0.0)
        return float(out) if scalar else out

    def rho_seq(self, n: int) -> np.ndarray:
        """``rho(0), ..., rho(n-1)``."""
        return np.asarray(self.rho(np.arange(n)), dtype=float)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == FGN:
            d["hurst"] = self.hurst
        elif self.kind == TABLE:
            d["table"] = list(self.table)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CovarianceModel":
        if d["kind"] == FGN:
            return cls.fgn(d["hurst"])
        if d["kind"] == TABLE:
            return cls.from_table(d["table"])
        return cls.white_noise()


def signed_power(model: CovarianceModel, r: int, n: int) -> np.ndarray:
    """``rho(k)^r`` for ``k = 0..n-1`` and a nonnegative integer ``r``."""
    if int(r) != r or r < 0:
        raise ValueError(f"signed powers need a nonnegative integer exponent, got {r}")
    return model.rho_seq(n) ** int(r)


def abs_power(model: CovarianceModel, p: float, n: int) -> np.ndarray:
    """``|rho(k)|^p`` for ``k = 0..n-1`` and any real ``p > 0``."""
    if p <= 0:
        raise ValueError(f"exponent must be positive, got {p}")
    return np.abs(model.rho_seq(n)) ** float(p)


def lp_partial_norm(model: CovarianceModel, p: float, n: int) -> float:
    """``sum_{|k| < n} |rho(k)|^p``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    vals = abs_power(model, p, n)
    return float(vals[0] + 2.0 * vals[1:].sum())


def tail_bound(model: CovarianceModel, p: float, K: int) -> float:
    """Upper bound on ``2 sum_{k > K} |rho(k)|^p``; ``inf`` when the series diverges.

    For fGN, ``|rho(k)| <= H|2H-1| (k-1)^{2H-2}`` for ``k >= 2`` (second
    difference of ``k^{2H}`` as a double integral), and the sum of
    ``m^{-alpha}`` over ``m >= K`` is at most ``K^{-alpha} + K^{1-alpha}/(alpha-1)``.
    """
    p = float(p)
    if model.kind == WHITE:
        return 0.0
    if model.kind == TABLE:
        tab = np.abs(np.asarray(model.table[K + 1:]))
        return float(2.0 * np.sum(tab**p))
    h = model.hurst
    if h == 0.5:
        return 0.0
    alpha = p * (2.0 - 2.0 * h)
    if alpha <= 1.0:
        return math.inf
    c = (h * abs(2 * h - 1)) ** p
    return 2.0 * c * (K ** -alpha + K ** (1 - alpha) / (alpha - 1))


@dataclass(frozen=True)
class SpectralDensity:
    """Truncated cosine series of ``rho^p`` sampled on ``t_j = 2 pi j / grid``."""

    power: Fraction
    truncation: int
    values: np.ndarray
    tail_bound: float
    coefficients: np.ndarray

    @property
    def grid(self) -> int:
        return len(self.values)

    @property
    def divergent(self) -> bool:
        return not math.isfinite(self.tail_bound)


def spectral_power(model: CovarianceModel, p, K: int = DEFAULT_TRUNCATION,
                   grid: int = DEFAULT_GRID) -> SpectralDensity:
    """Sample ``g_p(t) = rho(0)^p + 2 sum_{k=1}^K rho(k)^p cos(kt)``.

    Integer ``p`` uses signed powers; a fractional ``p`` needs ``rho >= 0``.
    Coefficients are folded modulo ``grid`` before one FFT, so the samples are
    the exact values of the truncated series. A divergent tail is reported
    through ``tail_bound = inf`` rather than raised.
    """
    p = Fraction(p).limit_denominator(1000)
    if p <= 0:
        raise ValueError(f"spectral power must be positive, got {p}")
    if K < 1 or grid < 2:
        raise ValueError("need K >= 1 and grid >= 2")
    rho = model.rho_seq(K + 1)
    if p.denominator == 1:
        coef = rho ** int(p)
    else:
        if np.any(rho < 0):
            raise ValueError("fractional spectral powers need a nonnegative covariance")
        coef = rho ** float(p)
    folded = np.zeros(-(-K // grid) * grid)
    folded[: K] = coef[1:]
    # position k-1 holds lag k; shift so that index m collects lags = m mod grid
    acc = np.roll(folded.reshape(-1, grid).sum(axis=0), 1)
    values = coef[0] + 2.0 * np.fft.fft(acc).real
    return SpectralDensity(p, K, values, tail_bound(model, float(p), K), coef)


def torus_integral(g: SpectralDensity, m: int) -> float:
    """Trapezoid rule for ``int_T g(t)^m dt`` on the sampling grid.

    Exact for the truncated series whenever ``grid > m * K``.
    """
    if int(m) != m or m < 1:
        raise ValueError(f"power must be a positive integer, got {m}")
    return float(2.0 * math.pi * np.mean(g.values ** int(m)))


def alias_free_grid(K: int, m: int) -> int:
    """Smallest power of two exceeding ``m * K``."""
    return 1 << int(m * K).bit_length()
