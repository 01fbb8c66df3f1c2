"""Index sums over products of symmetric Toeplitz matrices.

Every cumulant of a Hermite partial sum reduces to one of three shapes of
sums over indices in ``[0, n)``, each factor being ``c(i - j)`` for some
symmetric sequence ``c`` (a power of the covariance):

* triangle  ``sum_{j,k,l} c(k-l) c(k-j) c(l-j)``
* 4-cycle   ``sum_{i,j,k,l} a(k-l) a(i-j) b(k-i) b(l-j) = tr(T_a T_b T_a T_b)``
* complete graph on four vertices (``k4_sum``), one sequence per perfect
  matching.

Each shape has a direct matrix route and a lag-reduced route where the
summand depends only on index differences and the number of base points
``n - span`` (clipped at zero) multiplies it. Inputs are the one-sided
sequences ``c(0), ..., c(n-1)``.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import toeplitz

_ROW_BLOCK = 256


def span_weight(n: int, *lags):
    """Number of base points ``b`` with ``b`` and every ``b + lag`` in ``[0, n)``."""
    hi = np.zeros(np.broadcast(*lags).shape, dtype=np.int64)
    lo = hi.copy()
    for lag in lags:
        hi = np.maximum(hi, lag)
        lo = np.minimum(lo, lag)
    return np.maximum(n - (hi - lo), 0)


def trapezoid_weight(n: int, *lags):
    """The normalised counting weight ``span_weight / n``; 1 at zero lags."""
    return span_weight(n, *lags) / n


def _full(c: np.ndarray) -> np.ndarray:
    """Two-sided sequence indexed by lag + n - 1."""
    return np.concatenate([c[:0:-1], c])


def toeplitz_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dense ``T_a @ T_b`` in ``O(n^2)`` via the diagonal recurrence.

    Moving one step down a diagonal adds one boundary term and drops the
    other: ``P[k+1, j+1] = P[k, j] + a(k+1) b(j+1) - a(n-1-k) b(n-1-j)``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = len(a)
    if len(b) != n:
        raise ValueError("sequences must have equal length")
    P = np.empty((n, n))
    P[0, :] = np.convolve(a, _full(b))[n - 1: 2 * n - 1]
    first_col = np.convolve(b, _full(a))[n - 1: 2 * n - 1]
    if n == 1:
        return P
    u = a[1:]
    v = b[1:]
    u_back = a[n - 1: 0: -1]
    v_back = b[n - 1: 0: -1]
    for k in range(n - 1):
        row = P[k, :-1] + u[k] * v - u_back[k] * v_back
        P[k + 1, 1:] = row
        P[k + 1, 0] = first_col[k + 1]
    return P


def cycle_trace(a: np.ndarray, b: np.ndarray) -> float:
    """``tr(T_a T_b T_a T_b)`` from one Toeplitz product (row-blocked)."""
    P = toeplitz_product(a, b)
    n = len(a)
    total = 0.0
    for s in range(0, n, _ROW_BLOCK):
        blk = slice(s, min(s + _ROW_BLOCK, n))
        total += float(np.sum(P[blk, :] * P[:, blk].T))
    return total


def cycle_trace_dense(a: np.ndarray, b: np.ndarray) -> float:
    """``tr(T_a T_b T_a T_b)`` with dense BLAS products (cross-check route)."""
    P = toeplitz(a) @ toeplitz(b)
    return float(np.sum(P * P.T))


def triangle_sum_lags(c: np.ndarray) -> float:
    """``sum_{j,k,l in [0,n)} c(k-l) c(k-j) c(l-j)`` as a weighted double-lag sum.

    With ``j`` as base point the summand is ``c(x-y) c(x) c(y)`` over lags
    ``|x|, |y| < n``, multiplied by the count of admissible base points.
    The summand and weight are invariant under ``(x, y) -> (-x, -y)``, so
    rows ``x > 0`` are counted twice and ``x < 0`` skipped.
    """
    c = np.asarray(c, dtype=float)
    n = len(c)
    lags = np.arange(-(n - 1), n)
    cl = c[np.abs(lags)]
    total = 0.0
    for s in range(0, n, _ROW_BLOCK):
        x = np.arange(s, min(s + _ROW_BLOCK, n))
        diff = np.minimum(np.abs(x[:, None] - lags[None, :]), n - 1)
        w = span_weight(n, x[:, None], lags[None, :])
        rows = (w * c[diff]) @ cl * c[x]
        rows[x > 0] *= 2.0
        total += float(np.sum(rows))
    return total


def triangle_sum_trace(c: np.ndarray) -> float:
    """Same triangle sum as ``sum(T_c * (T_c T_c))`` (cross-check route)."""
    c = np.asarray(c, dtype=float)
    n = len(c)
    P = toeplitz_product(c, c)
    idx = np.arange(n)
    total = 0.0
    for s in range(0, n, _ROW_BLOCK):
        rows = idx[s: s + _ROW_BLOCK, None]
        total += float(np.sum(c[np.abs(rows - idx[None, :])] * P[s: s + _ROW_BLOCK]))
    return total


def k4_sum(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> float:
    """Complete-graph sum ``sum a(1-2) a(3-4) b(1-3) b(2-4) c(1-4) c(2-3)``.

    For a fixed first vertex ``k`` the remaining triple sum is one matrix
    product. Reflection ``k -> n-1-k`` maps symmetric Toeplitz matrices to
    themselves, so only half of the first-vertex values are computed.
    """
    A, B, C = toeplitz(a), toeplitz(b), toeplitz(c)
    n = len(a)
    total = 0.0
    for k in range((n + 1) // 2):
        M = (B[k][:, None] * A) * C[k][None, :]
        inner = np.einsum("ij,ij->i", C @ M, B)
        term = float(A[k] @ inner)
        total += term if 2 * k == n - 1 else 2.0 * term
    return total


def k4_sum_lags(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> float:
    """The complete-graph sum reduced to three lags (``O(n^3)``, small ``n`` only).

    Vertex 1 is the base point, vertices 2, 3, 4 sit at lags ``x, y, z``.
    """
    a, b, c = (np.asarray(s, dtype=float) for s in (a, b, c))
    n = len(a)
    lags = np.arange(-(n - 1), n)
    y = lags[:, None]
    z = lags[None, :]

    def at(seq, lag):
        lag = np.abs(lag)
        return np.where(lag < n, seq[np.minimum(lag, n - 1)], 0.0)

    total = 0.0
    for x in lags:
        w = span_weight(n, x, y, z)
        term = w * at(a, z - y) * at(b, y) * at(b, z - x) * at(c, z) * at(c, y - x)
        total += float(at(a, x) * np.sum(term))
    return total
