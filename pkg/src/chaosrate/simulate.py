"""Exact Gaussian path sampling, Monte Carlo draws of ``F_n`` and their statistics.

Paths are drawn by circulant embedding: the covariance ``rho(0..n-1)`` is
extended to a symmetric circulant of size ``m`` whose eigenvalues must be
nonnegative, and ``Re(FFT(sqrt(lambda/m) W))`` with complex white noise ``W``
has exactly the target law on its first ``n`` coordinates.

Replicate ``i`` always draws from its own Philox stream keyed by the seed with
``i`` in the top counter word, so results never depend on batching or on the
number of worker threads.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import cholesky, toeplitz

from .covariance import CovarianceModel
from .cumulants import ChaosSumSpec, variance_vn
from .hermite import hermite_eval
from .stein import TestFunction

MINIMAL = "minimal"
POW2 = "pow2"
EIG_TOL = 1e-9
MIN_REPLICATES = 1000
DEFAULT_REPLICATES = 100_000
_BLOCK = 2048
_SEED_MAX = 2**64


class NotEmbeddableError(ValueError):
    """The circulant extension of the covariance has a negative eigenvalue."""


@dataclass(frozen=True)
class SamplerPlan:
    model: CovarianceModel
    n: int
    embedding: int
    eigenvalues: np.ndarray
    seed: int

    @property
    def scale(self) -> np.ndarray:
        return np.sqrt(np.maximum(self.eigenvalues, 0.0) / self.embedding)


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    se: float
    replicates: int
    seed: int | None = None

    def __post_init__(self):
        if not self.se >= 0:
            raise ValueError(f"standard error must be nonnegative, got {self.se}")
        if self.replicates < 2:
            raise ValueError("an estimate needs at least two replicates")

    def within(self, target: float, n_se: float = 4.0, slack: float = 0.0) -> bool:
        """``|estimate - target| <= n_se * se + slack * |target|``."""
        return abs(self.estimate - target) <= n_se * self.se + slack * abs(target)

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "se": self.se,
                "replicates": self.replicates, "seed": self.seed}


def _check_seed(seed) -> int:
    if seed is None or int(seed) != seed or not 0 <= seed < _SEED_MAX:
        raise ValueError(f"seed must be an integer in [0, 2^64), got {seed!r}")
    return int(seed)


def build_plan(model: CovarianceModel, n: int, seed: int, embedding: str = MINIMAL) -> SamplerPlan:
    """Circulant embedding of size ``2(n-1)`` (``minimal``) or a power of two ``>= 2n``."""
    if int(n) != n or n < 2:
        raise ValueError(f"path length must be an integer >= 2, got {n}")
    seed = _check_seed(seed)
    if embedding == MINIMAL:
        m = 2 * (n - 1)
    elif embedding == POW2:
        m = 1 << (2 * n - 1).bit_length()
    else:
        raise ValueError(f"unknown embedding {embedding!r}")
    half = model.rho_seq(m // 2 + 1)
    row = np.concatenate([half, half[-2:0:-1]])
    eig = np.fft.fft(row).real
    top = float(np.max(eig))
    if float(np.min(eig)) < -EIG_TOL * top:
        raise NotEmbeddableError(
            f"{model.label} at n={n} is not embeddable: smallest circulant eigenvalue "
            f"{np.min(eig):.3g} (largest {top:.3g})")
    eig.setflags(write=False)
    return SamplerPlan(model, int(n), m, eig, seed)


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    """Stream for replicate ``index``; disjoint from every other index."""
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, index]))


def _normals(seed: int, start: int, stop: int, width: int) -> np.ndarray:
    z = np.empty((stop - start, width))
    for row, i in enumerate(range(start, stop)):
        z[row] = replicate_rng(seed, i).standard_normal(width)
    return z


def _block_paths(plan: SamplerPlan, seed: int, start: int, stop: int) -> np.ndarray:
    m = plan.embedding
    z = _normals(seed, start, stop, 2 * m)
    w = (z[:, :m] + 1j * z[:, m:]) * plan.scale
    return np.fft.fft(w, axis=1).real[:, : plan.n]


def _blocks(count: int):
    return [(s, min(s + _BLOCK, count)) for s in range(0, count, _BLOCK)]


def _map_blocks(func, count: int, workers: int | None):
    blocks = _blocks(count)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: func(*b), blocks))
    else:
        parts = [func(*b) for b in blocks]
    return parts


def sample_paths(plan: SamplerPlan, replicates: int, seed: int | None = None,
                 workers: int | None = None) -> np.ndarray:
    """``(replicates, n)`` array of exact Gaussian paths."""
    seed = plan.seed if seed is None else _check_seed(seed)
    parts = _map_blocks(lambda s, e: _block_paths(plan, seed, s, e), int(replicates), workers)
    return np.concatenate(parts, axis=0) if parts else np.empty((0, plan.n))


def sample_paths_cholesky(model: CovarianceModel, n: int, replicates: int, seed: int) -> np.ndarray:
    """Dense Cholesky sampler, ``n <= 256`` (cross-check for the circulant route)."""
    if n > 256:
        raise ValueError("the Cholesky cross-check is limited to n <= 256")
    seed = _check_seed(seed)
    L = cholesky(toeplitz(model.rho_seq(n)), lower=True)
    return _normals(seed, 0, int(replicates), n) @ L.T


def sample_Fn(plan: SamplerPlan, spec: ChaosSumSpec, replicates: int = DEFAULT_REPLICATES,
              seed: int | None = None, workers: int | None = None) -> np.ndarray:
    """Independent draws of ``F_n = (n v_n)^{-1/2} sum_k H_q(X_k)``."""
    if plan.n != spec.n or plan.model != spec.model:
        raise ValueError("sampler plan and chaos spec disagree on model or length")
    seed = plan.seed if seed is None else _check_seed(seed)
    norm = 1.0 / math.sqrt(spec.n * variance_vn(spec))

    def block(s, e):
        return hermite_eval(spec.q, _block_paths(plan, seed, s, e)).sum(axis=1) * norm

    parts = _map_blocks(block, int(replicates), workers)
    return np.concatenate(parts) if parts else np.empty(0)


# ---------------------------------------------------------------------------
# statistics


def _kstats(s1, s2, s3, s4, n):
    """Unbiased cumulant estimators ``k2, k3, k4`` from power sums."""
    k2 = (n * s2 - s1**2) / (n * (n - 1))
    k3 = (2 * s1**3 - 3 * n * s1 * s2 + n**2 * s3) / (n * (n - 1) * (n - 2))
    k4 = (-6 * s1**4 + 12 * n * s1**2 * s2 - 3 * n * (n - 1) * s2**2
          - 4 * n * (n + 1) * s1 * s3 + n**2 * (n + 1) * s4) / (n * (n - 1) * (n - 2) * (n - 3))
    return k2, k3, k4


def k_statistics(samples) -> tuple[float, float, float]:
    """``(k2, k3, k4)`` of a sample."""
    x = np.asarray(samples, dtype=float)
    x = x - x.mean()
    n = len(x)
    if n < 4:
        raise ValueError("k-statistics up to order four need at least four samples")
    return tuple(float(v) for v in _kstats(*(np.sum(x**r) for r in (1, 2, 3, 4)), n))


def _jackknife_kstats(samples, seed=None) -> tuple[McEstimate, McEstimate, McEstimate]:
    x = np.asarray(samples, dtype=float)
    n = len(x)
    if n < MIN_REPLICATES:
        raise ValueError(f"cumulant estimates need at least {MIN_REPLICATES} replicates, got {n}")
    x = x - x.mean()
    powers = [x**r for r in (1, 2, 3, 4)]
    full = _kstats(*(float(p.sum()) for p in powers), n)
    loo = _kstats(*(p.sum() - p for p in powers), n - 1)
    out = []
    for est, vals in zip(full, loo):
        se = math.sqrt((n - 1) / n * float(np.sum((vals - vals.mean()) ** 2)))
        out.append(McEstimate(float(est), se, n, seed))
    return tuple(out)


def empirical_cumulants(samples, seed: int | None = None) -> tuple[McEstimate, McEstimate]:
    """k-statistics ``k3, k4`` with delete-one jackknife standard errors."""
    _, k3, k4 = _jackknife_kstats(samples, seed)
    return k3, k4


def empirical_variance(samples, seed: int | None = None) -> McEstimate:
    """Unbiased variance ``k2`` with its jackknife standard error."""
    return _jackknife_kstats(samples, seed)[0]


def empirical_abs_mean(samples, seed: int | None = None) -> McEstimate:
    """``E|F|`` with its standard error; ``1 + E|F|`` is the constant of the third-cumulant bound."""
    x = np.abs(np.asarray(samples, dtype=float))
    if len(x) < 2:
        raise ValueError("need at least two samples")
    return McEstimate(float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x))), len(x), seed)


def empirical_gap(samples, tf: TestFunction, seed: int | None = None) -> McEstimate:
    """Signed ``E[h(N)] - mean h(samples)``, the quantity the Edgeworth expansion predicts."""
    vals = np.asarray(tf.h(np.asarray(samples, dtype=float)), dtype=float)
    if len(vals) < 2:
        raise ValueError("need at least two samples")
    se = float(vals.std(ddof=1) / math.sqrt(len(vals)))
    return McEstimate(tf.mean - float(vals.mean()), se, len(vals), seed)


def empirical_distance_lower(samples, tf: TestFunction, seed: int | None = None) -> McEstimate:
    """``|mean h(samples) - E[h(N)]|``: a lower bound on the smooth distance to ``N``.

    Only functions certified to satisfy ``sup |h''| <= 1`` are accepted, since
    otherwise the estimate bounds nothing. A finite family of test functions
    never yields the distance itself.
    """
    if not tf.in_class:
        raise ValueError(f"test function {tf.name!r} is not certified to have sup |h''| <= 1")
    gap = empirical_gap(samples, tf, seed)
    return McEstimate(abs(gap.estimate), gap.se, gap.replicates, seed)


# ---------------------------------------------------------------------------
# sample dumps


def write_samples(path, samples, spec: ChaosSumSpec, seed: int) -> tuple[Path, Path]:
    """Little-endian float64 dump plus a JSON sidecar (spec, seed, count)."""
    path = Path(path)
    data = np.ascontiguousarray(samples, dtype="<f8")
    path.write_bytes(data.tobytes())
    sidecar = path.with_name(path.name + ".json")
    meta = {"spec": spec.to_dict(), "seed": int(seed), "count": int(data.size), "dtype": "<f8"}
    sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path, sidecar


def read_samples(path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    meta = json.loads(path.with_name(path.name + ".json").read_text())
    data = np.frombuffer(path.read_bytes(), dtype="<f8")
    if data.size != meta["count"]:
        raise ValueError(f"{path}: sidecar declares {meta['count']} values, file has {data.size}")
    return data.astype(float), meta
