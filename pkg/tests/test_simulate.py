import math

import numpy as np
import pytest
from scipy import stats

from chaosrate import simulate as sim
from chaosrate import stein
from chaosrate.covariance import CovarianceModel
from chaosrate.cumulants import ChaosSumSpec

WHITE = CovarianceModel.white_noise()


def test_white_noise_eigenvalues_are_one():
    plan = sim.build_plan(WHITE, 33, seed=1)
    assert plan.embedding == 64
    np.testing.assert_allclose(plan.eigenvalues, 1.0, atol=1e-14)


@pytest.mark.parametrize("hurst", [0.3, 0.7])
@pytest.mark.parametrize("embedding", [sim.MINIMAL, sim.POW2])
def test_fgn_embeddable(hurst, embedding):
    plan = sim.build_plan(CovarianceModel.fgn(hurst), 1024, seed=0, embedding=embedding)
    assert plan.eigenvalues.min() >= -sim.EIG_TOL * plan.eigenvalues.max()
    assert plan.embedding >= 2 * 1023


def test_pow2_size():
    assert sim.build_plan(WHITE, 5, 0, sim.POW2).embedding == 16
    assert sim.build_plan(WHITE, 8, 0, sim.POW2).embedding == 16


def test_non_embeddable_table_rejected():
    model = CovarianceModel.from_table([1.0, 0.9, 0.9])
    with pytest.raises(sim.NotEmbeddableError, match="not embeddable"):
        sim.build_plan(model, 64, seed=0)


@pytest.mark.parametrize("kwargs", [
    {"n": 1}, {"n": 2.5}, {"seed": -1}, {"seed": 2**64}, {"seed": None}, {"seed": 1.5},
    {"embedding": "fast"},
])
def test_plan_argument_guards(kwargs):
    args = {"model": WHITE, "n": 16, "seed": 3, **kwargs}
    with pytest.raises(ValueError):
        sim.build_plan(**args)


def test_paths_bit_identical_and_worker_invariant():
    plan = sim.build_plan(CovarianceModel.fgn(0.7), 100, seed=11)
    a = sim.sample_paths(plan, 5000)
    b = sim.sample_paths(plan, 5000)
    c = sim.sample_paths(plan, 5000, workers=3)
    assert a.shape == (5000, 100)
    assert a.tobytes() == b.tobytes() == c.tobytes()


def test_prefix_property():
    plan = sim.build_plan(CovarianceModel.fgn(0.3), 20, seed=5)
    long = sim.sample_paths(plan, 3000)
    short = sim.sample_paths(plan, 1000)
    np.testing.assert_array_equal(long[:1000], short)


def test_seed_changes_stream():
    plan = sim.build_plan(WHITE, 8, seed=5)
    assert not np.array_equal(sim.sample_paths(plan, 10), sim.sample_paths(plan, 10, seed=6))


def test_zero_replicates():
    plan = sim.build_plan(WHITE, 8, seed=5)
    assert sim.sample_paths(plan, 0).shape == (0, 8)


@pytest.mark.parametrize("hurst", [0.3, 0.8])
def test_circulant_matches_cholesky_covariance(hurst):
    model = CovarianceModel.fgn(hurst)
    n, reps = 12, 40000
    target = np.array([[model.rho(abs(i - j)) for j in range(n)] for i in range(n)])
    circ = sim.sample_paths(sim.build_plan(model, n, seed=2), reps)
    chol = sim.sample_paths_cholesky(model, n, reps, seed=3)
    # entrywise standard error of a sample covariance is at most sqrt(2/reps)
    tol = 5 * math.sqrt(2 / reps)
    for paths in (circ, chol):
        np.testing.assert_allclose(paths.T @ paths / reps, target, atol=tol)


def test_cholesky_size_limit():
    with pytest.raises(ValueError):
        sim.sample_paths_cholesky(WHITE, 257, 10, seed=0)


def test_lag_one_autocovariance():
    model = CovarianceModel.fgn(0.75)
    paths = sim.sample_paths(sim.build_plan(model, 64, seed=9), 4000)
    lag1 = float(np.mean(paths[:, 1:] * paths[:, :-1]))
    assert lag1 == pytest.approx(model.rho(1), abs=0.01)


def test_fn_has_unit_variance_and_q2_skew():
    spec = ChaosSumSpec(2, 16, WHITE)
    plan = sim.build_plan(WHITE, 16, seed=4)
    f = sim.sample_Fn(plan, spec, 20000)
    var = sim.empirical_variance(f)
    assert var.within(1.0)
    k3, _ = sim.empirical_cumulants(f)
    assert k3.within(math.sqrt(8 / 16))


def test_fn_plan_mismatch():
    plan = sim.build_plan(WHITE, 16, seed=4)
    with pytest.raises(ValueError):
        sim.sample_Fn(plan, ChaosSumSpec(2, 17, WHITE), 10)


def test_k_statistics_match_scipy():
    x = np.random.default_rng(0).gamma(2.0, size=5000)
    k2, k3, k4 = sim.k_statistics(x)
    assert k2 == pytest.approx(stats.kstat(x, 2), rel=1e-10)
    assert k3 == pytest.approx(stats.kstat(x, 3), rel=1e-10)
    assert k4 == pytest.approx(stats.kstat(x, 4), rel=1e-9)
    with pytest.raises(ValueError):
        sim.k_statistics([1.0, 2.0, 3.0])


def test_gaussian_cumulants_vanish():
    x = np.random.default_rng(1).standard_normal(50000)
    k3, k4 = sim.empirical_cumulants(x, seed=1)
    assert k3.within(0.0) and k4.within(0.0)
    assert 0 < k3.se < 0.02 and k4.se > 0
    assert k3.seed == 1


def test_abs_mean_of_gaussian():
    x = np.random.default_rng(5).standard_normal(40000)
    est = sim.empirical_abs_mean(x)
    assert est.within(math.sqrt(2 / math.pi))
    with pytest.raises(ValueError):
        sim.empirical_abs_mean([1.0])


def test_cumulants_need_enough_replicates():
    with pytest.raises(ValueError, match="at least"):
        sim.empirical_cumulants(np.zeros(sim.MIN_REPLICATES - 1))


def test_distance_lower_requires_certified_function():
    raw = stein.make_test_function("x^2/2", lambda x: x**2 / 2, lambda x: x,
                                   lambda x: np.ones_like(x))
    x = np.random.default_rng(2).standard_normal(4000)
    with pytest.raises(ValueError, match="certified"):
        sim.empirical_distance_lower(x, raw)
    assert sim.empirical_gap(x, raw).within(0.0)


def test_distance_lower_for_gaussian_samples():
    g, h = stein.test_pair()
    x = np.random.default_rng(3).standard_normal(40000)
    for tf in (g, h):
        est = sim.empirical_distance_lower(x, tf)
        assert est.estimate >= 0 and est.within(0.0)


def test_dump_round_trip(tmp_path):
    spec = ChaosSumSpec(2, 8, WHITE)
    data = np.random.default_rng(4).standard_normal(123)
    path, sidecar = sim.write_samples(tmp_path / "f.bin", data, spec, seed=42)
    assert sidecar.name == "f.bin.json"
    assert path.stat().st_size == 123 * 8
    back, meta = sim.read_samples(path)
    np.testing.assert_array_equal(back, data)
    assert meta["seed"] == 42 and meta["count"] == 123


def test_dump_detects_truncation(tmp_path):
    spec = ChaosSumSpec(2, 8, WHITE)
    path, _ = sim.write_samples(tmp_path / "f.bin", np.ones(10), spec, seed=1)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ValueError, match="declares"):
        sim.read_samples(path)


def test_mc_estimate_validation():
    est = sim.McEstimate(1.0, 0.1, 100, seed=7)
    assert est.within(1.35) and not est.within(1.5)
    assert est.within(2.0, n_se=0, slack=0.5)
    assert est.to_dict() == {"estimate": 1.0, "se": 0.1, "replicates": 100, "seed": 7}
    with pytest.raises(ValueError):
        sim.McEstimate(1.0, -0.1, 100)
    with pytest.raises(ValueError):
        sim.McEstimate(1.0, 0.1, 1)
