import functools

import pytest

from chaosrate import simulate
from chaosrate.covariance import CovarianceModel
from chaosrate.cumulants import ChaosSumSpec

MC_SEED = 20240611
MC_REPS = 100_000

_ACCEPTANCE = []


@functools.lru_cache(maxsize=None)
def mc_samples(q: int, hurst: float, n: int, reps: int = MC_REPS, seed: int = MC_SEED):
    """Shared Monte Carlo draws of F_n (cached across test modules)."""
    model = CovarianceModel.fgn(hurst)
    spec = ChaosSumSpec(q, n, model)
    plan = simulate.build_plan(model, n, seed)
    return spec, simulate.sample_Fn(plan, spec, reps, seed)


@pytest.fixture
def acceptance_log():
    def record(criterion: int, passed: bool, detail: str):
        line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE.append((criterion, line))
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE):
        terminalreporter.write_line(line)
