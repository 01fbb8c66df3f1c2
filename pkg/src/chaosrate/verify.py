"""Self-contained verification checks shared by ``chaosrate verify`` and the test suite."""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass, field

import numpy as np

from . import cumulants as cu
from . import stein, wick
from .covariance import CovarianceModel
from .cumulants import ChaosSumSpec
from .rates import limit_kappa3, limit_kappa4_q2

ORACLE_TOL = 1e-10
CLOSED_FORM_TOL = 1e-12
INEQ_SLACK = 1e-12
STEIN_RESIDUAL_TOL = 1e-7
PAIR_TOL = 1e-9

WHITE_NS = (1, 4, 64, 1024)
ORACLE_QS = (2, 3, 4)
ORACLE_NS = (2, 4, 6)
ORACLE_HS = (0.3, 0.5, 0.7)
INEQ_QS = (2, 4, 6)
INEQ_HS = (0.55, 0.7)
INEQ_NS = (64, 128, 256, 512)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""
    value: float | None = None

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail, "value": self.value}


@dataclass
class VerifyReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def rel_err(a: float, b: float) -> float:
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b))


def oracle_specs():
    return [ChaosSumSpec(q, n, CovarianceModel.fgn(h))
            for q in ORACLE_QS for n in ORACLE_NS for h in ORACLE_HS]


def white_specs():
    return [ChaosSumSpec(2, n, CovarianceModel.fgn(0.5)) for n in WHITE_NS]


def inequality_specs():
    extra = [ChaosSumSpec(q, n, CovarianceModel.fgn(h))
             for q in INEQ_QS for h in INEQ_HS for n in INEQ_NS]
    return white_specs() + oracle_specs() + extra


def check_white_noise() -> Check:
    """``kappa3 = 2 sqrt(2/n)`` and ``kappa4 = 12/n`` for ``q = 2`` white noise."""
    worst = 0.0
    for spec in white_specs():
        n = spec.n
        worst = max(worst, rel_err(cu.kappa3(spec), 2 * math.sqrt(2) / math.sqrt(n)),
                    rel_err(cu.kappa4(spec).value, 12.0 / n))
    return Check("white-noise closed forms", worst <= CLOSED_FORM_TOL,
                 f"worst relative error {worst:.2e} (tol {CLOSED_FORM_TOL:g})", worst)


def oracle_gate(specs=None) -> Check:
    """Engine ``v_n, kappa3, kappa4`` against brute-force diagram sums."""
    specs = oracle_specs() if specs is None else specs
    worst = 0.0
    for spec in specs:
        vn = wick.oracle_variance_vn(spec)
        _, _, k3, k4 = wick.oracle_cumulants(spec, vn)
        worst = max(worst, rel_err(cu.variance_vn(spec), vn),
                    rel_err(cu.kappa3(spec), k3), rel_err(cu.kappa4(spec).value, k4))
    return Check("oracle gate", worst <= ORACLE_TOL,
                 f"{len(specs)} specs, worst relative error {worst:.2e} (tol {ORACLE_TOL:g})", worst)


def _le(a: float, b: float) -> bool:
    return a <= b + INEQ_SLACK * abs(b)


def inequality_violations(spec: ChaosSumSpec) -> list[str]:
    """All inequality failures for one exact-mode spec (empty when everything holds)."""
    q = spec.q
    out = []
    k4 = cu.kappa4(spec).value
    g1 = cu.gamma1_variance(spec)
    if not _le(g1, (q - 1) / (3 * q) * k4):
        out.append(f"{spec}: Var Gamma1 {g1!r} > (q-1)/(3q) kappa4")
    if not _le((q - 1) / (3 * q) * k4, (q - 1) * g1):
        out.append(f"{spec}: (q-1)/(3q) kappa4 > (q-1) Var Gamma1")
    cap = k4 / (math.factorial(q) ** 2 * q * q)
    for r in range(1, q):
        plain = cu.contraction_norm(spec, r)
        sym = cu.sym_contraction_norm(spec, r)
        if not _le(sym, plain):
            out.append(f"{spec}: symmetrised norm r={r} exceeds plain norm")
        if not _le(plain, cap):
            out.append(f"{spec}: contraction norm r={r} exceeds kappa4/(q!^2 q^2)")
    if q % 2 == 0 and not _le(abs(cu.kappa3(spec)), cu.kappa3_bound(spec)):
        out.append(f"{spec}: kappa3 exceeds its covariance bound")
    return out


def check_inequalities(specs=None) -> Check:
    specs = inequality_specs() if specs is None else specs
    bad = [v for s in specs for v in inequality_violations(s)]
    detail = f"{len(specs)} specs, {len(bad)} violations"
    if bad:
        detail += "; first: " + bad[0]
    return Check("inequality suite", not bad, detail, float(len(bad)))


def check_limits_white() -> Check:
    m = CovarianceModel.white_noise()
    e3 = rel_err(limit_kappa3(2, m, K=64), 2 * math.sqrt(2))
    e4 = rel_err(limit_kappa4_q2(m, K=64), 12.0)
    worst = max(e3, e4)
    return Check("white-noise limit constants", worst <= 1e-10,
                 f"2 sqrt 2 and 12 reproduced to {worst:.2e}", worst)


def check_test_pair() -> Check:
    g, h = stein.test_pair()
    se = stein.SQRT_E
    errs = [abs(g.e_f2 - 1 / (3 * se)), abs(g.e_f3), abs(h.e_f2), abs(h.e_f3 + 1 / (4 + 4 * se))]
    worst = max(errs)
    ok = worst <= PAIR_TOL and g.in_class and h.in_class
    return Check("Stein test pair", ok, f"functionals within {worst:.2e} (tol {PAIR_TOL:g})", worst)


def check_stein_residuals(grid=None) -> Check:
    grid = np.linspace(-8.0, 8.0, 33) if grid is None else grid
    worst = max(stein.stein_residual(tf, x) for tf in stein.test_pair() for x in grid)
    return Check("Stein residuals", worst <= STEIN_RESIDUAL_TOL,
                 f"max residual {worst:.2e} on [-8, 8] (tol {STEIN_RESIDUAL_TOL:g})", worst)


@contextlib.contextmanager
def corrupted_d3(factor: float = 1.01):
    """Temporarily scale the third-cumulant coefficient (mutation testing)."""
    original = cu.d3_coefficient
    cu.d3_coefficient = lambda q: original(q) * factor
    cu.clear_caches()
    try:
        yield
    finally:
        cu.d3_coefficient = original
        cu.clear_caches()


def check_mutation() -> Check:
    """The oracle gate must reject a 1% error in ``d3``."""
    specs = [ChaosSumSpec(2, 4, CovarianceModel.fgn(0.7)), ChaosSumSpec(4, 4, CovarianceModel.fgn(0.3))]
    with corrupted_d3():
        gate = oracle_gate(specs)
    return Check("mutation detected", not gate.passed,
                 f"corrupted d3 -> gate {'passed (BAD)' if gate.passed else 'failed'}: {gate.detail}")


def run_verify(include_inequalities: bool = True) -> VerifyReport:
    report = VerifyReport()
    report.checks.append(check_white_noise())
    report.checks.append(oracle_gate())
    if include_inequalities:
        report.checks.append(check_inequalities())
    report.checks.append(check_limits_white())
    report.checks.append(check_test_pair())
    report.checks.append(check_stein_residuals())
    report.checks.append(check_mutation())
    return report
