import math

import numpy as np
import pytest

from ckscale import (ARG_U, ARG_V, Add, ConfigurationError, Const, Dx, Mul,
                     ProblemSpec, SamplingPlan, TimeScale, check_convexity,
                     estimate_K, estimate_M)
from ckscale.constants import (DEFAULT_DELTAS, DEFAULT_S_VALUES, analytic_K,
                               analytic_M, majorant_terms)


def monomial_sup(order, s_values, deltas, N=64):
    """Brute-force sup over monomials x^k of delta * |D^order x^k|_s / |x^k|_{s+delta}."""
    best = {}
    for d in deltas:
        for s in s_values:
            if s + d >= 1:
                continue
            for k in range(order, N + 1):
                falling = math.prod(range(k - order + 1, k + 1))
                r = d * falling * s ** (k - order) / (s + d) ** k
                best[d] = max(best.get(d, 0.0), r)
    return best


def spec(A=Const(0), h=Const(0), R=1.0, N=64):
    return ProblemSpec(A, h, R, N)


def test_M_for_derivative_matches_monomial_search():
    est = estimate_M(spec(Dx(ARG_V)))
    oracle = monomial_sup(1, DEFAULT_S_VALUES, DEFAULT_DELTAS)
    assert est.M_est == pytest.approx(max(oracle.values()), rel=1e-12)
    assert 0.9 < est.M_est <= 1.0
    assert est.M_analytic == 1.0
    assert est.divergence_slope is None


def test_M_approaches_one_as_grid_refines():
    coarse = estimate_M(spec(Dx(ARG_V)), SamplingPlan(s_values=(0.1, 0.5), n_random=5))
    fine = estimate_M(spec(Dx(ARG_V)), SamplingPlan(s_values=(1e-4, 0.1, 0.5), n_random=5))
    assert coarse.M_est < fine.M_est <= 1.0
    assert fine.M_est > 0.999


def test_M_for_quasilinear_scales_with_radius():
    est = estimate_M(spec(Mul(ARG_U, Dx(ARG_V)), R=2.0))
    oracle = 2.0 * max(monomial_sup(1, DEFAULT_S_VALUES, DEFAULT_DELTAS).values())
    assert est.M_est == pytest.approx(oracle, rel=1e-12)
    assert est.M_analytic == 2.0


def test_second_derivative_diverges():
    est = estimate_M(spec(Dx(Dx(ARG_V))))
    oracle = monomial_sup(2, DEFAULT_S_VALUES, DEFAULT_DELTAS)
    for d, m in oracle.items():
        assert est.ladder[d] == pytest.approx(m, rel=1e-12)
    assert est.M_analytic is None
    assert -1.2 <= est.divergence_slope <= -0.8


def test_K_examples():
    plan = SamplingPlan(s_values=(0.1, 0.5, 0.99))
    e = estimate_K(spec(h=Const((0, 1))), plan)
    assert e.K_est == 0.99
    assert e.K_analytic == 1.0
    assert estimate_K(spec(h=Const(0))).K_est == 0.0
    e = estimate_K(spec(h=Const((1, 1))), plan)
    assert e.K_analytic == 2.0 and e.K_est == pytest.approx(1.99)


@pytest.mark.parametrize("h", [
    Const((0, 1)), Add(Const((0, 1)), Mul(ARG_U, ARG_U)), Mul(Const((1, -1)), ARG_U),
    TimeScale((0, 2), Add(Const(1), ARG_U)),
])
def test_K_estimate_below_analytic(h):
    s = spec(h=h, R=2.0)
    e = estimate_K(s, SamplingPlan(horizon=0.5))
    assert e.K_analytic is not None
    assert e.K_est <= e.K_analytic * (1 + 1e-12)


@pytest.mark.parametrize("A", [
    Dx(ARG_V), Mul(ARG_U, Dx(ARG_V)), Add(Dx(ARG_V), Mul(Const((0, 1)), ARG_V)),
    TimeScale((1, 1), Mul(Mul(ARG_U, ARG_U), Dx(ARG_V))), Mul(Dx(ARG_U), ARG_V),
    Mul(ARG_V, Dx(ARG_V)),
])
def test_M_estimate_below_analytic(A):
    e = estimate_M(spec(A, R=1.5), SamplingPlan(horizon=0.5, n_random=20))
    assert e.M_analytic is not None
    assert e.M_est <= e.M_analytic * (1 + 1e-12)


def test_majorant_terms():
    assert majorant_terms(Dx(Dx(ARG_V)), 1.0, 1.0) == {(1, 2): 4.0}
    assert majorant_terms(Dx(Const((1, 2, 3))), 1.0, 1.0) == {(0, 0): 8.0}
    assert majorant_terms(TimeScale((1, 1), ARG_U), 3.0, 0.5) == {(0, 0): 4.5}
    assert analytic_M(spec(Add(Const(1), ARG_V))) is None
    assert analytic_M(spec(Const(0))) == 0.0
    assert analytic_K(spec(h=Dx(ARG_U))) is None


def test_estimators_monotone_under_refinement():
    A = Mul(ARG_U, Dx(ARG_V))
    coarse = SamplingPlan(s_values=(0.3, 0.6), deltas=(0.1,), n_random=10)
    fine = SamplingPlan(s_values=(0.1, 0.3, 0.6, 0.8), deltas=(0.2, 0.1, 0.05), n_random=10)
    assert estimate_M(spec(A), fine).M_est >= estimate_M(spec(A), coarse).M_est
    h = Add(Const((0, 1)), ARG_U)
    assert estimate_K(spec(h=h), fine).K_est >= estimate_K(spec(h=h), coarse).K_est


def test_empty_plans_rejected():
    with pytest.raises(ConfigurationError):
        SamplingPlan(s_values=())
    with pytest.raises(ConfigurationError):
        estimate_M(spec(Dx(ARG_V)), SamplingPlan(s_values=(0.95,), deltas=(0.1,)))


@pytest.mark.parametrize("A", [Mul(ARG_U, Dx(ARG_V)), Dx(ARG_V)])
def test_convexity_for_linear_trees(A):
    rep = check_convexity(spec(A, R=2.0), samples=1000, seed=0)
    assert rep.linear_in_v
    assert rep.max_violation <= 1e-12
    assert not rep.refuted


def test_convexity_report_for_quadratic_tree():
    s = spec(Mul(Dx(ARG_V), Dx(ARG_V)), R=2.0)
    rep = check_convexity(s, samples=10_000, seed=0)
    again = check_convexity(s, samples=10_000, seed=0)
    assert rep.max_violation == again.max_violation
    assert math.isfinite(rep.max_violation)
    assert not rep.linear_in_v
    w = rep.worst
    assert rep.max_violation == pytest.approx(w["lhs"] - w["rhs"])
