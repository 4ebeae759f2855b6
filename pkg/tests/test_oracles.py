import math

import numpy as np
import pytest

from ckscale import (ARG_U, ARG_V, AnalyticElement, Const, ConfigurationError,
                     Dx, Mul, ProblemSpec, StructuralError)
from ckscale.oracles import exact_transport, heat_probe, taylor_ck
from ckscale.solver import ExistenceFrame

from conftest import BURGERS, TRANSPORT


def test_exact_transport_examples():
    u = exact_transport(AnalyticElement([1.0], 4), 0.3)
    assert u == AnalyticElement([0.3], 4)
    # g = x: G = x^2/2, G(x+t) - G(x) = t x + t^2/2
    u = exact_transport(AnalyticElement([0, 1.0], 4), 0.05)
    assert np.allclose(u.coeffs, [0.00125, 0.05, 0, 0, 0], rtol=0, atol=1e-18)
    assert exact_transport(AnalyticElement([0, 1.0], 4), 0.0) == AnalyticElement.zero(4)


def test_taylor_burgers_is_x_tan_t():
    sol = taylor_ck(BURGERS, 9)
    x_tan = {1: 1, 3: 1 / 3, 5: 2 / 15, 7: 17 / 315, 9: 62 / 2835}
    for m in range(10):
        expected = np.zeros(65)
        expected[1] = x_tan.get(m, 0.0)
        assert np.max(np.abs(sol.term(m).coeffs - expected)) < 1e-12
    assert sol.radius() == pytest.approx(math.pi / 2, rel=0.05)


def test_taylor_trivial_cases():
    zero = taylor_ck(ProblemSpec(Const(0), Const(0), 1.0, 8))
    assert not np.any(zero.coeffs)
    tr = taylor_ck(TRANSPORT, 6)
    assert np.allclose(tr.term(1).coeffs[:3], [0, 1, 0])
    assert np.allclose(tr.term(2).coeffs[:3], [0.5, 0, 0])
    assert not np.any(tr.coeffs[3:])
    assert tr.radius() == math.inf


def test_taylor_agrees_with_exact_transport():
    rng = np.random.default_rng(1)
    g = AnalyticElement(rng.standard_normal(9) * 0.5 ** np.arange(9), 16)
    problem = ProblemSpec(Dx(ARG_V), Const(g.coeffs), 2.0, 16)
    sol = taylor_ck(problem, 12)
    tmax = 0.5 * ExistenceFrame.from_constants(1, 1, 2.0).tau_max
    for t in np.linspace(0, tmax, 7):
        d = sol.evaluate(t) - exact_transport(g, t)
        assert np.max(np.abs(d.coeffs)) < 1e-12


def test_taylor_rejects_nonlinear_v():
    p = ProblemSpec(Mul(Dx(ARG_V), Dx(ARG_V)), Const(1), 1.0, 8)
    with pytest.raises(StructuralError):
        taylor_ck(p)
    with pytest.raises(ConfigurationError):
        taylor_ck(BURGERS, 0)


def test_heat_probe_separates_orders():
    ladder = (0.2, 0.1, 0.05, 0.025)
    assert -1.2 <= heat_probe(ladder) <= -0.8
    assert heat_probe(ladder, Dx(ARG_V)) > -0.3
    assert heat_probe(ladder, Mul(ARG_U, Dx(ARG_V)), R=2.0) > -0.3


@pytest.mark.parametrize("ladder", [(0.2, 0.1), (0.1, 0.2, 0.05), (0.2, 0.2, 0.1), (2.0, 0.5, 0.1)])
def test_heat_probe_rejects_bad_ladders(ladder):
    with pytest.raises(ConfigurationError):
        heat_probe(ladder)
