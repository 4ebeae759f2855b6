"""Acceptance criteria, one test per criterion, each at its stated tolerance.

Run ``pytest tests/test_acceptance.py -v``; the terminal summary lists one
PASS/FAIL line per criterion.
"""
import math
from pathlib import Path

import numpy as np

from ckscale import ARG_U, ARG_V, AnalyticElement, Const, Dx, Mul, ProblemSpec, TimeScale
from ckscale.cli import main, run_command
from ckscale.constants import check_convexity, estimate_M
from ckscale.oracles import heat_probe, taylor_ck
from ckscale.problemfile import load_problem, parse_problem, serialize_problem
from ckscale.solver import (ExistenceFrame, ScalePath, SeminormGrid,
                            SolverConfig, apply_F, build_frame, check_S,
                            compute_a, solve_picard, time_grid, verify_kn)

from conftest import BURGERS, TRANSPORT, seeded_S_paths

PROBLEMS = Path(__file__).resolve().parents[1] / "demos" / "problems"
LADDER = (0.2, 0.1, 0.05, 0.025)


def test_criterion_1_scale_axioms():
    rng = np.random.default_rng(0)
    N = 64
    vectors = [AnalyticElement(rng.standard_normal(N + 1) * rng.uniform(0.5, 1.5) ** np.arange(N + 1))
               for _ in range(1000)]
    s = rng.uniform(1e-3, 0.99, 100)
    s_hi = s + rng.uniform(0, 1 - s)
    violations = 0
    for u in vectors:
        for lo, hi in zip(s, s_hi):
            violations += u.norm(lo) > u.norm(hi)
    assert violations == 0

    times = np.linspace(0, 1, 51)
    for _ in range(100):
        vals = rng.standard_normal((51, N + 1)) * 0.9 ** np.arange(N + 1)
        vals[0] = 0
        path = ScalePath(times, vals)
        tau, dt = rng.uniform(0, 1, 2)
        lo, hi = sorted(rng.uniform(0.01, 0.99, 2))
        assert path.seminorm(tau, lo) <= path.seminorm(tau, hi)
        assert path.seminorm(tau * (1 - dt), lo) <= path.seminorm(tau, lo)


def test_criterion_2_sharp_ovsjannikov_constant():
    M = estimate_M(ProblemSpec(Dx(ARG_V), Const(0), 1.0, 64)).M_est
    assert 0.90 < M <= 1 + 1e-9

    rng = np.random.default_rng(1)
    k = rng.integers(0, 65, 10_000)
    s = rng.uniform(0, 1, 10_000)
    d = rng.uniform(0, 1 - s)
    lhs = d * k * s ** np.maximum(k - 1, 0)
    assert np.count_nonzero(lhs > (s + d) ** k) == 0


def test_criterion_3_transport():
    frame, _ = build_frame(TRANSPORT)
    rep = solve_picard(TRANSPORT, frame, config=SolverConfig(tol=1e-10))
    assert rep.converged and rep.iterations <= 3 and rep.residual <= 1e-10
    t = rep.path.times
    exact = np.zeros_like(rep.path.values)
    exact[:, 0] = t ** 2 / 2
    exact[:, 1] = t
    assert np.max(np.abs(rep.path.values - exact)) <= 1e-10


def test_criterion_4_burgers():
    frame, _ = build_frame(BURGERS)
    rep = solve_picard(BURGERS, frame, config=SolverConfig(tau_frac=0.5, step=1e-3))
    assert rep.converged
    times = rep.path.times
    assert math.isclose(times[-1], 0.5 * frame.tau_max)
    exact = ScalePath.from_function(times, lambda t: (0.0, math.tan(t)), 64)
    err = rep.path - exact
    worst = max(err.seminorm(tau, s) / exact.seminorm(tau, s) for tau, s in rep.grid.points)
    assert worst <= 1e-6

    sol = taylor_ck(BURGERS, 6)
    for m, c in ((1, 1.0), (3, 1 / 3), (5, 2 / 15)):
        assert np.max(np.abs(sol.term(m).coeffs - AnalyticElement.monomial(1, 64, c).coeffs)) <= 1e-12


def test_criterion_5_invariant_set():
    frame = ExistenceFrame.from_constants(2.0, 1.0, BURGERS.R, a=compute_a(2.0, 1.0))
    horizon = 0.5 * frame.tau_max
    grid = SeminormGrid.build(frame, horizon, theta=0.1)
    times = time_grid(horizon, horizon / 100)
    zero = ScalePath.zero(times, 64)
    assert check_S(zero, BURGERS, frame, grid).in_S
    assert check_S(apply_F(BURGERS, frame, zero), BURGERS, frame, grid).in_S
    paths = seeded_S_paths(BURGERS, frame, grid, times, 100, seed=0)
    failures = [i for i, p in enumerate(paths)
                if not check_S(apply_F(BURGERS, frame, p), BURGERS, frame, grid).in_S]
    assert failures == []


def test_criterion_6_key_estimate():
    for M, K in ((1.0, 1.0), (2.0, 1.0), (1.0, 0.0), (0.5, 3.0)):
        frame = ExistenceFrame.from_constants(M, K, 1.0)
        rep = verify_kn(frame, samples=1000, margin=0.05, seed=0)
        assert len(rep.points) == 1000
        assert rep.max_ratio <= 1.0 + 1e-9


def test_criterion_7_negative_control():
    assert -1.2 <= heat_probe(LADDER) <= -0.8
    assert run_command("verify", PROBLEMS / "heat.ck").code == 3
    assert heat_probe(LADDER, Dx(ARG_V)) > -0.3


def test_criterion_8_convexity():
    specs = [TRANSPORT, BURGERS,
             ProblemSpec(Dx(Dx(ARG_V)), Const((0, 1)), 1.0, 32),
             ProblemSpec(TimeScale((1, 1), Mul(ARG_U, Dx(ARG_V))), Const(1), 1.0, 32)]
    for spec in specs:
        assert spec.A.linear_in_v
        rep = check_convexity(spec, samples=1000, seed=0)
        assert rep.samples == 1000
        assert rep.max_violation <= 1e-12


def test_criterion_9_cli_contract(tmp_path):
    for name in ("transport", "burgers", "heat", "forced"):
        pf = load_problem(PROBLEMS / f"{name}.ck")
        assert parse_problem(serialize_problem(pf)) == pf

    outs = []
    for i in range(2):
        out = tmp_path / f"run{i}.csv"
        main(["solve", "--problem", str(PROBLEMS / "transport.ck"), "--seed", "7", "--out", str(out)])
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] and len(outs[0]) > 0

    assert run_command("solve", PROBLEMS / "transport.ck").code == 0
    assert run_command("solve", PROBLEMS / "transport.ck", max_iter=1).code == 2
    assert run_command("verify", PROBLEMS / "heat.ck").code == 3
