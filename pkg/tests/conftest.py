import numpy as np
import pytest

from ckscale import ARG_U, ARG_V, Const, Dx, Mul, ProblemSpec
from ckscale.solver import ScalePath, apply_F, check_S

TRANSPORT = ProblemSpec(Dx(ARG_V), Const((0, 1)), 2.0, 64, "transport")
BURGERS = ProblemSpec(Mul(ARG_U, Dx(ARG_V)), Const((0, 1)), 2.0, 64, "burgers")
HEAT = ProblemSpec(Dx(Dx(ARG_V)), Const((0, 1)), 1.0, 64, "heat")


@pytest.fixture
def transport():
    return TRANSPORT


@pytest.fixture
def burgers():
    return BURGERS


def seeded_S_paths(problem, frame, grid, times, count, seed=0, max_tries=2000):
    """Paths in S built as multiples of Picard iterates plus t-linear noise."""
    rng = np.random.default_rng(seed)
    iterates = [ScalePath.zero(times, problem.N)]
    for _ in range(3):
        iterates.append(apply_F(problem, frame, iterates[-1]))
    found = []
    k = np.arange(problem.N + 1)
    for _ in range(max_tries):
        base = iterates[rng.integers(1, len(iterates))]
        noise = rng.standard_normal(problem.N + 1) * 0.5 ** k * rng.uniform(0, 0.3)
        values = rng.uniform(-1.2, 1.2) * base.values + np.outer(times, noise)
        path = ScalePath(times, values)
        if check_S(path, problem, frame, grid).in_S:
            found.append(path)
            if len(found) == count:
                return found
    raise RuntimeError(f"only {len(found)} of {count} sampled paths lie in S")


_criteria = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_criterion_" in report.nodeid:
        _criteria[report.nodeid.split("::")[-1]] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_criteria):
        verdict = "PASS" if _criteria[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}")
