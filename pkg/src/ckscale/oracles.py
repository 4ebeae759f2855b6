"""Reference solutions independent of the quadrature-based solver.

``taylor_ck`` expands u(t, x) = sum_m u_m(x) t^m and matches powers of t in
u_t = A(t, u, u) + h(t, u) directly on a 2-D coefficient array, so it shares
no numerics with ``apply_F``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from math import comb

import numpy as np
from scipy.signal import convolve2d

from .constants import SamplingPlan, estimate_M, log_slope
from .errors import ConfigurationError, StructuralError
from .operators import (ARG_V, ArgUNode, ArgVNode, Add, Const, Dx, Mul,
                        OperatorExpr, ProblemSpec, TimeScale)
from .scale import AnalyticElement, batch_norms

__all__ = ["exact_transport", "TimeTaylorSolution", "taylor_ck", "heat_probe"]


def exact_transport(g: AnalyticElement, t: float) -> AnalyticElement:
    """Solution of u_t = u_x + g, u(0) = 0, namely G(x + t) - G(x) with G' = g."""
    N = g.N
    G = np.zeros(N + 2)
    G[1:] = g.coeffs / np.arange(1, N + 2)
    out = np.zeros(N + 1)
    for j in range(1, N + 2):
        if G[j] == 0.0:
            continue
        # G_j ((x + t)^j - x^j), expanded binomially
        for i in range(min(j - 1, N) + 1):
            out[i] += G[j] * comb(j, i) * t ** (j - i)
    return AnalyticElement(out, N)


@dataclass
class TimeTaylorSolution:
    """Coefficients ``coeffs[m, k]`` of t^m x^k."""

    coeffs: np.ndarray

    @property
    def m_max(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def N(self) -> int:
        return self.coeffs.shape[1] - 1

    def term(self, m: int) -> AnalyticElement:
        return AnalyticElement(self.coeffs[m], self.N)

    def evaluate(self, t: float) -> AnalyticElement:
        powers = t ** np.arange(self.m_max + 1)
        return AnalyticElement(powers @ self.coeffs, self.N)

    def radius(self, s: float = 0.5) -> float:
        """Ratio-test estimate of the time radius of convergence at level s.

        Uses the last two nonzero terms m < n: (|u_m| / |u_n|)^(1/(n-m)).
        Returns inf for a polynomial in t.
        """
        norms = batch_norms(self.coeffs, s)
        nz = np.flatnonzero(norms > 0)
        if len(nz) < 2 or nz[-1] < self.m_max // 2:
            return float("inf")
        m, n = nz[-2], nz[-1]
        return float((norms[m] / norms[n]) ** (1.0 / (n - m)))


def _tx_eval(expr: OperatorExpr, Ut: np.ndarray, N: int, M: int) -> np.ndarray:
    """Evaluate a tree on a bivariate truncated series indexed [t-power, x-power]."""
    if isinstance(expr, Const):
        out = np.zeros((M + 1, N + 1))
        c = expr.coeffs[:N + 1]
        out[0, :len(c)] = c
        return out
    if isinstance(expr, (ArgUNode, ArgVNode)):
        return Ut
    if isinstance(expr, Dx):
        inner = _tx_eval(expr.child, Ut, N, M)
        out = np.zeros_like(inner)
        out[:, :-1] = inner[:, 1:] * np.arange(1, N + 1)
        return out
    if isinstance(expr, Mul):
        a = _tx_eval(expr.left, Ut, N, M)
        b = _tx_eval(expr.right, Ut, N, M)
        return convolve2d(a, b)[:M + 1, :N + 1]
    if isinstance(expr, Add):
        return _tx_eval(expr.left, Ut, N, M) + _tx_eval(expr.right, Ut, N, M)
    if isinstance(expr, TimeScale):
        inner = _tx_eval(expr.child, Ut, N, M)
        p = np.asarray(expr.poly, dtype=float)[:, None]
        return convolve2d(inner, p)[:M + 1, :N + 1]
    raise StructuralError(f"unknown expression node {expr!r}")


def taylor_ck(problem: ProblemSpec, m_max: int = 12) -> TimeTaylorSolution:
    """Match t-powers: (m+1) u_{m+1} = [A(t, u, u) + h(t, u)]_m, with u_0 = 0."""
    if m_max < 1:
        raise ConfigurationError("m_max must be at least 1")
    if not problem.A.linear_in_v:
        raise StructuralError("taylor_ck needs A linear in arg_v")
    N = problem.N
    U = np.zeros((m_max + 1, N + 1))
    for m in range(m_max):
        rhs = _tx_eval(problem.A, U, N, m_max) + _tx_eval(problem.h, U, N, m_max)
        U[m + 1] = rhs[m] / (m + 1)
    return TimeTaylorSolution(U)


HEAT_OPERATOR = Dx(Dx(ARG_V))


def heat_probe(deltas, A: OperatorExpr = HEAT_OPERATOR, N: int = 64, R: float = 1.0,
               plan: SamplingPlan | None = None) -> float:
    """Slope of log M_est(delta) against log delta.

    A slope near -1 means the ratio delta * norm(A v, s) / norm(v, s + delta)
    grows like 1/delta, so no finite M exists.  First-order operators give a
    slope near zero.
    """
    deltas = [float(d) for d in deltas]
    if len(deltas) < 3:
        raise ConfigurationError("heat_probe needs at least three deltas")
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ConfigurationError("deltas must decrease strictly")
    if deltas[-1] <= 0 or deltas[0] >= 1:
        raise ConfigurationError("deltas must lie in (0, 1)")
    plan = plan or SamplingPlan()
    spec = ProblemSpec(A, Const(0.0), R, N, "heat probe")
    values = []
    for d in deltas:
        values.append(estimate_M(spec, replace(plan, deltas=(d,))).M_est)
    if min(values) <= 0:
        raise ConfigurationError("operator vanished on the sampling plan")
    return log_slope(deltas, values)
