"""Estimation of the constants M and K and the convexity check.

For u, v in the closed ball of radius R at level s + delta the hypotheses are::

    norm(A(t, u, v), s) <= M * norm(v, s + delta) / delta
    norm(h(t, u), s)    <= K

``estimate_M`` and ``estimate_K`` compute the left-hand sides on a sampling
plan and report the largest ratios seen.  Grid maxima are lower bounds of the
true suprema.  Where the tree shape allows, a majorant bound (``M_analytic``,
``K_analytic``) is derived alongside by propagating norm bounds through the
tree.

Continuity of A in u is also assumed but never checked: sampling cannot
certify it.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import ConfigurationError
from .operators import (ArgUNode, ArgVNode, Add, Const, Dx, Mul, OperatorExpr,
                        ProblemSpec, TimeScale, evaluate)
from .scale import batch_norms, scale_weights

log = logging.getLogger(__name__)

__all__ = [
    "DEFAULT_S_VALUES", "DEFAULT_DELTAS", "SamplingPlan", "ConstantsEstimate",
    "ConvexityReport", "majorant_terms", "analytic_M", "analytic_K",
    "estimate_M", "estimate_K", "estimate_constants", "check_convexity",
    "log_slope",
]

# s -> 0 is where delta * k s^(k-1) / (s+delta)^k approaches its supremum 1,
# so the lattice reaches down to 1e-3.
DEFAULT_S_VALUES = (0.001, 0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9,
                    0.99)
DEFAULT_DELTAS = (0.2, 0.1, 0.05, 0.025)


@dataclass(frozen=True)
class SamplingPlan:
    """Where the estimators look.

    ``horizon`` is the time interval [0, T] sampled by ``n_times`` points;
    trees without a ``TimeScale`` node are only evaluated at t = 0.
    ``max_degree`` bounds the monomial probes (defaults to the problem's N).
    """

    s_values: Tuple[float, ...] = DEFAULT_S_VALUES
    deltas: Tuple[float, ...] = DEFAULT_DELTAS
    horizon: float = 1.0
    n_times: int = 3
    max_degree: Optional[int] = None
    n_random: int = 100
    n_random_u: int = 8
    seed: int = 0

    def __post_init__(self):
        if not self.s_values:
            raise ConfigurationError("sampling plan has no scale levels")
        if any(not (0.0 < s < 1.0) for s in self.s_values):
            raise ConfigurationError("scale levels must lie in (0, 1)")
        if any(d <= 0 for d in self.deltas):
            raise ConfigurationError("loss steps delta must be positive")
        if self.horizon < 0 or self.n_times < 1:
            raise ConfigurationError("time sampling needs horizon >= 0 and n_times >= 1")

    def times(self, expr: OperatorExpr) -> np.ndarray:
        if not expr.contains_t or self.horizon == 0:
            return np.zeros(1)
        return np.linspace(0.0, self.horizon, self.n_times)

    def pairs(self):
        return [(s, d) for s in self.s_values for d in self.deltas if s + d < 1.0]

    def describe(self) -> str:
        return (f"s={list(self.s_values)} delta={list(self.deltas)} "
                f"T={self.horizon} n_t={self.n_times} random={self.n_random} "
                f"seed={self.seed}")


@dataclass
class ConstantsEstimate:
    M_est: Optional[float] = None
    K_est: Optional[float] = None
    M_analytic: Optional[float] = None
    K_analytic: Optional[float] = None
    grid: str = ""
    divergence_slope: Optional[float] = None
    ladder: Dict[float, float] = field(default_factory=dict)

    @property
    def M(self) -> Optional[float]:
        """Analytic bound when available, otherwise the grid estimate."""
        return self.M_analytic if self.M_analytic is not None else self.M_est

    @property
    def K(self) -> Optional[float]:
        return self.K_analytic if self.K_analytic is not None else self.K_est


# -- majorant bounds -------------------------------------------------------

def majorant_terms(expr: OperatorExpr, R: float, T: float) -> Dict[Tuple[int, int], float]:
    """Bound ``norm(expr, s)`` by sum c * norm(v, s+delta)^d / delta^l.

    Returns {(d, l): c}.  Leaves: a constant series is bounded by the sum of
    its absolute coefficients, ``arg_u`` by R.  A derivative applied to a term
    of loss l splits delta in the ratio 1 : l, costing (l+1)^(l+1) / l^l.
    """
    if isinstance(expr, Const):
        c = float(np.sum(np.abs(expr.coeffs)))
        return {(0, 0): c} if c > 0 else {}
    if isinstance(expr, ArgUNode):
        return {(0, 0): R}
    if isinstance(expr, ArgVNode):
        return {(1, 0): 1.0}
    if isinstance(expr, Add):
        out = dict(majorant_terms(expr.left, R, T))
        for key, c in majorant_terms(expr.right, R, T).items():
            out[key] = out.get(key, 0.0) + c
        return out
    if isinstance(expr, Mul):
        left = majorant_terms(expr.left, R, T)
        right = majorant_terms(expr.right, R, T)
        out: Dict[Tuple[int, int], float] = {}
        for (d1, l1), c1 in left.items():
            for (d2, l2), c2 in right.items():
                key = (d1 + d2, l1 + l2)
                out[key] = out.get(key, 0.0) + c1 * c2
        return out
    if isinstance(expr, TimeScale):
        factor = float(sum(abs(p) * T ** i for i, p in enumerate(expr.poly)))
        return {k: c * factor for k, c in majorant_terms(expr.child, R, T).items()
                if c * factor > 0}
    if isinstance(expr, Dx):
        if isinstance(expr.child, Const):
            g = np.asarray(expr.child.coeffs)
            c = float(np.sum(np.abs(g) * np.arange(len(g))))
            return {(0, 0): c} if c > 0 else {}
        out = {}
        for (d, l), c in majorant_terms(expr.child, R, T).items():
            cost = (l + 1) ** (l + 1) / (l ** l if l else 1)
            out[(d, l + 1)] = out.get((d, l + 1), 0.0) + c * cost
        return out
    raise ConfigurationError(f"unknown expression node {expr!r}")


def analytic_M(spec: ProblemSpec, T: float = 1.0) -> Optional[float]:
    """Majorant value of M, or None when the tree shape admits no such bound."""
    total = 0.0
    for (d, l), c in majorant_terms(spec.A, spec.R, T).items():
        if d == 0 or l > 1:
            return None
        total += c * spec.R ** (d - 1)
    return total


def analytic_K(spec: ProblemSpec, T: float = 1.0) -> Optional[float]:
    total = 0.0
    for (d, l), c in majorant_terms(spec.h, spec.R, T).items():
        if l > 0 or d > 0:
            return None
        total += c
    return total


# -- sampling --------------------------------------------------------------

def _random_directions(n: int, N: int, rng: np.random.Generator) -> np.ndarray:
    if n <= 0:
        return np.zeros((0, N + 1))
    return rng.standard_normal((n, N + 1)) / np.arange(1, N + 2)


def _ball_samples(level: float, R: float, N: int, max_degree: int,
                  directions: np.ndarray, include_zero: bool) -> np.ndarray:
    """Elements of norm R at ``level``: scaled monomials and random directions."""
    rows = []
    if include_zero:
        rows.append(np.zeros((1, N + 1)))
    w = scale_weights(level, N)
    mono = np.zeros((max_degree + 1, N + 1))
    idx = np.arange(max_degree + 1)
    mono[idx, idx] = R / w[:max_degree + 1]
    rows.append(mono)
    if len(directions):
        rows.append(R * directions / batch_norms(directions, level)[:, None])
    return np.vstack(rows)


def _pairs(U: np.ndarray, V: np.ndarray):
    nu, nv = len(U), len(V)
    return np.repeat(U, nv, axis=0), np.tile(V, (nu, 1))


def _finite_max(values: np.ndarray) -> float:
    ok = np.isfinite(values)
    if not np.all(ok):
        log.debug("ignoring %d non-finite samples", int(np.sum(~ok)))
    return float(np.max(values[ok])) if np.any(ok) else 0.0


def log_slope(deltas, values) -> float:
    """Least-squares slope of log(values) against log(deltas)."""
    x = np.log(np.asarray(deltas, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def _m_ladder(spec: ProblemSpec, plan: SamplingPlan) -> Dict[float, float]:
    N = spec.N
    maxdeg = N if plan.max_degree is None else min(plan.max_degree, N)
    rng = np.random.default_rng(plan.seed)
    v_dirs = _random_directions(plan.n_random, N, rng)
    u_dirs = _random_directions(plan.n_random_u, N, rng)
    uses_u = spec.A.contains_u
    times = plan.times(spec.A)
    ladder = {}
    for s, d in plan.pairs():
        level = s + d
        V = _ball_samples(level, spec.R, N, maxdeg, v_dirs, include_zero=False)
        if uses_u:
            U = _ball_samples(level, spec.R, N, min(4, maxdeg), u_dirs,
                              include_zero=True)
        else:
            U = np.zeros((1, N + 1))
        UU, VV = _pairs(U, V)
        vnorm = batch_norms(VV, level)
        with np.errstate(over="ignore", invalid="ignore"):
            for t in times:
                out = np.broadcast_to(evaluate(spec.A, t, UU, VV, N), VV.shape)
                ratio = d * batch_norms(out, s) / vnorm
                ladder[d] = max(ladder.get(d, 0.0), _finite_max(ratio))
    return ladder


def estimate_M(spec: ProblemSpec, plan: SamplingPlan | None = None) -> ConstantsEstimate:
    """Largest observed delta * norm(A(t,u,v), s) / norm(v, s+delta).

    The per-delta maxima are kept in ``ladder``.  When they grow strictly
    as delta shrinks, the log-log slope is reported as ``divergence_slope``;
    a slope near -1 means A loses more than one derivative.
    """
    plan = plan or SamplingPlan()
    if not plan.pairs():
        raise ConfigurationError("sampling plan has no (s, delta) with s + delta < 1")
    ladder = _m_ladder(spec, plan)
    est = ConstantsEstimate(M_est=max(ladder.values()), grid=plan.describe(),
                            M_analytic=analytic_M(spec, plan.horizon),
                            ladder=ladder)
    ds = sorted(d for d in ladder if ladder[d] > 0)[::-1]
    if len(ds) >= 2:
        vals = [ladder[d] for d in ds]
        if all(b > a for a, b in zip(vals, vals[1:])):
            est.divergence_slope = log_slope(ds, vals)
    return est


def estimate_K(spec: ProblemSpec, plan: SamplingPlan | None = None) -> ConstantsEstimate:
    """Largest observed norm(h(t,u), s) over the plan's levels and times."""
    plan = plan or SamplingPlan()
    N = spec.N
    maxdeg = N if plan.max_degree is None else min(plan.max_degree, N)
    rng = np.random.default_rng(plan.seed)
    _random_directions(plan.n_random, N, rng)
    u_dirs = _random_directions(plan.n_random_u, N, rng)
    K = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for s in plan.s_values:
            if spec.h.contains_u:
                U = _ball_samples(s, spec.R, N, maxdeg, u_dirs, include_zero=True)
            else:
                U = np.zeros((1, N + 1))
            for t in plan.times(spec.h):
                out = evaluate(spec.h, t, U, None, N)
                K = max(K, _finite_max(batch_norms(out, s)))
    return ConstantsEstimate(K_est=K, K_analytic=analytic_K(spec, plan.horizon),
                             grid=plan.describe())


def estimate_constants(spec: ProblemSpec, plan: SamplingPlan | None = None) -> ConstantsEstimate:
    """``estimate_M`` and ``estimate_K`` merged into one record."""
    m = estimate_M(spec, plan)
    k = estimate_K(spec, plan)
    m.K_est, m.K_analytic = k.K_est, k.K_analytic
    return m


# -- convexity in the third argument ---------------------------------------

@dataclass
class ConvexityReport:
    samples: int
    max_violation: float
    worst: Dict[str, float]
    linear_in_v: bool

    @property
    def refuted(self) -> bool:
        return self.max_violation > 1e-12


def check_convexity(spec: ProblemSpec, samples: int = 1000, seed: int = 0,
                    horizon: float = 1.0) -> ConvexityReport:
    """Randomised search for violations of

        norm(A(t,u,lam v + (1-lam) w), s)
            <= lam norm(A(t,u,v), s) + (1-lam) norm(A(t,u,w), s).

    u, v, w are drawn from the ball of radius R at a level s + delta with
    delta >= 0.05; a positive ``max_violation`` refutes convexity.
    """
    if samples < 1:
        raise ConfigurationError("need at least one sample")
    N = spec.N
    rng = np.random.default_rng(seed)
    s = rng.uniform(0.05, 0.9, samples)
    level = s + rng.uniform(0.05, 0.99 - s)
    t = rng.uniform(0.0, horizon, samples)
    lam = rng.uniform(0.0, 1.0, samples)
    k = np.arange(N + 1)
    W_level = level[:, None] ** k
    W_s = s[:, None] ** k

    def draw():
        Z = rng.standard_normal((samples, N + 1)) / (k + 1)
        r = rng.uniform(0.0, 1.0, samples)
        return spec.R * r[:, None] * Z / np.sum(np.abs(Z) * W_level, axis=1)[:, None]

    U, V, Wv = draw(), draw(), draw()
    mix = lam[:, None] * V + (1.0 - lam)[:, None] * Wv

    def nrm(X):
        X = np.broadcast_to(X, (samples, N + 1))
        return np.sum(np.abs(X) * W_s, axis=1)

    with np.errstate(over="ignore", invalid="ignore"):
        lhs = nrm(evaluate(spec.A, t, U, mix, N))
        rhs = lam * nrm(evaluate(spec.A, t, U, V, N)) + (1 - lam) * nrm(evaluate(spec.A, t, U, Wv, N))
        gap = lhs - rhs
    gap = np.where(np.isfinite(gap), gap, -np.inf)
    i = int(np.argmax(gap))
    worst = {"s": float(s[i]), "level": float(level[i]), "t": float(t[i]),
             "lambda": float(lam[i]), "lhs": float(lhs[i]), "rhs": float(rhs[i])}
    return ConvexityReport(samples=samples, max_violation=float(gap[i]),
                           worst=worst, linear_in_v=spec.A.linear_in_v)
