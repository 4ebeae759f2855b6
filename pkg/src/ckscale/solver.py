"""Fixed-point machinery for u_t = A(t, u, u) + h(t, u), u(0) = 0.

The problem is recast as u = F(u) with

    F(u)(t) = int_0^t A(xi, u(xi), u(xi)) + h(xi, u(xi)) dxi.

Solutions live on the triangle {tau > 0, 0 < s < 1, 1 - s - a tau > 0}: the
longer the time interval, the smaller the scale level at which the solution
is controlled.  With a >= M (2^(5/2) + K), F maps the set S of paths obeying

    (s1) norm(v(t), s) <= R
    (s2) norm(A(t, u(t), v(t)), s) <= 1 / sqrt(1 - a t - s)   for norm(u(t), s) <= R
    (s3) norm(v(t1) - v(t2), s) <= (K + 2/a) |t1 - t2|

into itself.  Here S is checked on a finite grid of (tau, s) pairs, and a
fixed point is sought by Picard iteration.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid, quad

from .constants import ConstantsEstimate, SamplingPlan, estimate_constants
from .errors import ConfigurationError, DomainError, FrameViolation
from .operators import ProblemSpec, evaluate
from .scale import AnalyticElement, ScaleIndex, batch_norms

log = logging.getLogger(__name__)

__all__ = [
    "TWO_5_2", "compute_a", "tau_max", "ExistenceFrame", "build_frame",
    "time_grid", "ScalePath", "SeminormGrid", "SetSReport", "apply_F",
    "default_probes", "check_S", "bound_kn", "kn_integral",
    "kn_closed_integral", "KnReport", "verify_kn", "SolverConfig",
    "ReportRow", "SolverReport", "solve_picard",
]

TWO_5_2 = 2.0 ** 2.5


def compute_a(M: float, K: float) -> float:
    """Smallest admissible a = M (2^(5/2) + K); 1.0 when M = 0."""
    if M < 0 or K < 0:
        raise DomainError("M and K must be nonnegative")
    a = M * (TWO_5_2 + K)
    return a if a > 0 else 1.0


def tau_max(s, a: float) -> float:
    """Time at which level s reaches the edge of the triangle, (1 - s) / a."""
    s = float(ScaleIndex(s)) if not isinstance(s, ScaleIndex) else s.s
    if not a > 0:
        raise DomainError("a must be positive")
    return (1.0 - s) / a


@dataclass(frozen=True)
class ExistenceFrame:
    M: float
    K: float
    R: float
    a: float
    s: float
    tau_max: float

    def __post_init__(self):
        if self.M < 0 or self.K < 0:
            raise DomainError("M and K must be nonnegative")
        if not self.R > 0:
            raise DomainError("R must be positive")
        if not self.a > 0:
            raise DomainError("a must be positive")
        ScaleIndex(self.s)
        need = self.M * (TWO_5_2 + self.K)
        if self.a < need * (1 - 1e-15):
            raise DomainError(f"a = {self.a} is below M (2^(5/2) + K) = {need}")
        if not math.isclose(self.tau_max, (1 - self.s) / self.a, rel_tol=1e-12):
            raise DomainError("tau_max must equal (1 - s) / a")

    @classmethod
    def from_constants(cls, M: float, K: float, R: float, s: float = 0.5,
                       a: Optional[float] = None) -> "ExistenceFrame":
        if a is None:
            a = compute_a(M, K)
        return cls(float(M), float(K), float(R), float(a), float(s),
                   tau_max(s, a))

    def gap(self, t, s):
        """1 - a t - s; positive inside the triangle."""
        return 1.0 - self.a * np.asarray(t) - s

    def in_triangle(self, tau: float, s: float, margin: float = 0.0) -> bool:
        return tau > 0 and 0 < s < 1 and self.gap(tau, s) >= margin and self.gap(tau, s) > 0

    @property
    def lipschitz_bound(self) -> float:
        return self.K + 2.0 / self.a


def build_frame(problem: ProblemSpec, s: float = 0.5, M: Optional[float] = None,
                K: Optional[float] = None, a: Optional[float] = None,
                plan: Optional[SamplingPlan] = None,
                ) -> Tuple[ExistenceFrame, ConstantsEstimate]:
    """Frame from supplied constants, falling back to analytic bounds, then estimates.

    For time-dependent trees the sampling horizon T is iterated through
    T <- tau_max(T); a frame is admissible when tau_max <= T, i.e. the
    constants were sampled on an interval covering the frame's time range.
    The admissible frame with the largest tau_max is returned.
    """
    plan = plan or SamplingPlan()
    horizon = plan.horizon
    timed = problem.A.contains_t or problem.h.contains_t
    best = None
    for _ in range(6 if timed else 1):
        est = estimate_constants(problem, replace(plan, horizon=horizon))
        M_ = M if M is not None else est.M
        K_ = K if K is not None else est.K
        frame = ExistenceFrame.from_constants(M_, K_, problem.R, s, a)
        if not timed:
            return frame, est
        if frame.tau_max <= horizon and (best is None or frame.tau_max > best[0].tau_max):
            best = (frame, est)
        if abs(frame.tau_max - horizon) <= 1e-3 * horizon:
            break
        horizon = frame.tau_max
    if best is None:
        log.warning("constant estimates do not cover [0, tau_max=%g]", frame.tau_max)
        return frame, est
    return best


def time_grid(tau: float, step: Optional[float] = None) -> np.ndarray:
    """Uniform grid on [0, tau] with spacing at most ``step`` (default tau/1000)."""
    if not tau > 0:
        raise DomainError("time horizon must be positive")
    if step is None:
        n = 1000
    else:
        if not step > 0:
            raise ConfigurationError("time step must be positive")
        n = max(1, int(math.ceil(tau / step - 1e-9)))
    return np.linspace(0.0, tau, n + 1)


class ScalePath:
    """Samples of a curve t -> u(t) on a time grid, linear in between."""

    def __init__(self, times, values, check_start: bool = True):
        times = np.array(times, dtype=float)
        values = np.array(values, dtype=float)
        if times.ndim != 1 or len(times) < 2:
            raise DomainError("a path needs at least two time nodes")
        if times[0] != 0.0 or np.any(np.diff(times) <= 0):
            raise DomainError("times must start at 0 and increase strictly")
        if values.shape[0] != len(times) or values.ndim != 2:
            raise DomainError("values must have one row per time node")
        if check_start and np.any(values[0] != 0.0):
            raise DomainError("a path must start at u(0) = 0")
        times.flags.writeable = False
        values.flags.writeable = False
        self.times = times
        self.values = values

    @classmethod
    def zero(cls, times, N: int) -> "ScalePath":
        return cls(times, np.zeros((len(times), N + 1)))

    @classmethod
    def from_function(cls, times, func, N: int) -> "ScalePath":
        """Build from ``func(t) -> coefficient sequence``."""
        rows = np.zeros((len(times), N + 1))
        for i, t in enumerate(times):
            c = np.ravel(np.asarray(func(t), dtype=float))[:N + 1]
            rows[i, :len(c)] = c
        return cls(times, rows, check_start=False)

    @property
    def N(self) -> int:
        return self.values.shape[1] - 1

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def at(self, t: float) -> AnalyticElement:
        if not 0 <= t <= self.horizon:
            raise DomainError(f"t = {t} outside [0, {self.horizon}]")
        j = int(np.searchsorted(self.times, t, side="right")) - 1
        j = min(j, len(self.times) - 2)
        t0, t1 = self.times[j], self.times[j + 1]
        w = (t - t0) / (t1 - t0)
        return AnalyticElement((1 - w) * self.values[j] + w * self.values[j + 1], self.N)

    def norms(self, s) -> np.ndarray:
        return batch_norms(self.values, s)

    def seminorm(self, tau: float, s) -> float:
        """max over grid times t <= tau of norm(u(t), s)."""
        mask = self.times <= tau
        return float(np.max(self.norms(s)[mask]))

    def __sub__(self, other: "ScalePath") -> "ScalePath":
        if not np.array_equal(self.times, other.times):
            raise DomainError("paths live on different time grids")
        return ScalePath(self.times, self.values - other.values, check_start=False)

    def __mul__(self, c: float) -> "ScalePath":
        return ScalePath(self.times, float(c) * self.values, check_start=False)

    __rmul__ = __mul__


@dataclass(frozen=True)
class SeminormGrid:
    """Finite set of (tau, s) pairs with 1 - s - a tau >= theta."""

    points: Tuple[Tuple[float, float], ...]
    theta: float

    def __post_init__(self):
        if not self.points:
            raise ConfigurationError("seminorm grid is empty")
        if not self.theta > 0:
            raise ConfigurationError("grid margin theta must be positive")

    @classmethod
    def build(cls, frame: ExistenceFrame, horizon: float, theta: float = 0.1,
              s_values: Optional[Sequence[float]] = None,
              tau_fracs: Sequence[float] = (0.25, 0.5, 0.75, 1.0)) -> "SeminormGrid":
        if s_values is None:
            s_values = np.round(np.arange(0.05, 0.951, 0.05), 10)
        pts = []
        for f in tau_fracs:
            tau = f * horizon
            for s in s_values:
                if 0 < s < 1 and 1 - s - frame.a * tau >= theta:
                    pts.append((float(tau), float(s)))
        return cls(tuple(sorted(pts)), float(theta))

    def validate(self, frame: ExistenceFrame, horizon: Optional[float] = None):
        for tau, s in self.points:
            if not (0 < s < 1) or tau <= 0 or 1 - s - frame.a * tau < self.theta * (1 - 1e-12):
                raise FrameViolation(
                    f"grid point (tau={tau}, s={s}) is not inside the triangle "
                    f"with margin {self.theta}")
            if horizon is not None and tau > horizon * (1 + 1e-12):
                raise FrameViolation(f"grid time {tau} exceeds path horizon {horizon}")

    @property
    def s_values(self) -> List[float]:
        return sorted({s for _, s in self.points})


@dataclass
class SetSReport:
    points: List[Tuple[float, float]]
    s1: np.ndarray
    s2: np.ndarray
    s3: np.ndarray
    s1_margin: np.ndarray
    s2_margin: np.ndarray
    s3_margin: np.ndarray
    lipschitz: np.ndarray
    lipschitz_bound: float

    @property
    def s1_ok(self) -> bool:
        return bool(np.all(self.s1))

    @property
    def s2_ok(self) -> bool:
        return bool(np.all(self.s2))

    @property
    def s3_ok(self) -> bool:
        return bool(np.all(self.s3))

    @property
    def in_S(self) -> bool:
        return self.s1_ok and self.s2_ok and self.s3_ok

    @property
    def worst_margins(self) -> Tuple[float, float, float]:
        return (float(np.min(self.s1_margin)), float(np.min(self.s2_margin)),
                float(np.min(self.s3_margin)))

    @property
    def empirical_lipschitz(self) -> float:
        return float(np.max(self.lipschitz))


def _integrand(problem: ProblemSpec, times: np.ndarray, U: np.ndarray) -> np.ndarray:
    N = problem.N
    rhs = evaluate(problem.A, times, U, U, N) + evaluate(problem.h, times, U, None, N)
    return np.broadcast_to(rhs, U.shape)


def apply_F(problem: ProblemSpec, frame: ExistenceFrame, path: ScalePath) -> ScalePath:
    """Cumulative trapezoid of A(t, u, u) + h(t, u) on the path's own grid."""
    if path.horizon >= frame.tau_max:
        raise FrameViolation(
            f"path horizon {path.horizon} is not below tau_max = {frame.tau_max}")
    if path.N != problem.N:
        raise DomainError(f"path truncation {path.N} differs from problem N = {problem.N}")
    rhs = _integrand(problem, path.times, path.values)
    return ScalePath(path.times,
                     cumulative_trapezoid(rhs, x=path.times, axis=0, initial=0.0))


Probe = Union[AnalyticElement, ScalePath]


def default_probes(problem: ProblemSpec, iterate: Optional[ScalePath] = None) -> List[Probe]:
    """0, R, R x^k for k <= 4, and the current iterate if given."""
    N, R = problem.N, problem.R
    probes: List[Probe] = [AnalyticElement.zero(N), AnalyticElement.constant(R, N)]
    probes += [AnalyticElement.monomial(k, N, R) for k in range(1, min(4, N) + 1)]
    if iterate is not None:
        probes.append(iterate)
    return probes


def _probe_rows(probe: Probe, times: np.ndarray, N: int) -> np.ndarray:
    if isinstance(probe, AnalyticElement):
        row = probe.with_degree(N).coeffs
        return np.broadcast_to(row, (len(times), N + 1))
    if np.array_equal(probe.times, times):
        return probe.values
    return np.array([probe.at(t).with_degree(N).coeffs for t in times])


def check_S(path: ScalePath, problem: ProblemSpec, frame: ExistenceFrame,
            grid: SeminormGrid, probes: Optional[Sequence[Probe]] = None,
            rtol: float = 1e-12) -> SetSReport:
    """Evaluate (s1)-(s3) for ``path`` at every grid point.

    (s2) is tested against each probe u only at (t, s) where norm(u(t), s) <= R.
    (s3) uses consecutive time nodes; for a piecewise linear path the largest
    difference quotient over all pairs is attained on consecutive nodes.
    """
    grid.validate(frame, path.horizon)
    if probes is None:
        probes = default_probes(problem, path)
    N, R = problem.N, problem.R
    times = path.times
    dt = np.diff(times)
    dv = np.diff(path.values, axis=0)
    A_vals = []
    probe_rows = []
    for p in probes:
        rows = _probe_rows(p, times, N)
        probe_rows.append(rows)
        A_vals.append(np.broadcast_to(evaluate(problem.A, times, rows, path.values, N),
                                      path.values.shape))
    L_bound = frame.lipschitz_bound

    n = len(grid.points)
    out = {k: np.zeros(n) for k in ("s1m", "s2m", "s3m", "lip")}
    flags = {k: np.zeros(n, dtype=bool) for k in ("s1", "s2", "s3")}
    cache = {}
    for i, (tau, s) in enumerate(grid.points):
        if s not in cache:
            pn = [batch_norms(r, s) for r in probe_rows]
            an = [batch_norms(v, s) for v in A_vals]
            cache[s] = (path.norms(s), batch_norms(dv, s) / dt, pn, an)
        vn, quot, pn, an = cache[s]
        mask = times <= tau * (1 + 1e-14)

        worst1 = float(np.max(vn[mask]))
        out["s1m"][i] = R - worst1
        flags["s1"][i] = worst1 <= R * (1 + rtol)

        bound2 = 1.0 / np.sqrt(frame.gap(times[mask], s))
        m2 = np.inf
        for pnorm, anorm in zip(pn, an):
            ok = pnorm[mask] <= R * (1 + rtol)
            if np.any(ok):
                m2 = min(m2, float(np.min((bound2 - anorm[mask])[ok])))
        out["s2m"][i] = m2
        flags["s2"][i] = m2 >= -rtol * float(np.max(bound2))

        seg = mask[1:]
        lip = float(np.max(quot[seg])) if np.any(seg) else 0.0
        out["lip"][i] = lip
        out["s3m"][i] = L_bound - lip
        flags["s3"][i] = lip <= L_bound * (1 + rtol)
    return SetSReport(list(grid.points), flags["s1"], flags["s2"], flags["s3"],
                      out["s1m"], out["s2m"], out["s3m"], out["lip"], L_bound)


# -- the key estimate --------------------------------------------------------

def bound_kn(t: float, s: float, frame: ExistenceFrame) -> float:
    """Closed bound M (2^(5/2) + K) / (a sqrt(1 - a t - s))."""
    g = float(frame.gap(t, s))
    if t < 0 or not (0 < s < 1) or g <= 0:
        raise FrameViolation(f"(t={t}, s={s}) lies outside the triangle")
    return frame.M * (TWO_5_2 + frame.K) / (frame.a * math.sqrt(g))


def _kn_integrand(xi: float, s: float, frame: ExistenceFrame) -> float:
    D = 1.0 - frame.a * xi - s
    delta = D / 2.0
    return frame.M * (1.0 / (delta * math.sqrt(D - delta)) + frame.K / delta)


def kn_integral(t: float, s: float, frame: ExistenceFrame) -> float:
    """Adaptive quadrature of M [1/(d sqrt(1-a xi-s-d)) + K/d] with d = (1-a xi-s)/2."""
    if t < 0 or not (0 < s < 1) or frame.gap(t, s) <= 0:
        raise FrameViolation(f"(t={t}, s={s}) lies outside the triangle")
    if t == 0:
        return 0.0
    val, _ = quad(_kn_integrand, 0.0, t, args=(s, frame), epsabs=0.0,
                  epsrel=1e-12, limit=200)
    return val


def kn_closed_integral(t: float, s: float, frame: ExistenceFrame) -> float:
    """Antiderivative of the same integrand, in closed form."""
    D0, Dt = 1.0 - s, float(frame.gap(t, s))
    return frame.M / frame.a * (TWO_5_2 * (Dt ** -0.5 - D0 ** -0.5)
                                + 2.0 * frame.K * math.log(D0 / Dt))


@dataclass
class KnReport:
    points: List[Tuple[float, float]]
    integrals: np.ndarray
    bounds: np.ndarray

    @property
    def ratios(self) -> np.ndarray:
        return self.integrals / self.bounds

    @property
    def max_ratio(self) -> float:
        return float(np.max(self.ratios))

    @property
    def ok(self) -> bool:
        return self.max_ratio <= 1.0 + 1e-9

    @property
    def worst(self) -> Tuple[float, float]:
        return self.points[int(np.argmax(self.ratios))]


def verify_kn(frame: ExistenceFrame, grid: Union[SeminormGrid, Sequence, None] = None,
              samples: int = 1000, margin: float = 0.05, seed: int = 0) -> KnReport:
    """Compare the integrated estimate with its closed bound.

    Points come from ``grid`` when given, otherwise ``samples`` seeded (t, s)
    pairs with 1 - a t - s >= margin.
    """
    if grid is None:
        rng = np.random.default_rng(seed)
        pts = []
        while len(pts) < samples:
            s = rng.uniform(0.0, 1.0 - margin)
            if s <= 0:
                continue
            t = rng.uniform(0.0, (1.0 - margin - s) / frame.a)
            pts.append((float(t), float(s)))
    else:
        pts = list(grid.points if isinstance(grid, SeminormGrid) else grid)
    ints = np.array([kn_integral(t, s, frame) for t, s in pts])
    bnds = np.array([bound_kn(t, s, frame) for t, s in pts])
    return KnReport(pts, ints, bnds)


# -- Picard iteration --------------------------------------------------------

@dataclass
class SolverConfig:
    tau_frac: float = 0.5
    step: Optional[float] = None
    max_iter: int = 50
    tol: float = 1e-12
    theta: float = 0.1
    probes: Optional[Sequence[Probe]] = None
    timing: bool = False

    def __post_init__(self):
        if not 0 < self.tau_frac < 1:
            raise ConfigurationError("tau_frac must lie in (0, 1)")
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be at least 1")
        if self.tol < 0:
            raise ConfigurationError("tol must be nonnegative")


@dataclass(frozen=True)
class ReportRow:
    iter: int
    tau: float
    s: float
    residual: float
    s1_ok: bool
    s2_ok: bool
    s3_ok: bool
    elapsed_ms: float


@dataclass
class SolverReport:
    status: str
    iterations: int
    path: ScalePath
    residuals: List[float]
    rows: List[ReportRow]
    set_S: SetSReport
    frame: ExistenceFrame
    grid: SeminormGrid
    # Boundedness constants and time-Lipschitz moduli of the iterate family,
    # keyed by grid point.
    bounds: Dict[Tuple[float, float], float] = field(default_factory=dict)
    moduli: Dict[Tuple[float, float], float] = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def residual(self) -> float:
        return self.residuals[-1] if self.residuals else float("nan")


def solve_picard(problem: ProblemSpec, frame: ExistenceFrame,
                 grid: Optional[SeminormGrid] = None,
                 config: Optional[SolverConfig] = None) -> SolverReport:
    """Iterate u_{k+1} = F(u_k) from u_0 = 0 on [0, tau_frac * tau_max].

    Iterate k is u_k = F^k(0), k >= 1.  Stops when the largest grid seminorm
    of the fixed-point residual F(u_k) - u_k drops to ``tol``
    (``converged``), when an iterate fails a set-S condition (``left_S``), or
    after ``max_iter`` steps (``not_converged``).
    """
    config = config or SolverConfig()
    horizon = config.tau_frac * frame.tau_max
    times = time_grid(horizon, config.step)
    if grid is None:
        grid = SeminormGrid.build(frame, horizon, config.theta)
    grid.validate(frame, horizon)

    nxt = apply_F(problem, frame, ScalePath.zero(times, problem.N))
    residuals: List[float] = []
    rows: List[ReportRow] = []
    bounds = {p: 0.0 for p in grid.points}
    moduli = {p: 0.0 for p in grid.points}
    status = "not_converged"
    report_S = None
    start = time.perf_counter()
    for k in range(1, config.max_iter + 1):
        # u is the k-th iterate; its fixed-point residual is |F(u) - u|.
        u = nxt
        nxt = apply_F(problem, frame, u)
        diff = nxt - u
        res = {p: diff.seminorm(*p) for p in grid.points}
        probes = (list(config.probes) if config.probes is not None
                  else default_probes(problem, u))
        report_S = check_S(u, problem, frame, grid, probes)
        elapsed = (time.perf_counter() - start) * 1e3 if config.timing else 0.0
        for i, p in enumerate(grid.points):
            bounds[p] = max(bounds[p], u.seminorm(*p))
            moduli[p] = max(moduli[p], float(report_S.lipschitz[i]))
            rows.append(ReportRow(k, p[0], p[1], res[p], bool(report_S.s1[i]),
                                  bool(report_S.s2[i]), bool(report_S.s3[i]), elapsed))
        residuals.append(max(res.values()))
        log.debug("iteration %d residual %.3e in_S=%s", k, residuals[-1], report_S.in_S)
        if not report_S.in_S:
            status = "left_S"
            break
        if residuals[-1] <= config.tol:
            status = "converged"
            break
    return SolverReport(status, len(residuals), u, residuals, rows, report_S,
                        frame, grid, bounds, moduli)
