"""Command line front end: ``ckscale {bounds,verify,solve} --problem FILE``.

Exit codes: 0 success or converged, 1 unreadable or invalid problem file,
2 solver did not converge (the report is still written), 3 a hypothesis
violation was detected.
"""
from __future__ import annotations

import argparse
import io
import sys
from dataclasses import dataclass, replace

from .constants import SamplingPlan, check_convexity
from .errors import ConfigurationError, DomainError
from .oracles import heat_probe
from .problemfile import ProblemFile, ProblemFileError, load_problem
from .solver import (ScalePath, SeminormGrid, SolverConfig, SolverReport,
                     apply_F, build_frame, check_S, solve_picard, time_grid,
                     verify_kn)

__all__ = ["CSV_HEADER", "CommandResult", "run_command", "write_csv", "main"]

EXIT_OK, EXIT_BAD_INPUT, EXIT_NOT_CONVERGED, EXIT_VIOLATION = 0, 1, 2, 3
CSV_HEADER = "iter,tau,s,residual,s1_ok,s2_ok,s3_ok,elapsed_ms"
# heat_probe slopes: first-order operators stay above -0.3, second-order
# ones fall below -0.8.
SLOPE_THRESHOLD = -0.5
LADDER = (0.2, 0.1, 0.05, 0.025)


@dataclass
class CommandResult:
    code: int
    text: str
    csv: str = ""


def write_csv(report: SolverReport, fh) -> None:
    fh.write(CSV_HEADER + "\n")
    for r in sorted(report.rows, key=lambda r: (r.iter, r.tau, r.s)):
        fh.write(f"{r.iter},{r.tau!r},{r.s!r},{r.residual!r},{int(r.s1_ok)},"
                 f"{int(r.s2_ok)},{int(r.s3_ok)},{r.elapsed_ms:.3f}\n")


def _fmt(x) -> str:
    return "n/a" if x is None else f"{x:.10g}"


def _frame(pf: ProblemFile):
    st = pf.settings
    plan = SamplingPlan(seed=st.seed)
    return build_frame(pf.spec, st.s, pf.M, pf.K, pf.a, plan)


def _bounds(pf: ProblemFile, out: list) -> int:
    frame, est = _frame(pf)
    out += [f"problem: {pf.spec.label or '(unnamed)'}",
            f"M_est = {_fmt(est.M_est)}", f"M_analytic = {_fmt(est.M_analytic)}",
            f"K_est = {_fmt(est.K_est)}", f"K_analytic = {_fmt(est.K_analytic)}",
            f"M = {_fmt(frame.M)}", f"K = {_fmt(frame.K)}",
            f"a = {_fmt(frame.a)}", f"tau_max(s={frame.s:g}) = {_fmt(frame.tau_max)}"]
    if est.divergence_slope is not None and est.divergence_slope < SLOPE_THRESHOLD:
        out.append(f"Ovsjannikov bound violated, slope ≈ {est.divergence_slope:.3f}")
        return EXIT_VIOLATION
    return EXIT_OK


def _verify(pf: ProblemFile, out: list) -> int:
    spec, st = pf.spec, pf.settings
    frame, est = _frame(pf)
    failed = False
    out.append(f"frame: M={_fmt(frame.M)} K={_fmt(frame.K)} a={_fmt(frame.a)} "
               f"tau_max={_fmt(frame.tau_max)}")

    slope = heat_probe(LADDER, spec.A, spec.N, spec.R, SamplingPlan(seed=st.seed))
    if slope < SLOPE_THRESHOLD:
        failed = True
        out.append(f"Ovsjannikov bound violated, slope ≈ {slope:.3f}")
    else:
        out.append(f"Ovsjannikov bound: ok (slope {slope:.3f})")

    conv = check_convexity(spec, 1000, st.seed, frame.tau_max)
    failed |= conv.refuted
    out.append(f"convexity: {'violated' if conv.refuted else 'ok'} "
               f"(max violation {conv.max_violation:.3e}, linear in v: {conv.linear_in_v})")

    kn = verify_kn(frame, samples=1000, margin=0.05, seed=st.seed)
    failed |= not kn.ok
    out.append(f"kn estimate: {'ok' if kn.ok else 'violated'} (max ratio {kn.max_ratio:.12f})")

    horizon = st.tau_frac * frame.tau_max
    times = time_grid(horizon, st.step)
    grid = SeminormGrid.build(frame, horizon, st.theta)
    path = ScalePath.zero(times, spec.N)
    for name in ("0", "F(0)", "F(F(0))"):
        rep = check_S(path, spec, frame, grid)
        failed |= not rep.in_S
        m1, m2, m3 = rep.worst_margins
        out.append(f"set S [{name}]: {'ok' if rep.in_S else 'violated'} "
                   f"(margins {m1:.3e} {m2:.3e} {m3:.3e})")
        path = apply_F(spec, frame, path)
    return EXIT_VIOLATION if failed else EXIT_OK


def _solve(pf: ProblemFile, out: list, csv_buf, timing: bool) -> int:
    st = pf.settings
    frame, _ = _frame(pf)
    cfg = SolverConfig(tau_frac=st.tau_frac, step=st.step, max_iter=st.max_iter,
                       tol=st.tol, theta=st.theta, timing=timing)
    rep = solve_picard(pf.spec, frame, None, cfg)
    write_csv(rep, csv_buf)
    out += [f"status: {rep.status}", f"iterations: {rep.iterations}",
            f"residual: {rep.residual:.3e}",
            f"a = {_fmt(frame.a)}, tau = {_fmt(cfg.tau_frac * frame.tau_max)}"]
    return EXIT_OK if rep.converged else EXIT_NOT_CONVERGED


_OVERRIDES = ("s", "tau_frac", "step", "max_iter", "tol", "theta", "seed")


def run_command(mode: str, problem, timing: bool = False, **overrides) -> CommandResult:
    """Run one command on a problem file path (or a parsed ``ProblemFile``).

    ``overrides`` replace the file's solver settings (s, tau_frac, step,
    max_iter, tol, theta, seed); ``None`` values are ignored.
    """
    try:
        pf = problem if isinstance(problem, ProblemFile) else load_problem(problem)
    except (OSError, UnicodeDecodeError, ProblemFileError) as exc:
        return CommandResult(EXIT_BAD_INPUT, f"error: {exc}\n")
    changes = {k: v for k, v in overrides.items() if k in _OVERRIDES and v is not None}
    unknown = set(overrides) - set(_OVERRIDES)
    if unknown:
        raise TypeError(f"unknown overrides {sorted(unknown)}")
    pf = replace(pf, settings=replace(pf.settings, **changes))
    out: list = []
    csv_buf = io.StringIO()
    try:
        if mode == "bounds":
            code = _bounds(pf, out)
        elif mode == "verify":
            code = _verify(pf, out)
        elif mode == "solve":
            code = _solve(pf, out, csv_buf, timing)
        else:
            raise ValueError(f"unknown mode {mode!r}")
    except (DomainError, ConfigurationError) as exc:
        return CommandResult(EXIT_BAD_INPUT, f"error: {exc}\n")
    return CommandResult(code, "\n".join(out) + "\n", csv_buf.getvalue())


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ckscale",
                                description="Cauchy-Kowalewski problems on analytic scales")
    p.add_argument("mode", choices=("bounds", "verify", "solve"))
    p.add_argument("--problem", required=True, help="problem file")
    p.add_argument("--out", help="CSV output path for solve (default: stdout)")
    p.add_argument("--s", type=float)
    p.add_argument("--tau-frac", type=float, dest="tau_frac")
    p.add_argument("--step", type=float)
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument("--tol", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--timing", action="store_true",
                   help="fill elapsed_ms (makes CSV output run-dependent)")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    res = run_command(args.mode, args.problem, timing=args.timing,
                      **{k: getattr(args, k) for k in _OVERRIDES})
    if res.csv:
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(res.csv)
            sys.stdout.write(res.text)
        else:
            sys.stdout.write(res.csv)
            sys.stderr.write(res.text)
    else:
        (sys.stderr if res.code == EXIT_BAD_INPUT else sys.stdout).write(res.text)
    return res.code


if __name__ == "__main__":
    sys.exit(main())
