"""
Picard iteration on two model problems
======================================

u_t = u_x + x has solution x t + t^2 / 2; u_t = u u_x + x has solution
x tan(t).  Both start from u(0) = 0.
"""

import math

import numpy as np

from ckscale import ARG_U, ARG_V, Const, Dx, Mul, ProblemSpec
from ckscale.oracles import taylor_ck
from ckscale.solver import ScalePath, SolverConfig, build_frame, solve_picard

transport = ProblemSpec(Dx(ARG_V), Const((0, 1)), R=2.0)
frame, _ = build_frame(transport)
rep = solve_picard(transport, frame, config=SolverConfig(tol=1e-10))
print(f"transport: {rep.status} after {rep.iterations} iterations, a = {frame.a:.4f}")
t = rep.path.times[-1]
print("u(t) coefficients:", rep.path.values[-1, :3], "expected", np.array([t * t / 2, t, 0]))

burgers = ProblemSpec(Mul(ARG_U, Dx(ARG_V)), Const((0, 1)), R=2.0)
frame, _ = build_frame(burgers)
rep = solve_picard(burgers, frame, config=SolverConfig(step=1e-3))
print(f"burgers: {rep.status}, residuals {np.array(rep.residuals)}")

exact = ScalePath.from_function(rep.path.times, lambda t: (0.0, math.tan(t)), 64)
err = (rep.path - exact).seminorm(rep.path.horizon, 0.5)
print(f"seminorm error against x tan(t): {err:.2e}")

# The time-Taylor oracle recovers the tan series 1, 1/3, 2/15, 17/315
sol = taylor_ck(burgers, 8)
print("Taylor coefficients of x:", sol.coeffs[1:8:2, 1])
print("estimated time radius:", sol.radius(), "vs pi/2 =", math.pi / 2)
