"""
The invariant set and the integrated estimate
=============================================

Paths are monitored on a finite grid of (tau, s) points inside the
triangle 1 - s - a tau > 0.  We check the radius bound, the operator
bound and the time-Lipschitz bound before and after one Picard step.
"""

import numpy as np

from ckscale import ARG_U, ARG_V, Const, Dx, Mul, ProblemSpec
from ckscale.solver import (ExistenceFrame, ScalePath, SeminormGrid, apply_F,
                            check_S, time_grid, verify_kn)

burgers = ProblemSpec(Mul(ARG_U, Dx(ARG_V)), Const((0, 1)), R=2.0)
frame = ExistenceFrame.from_constants(M=2.0, K=1.0, R=2.0)
horizon = 0.5 * frame.tau_max
grid = SeminormGrid.build(frame, horizon, theta=0.1)
print(f"{len(grid.points)} grid points, tau_max = {frame.tau_max:.5f}")

path = ScalePath.zero(time_grid(horizon, horizon / 200), 64)
for k in range(4):
    rep = check_S(path, burgers, frame, grid)
    print(f"F^{k}(0): in S = {rep.in_S}, margins = {np.round(rep.worst_margins, 4)}")
    path = apply_F(burgers, frame, path)

# The integrated bound stays below its closed form for moderate K ...
print("max ratio, K = 1: ", verify_kn(ExistenceFrame.from_constants(1, 1, 1.0)).max_ratio)
# ... but not once K is large: the logarithmic term takes over near the edge.
print("max ratio, K = 10:", verify_kn(ExistenceFrame.from_constants(1, 10, 1.0)).max_ratio)
