"""
Operator constants
==================

For a right-hand side A(t, u, v) the solver needs M with
delta * |A(t, u, v)|_s <= M |v|_{s + delta} on the ball of radius R.  Sampled
estimates sit below the analytic majorant when both exist.
"""

from ckscale import ARG_U, ARG_V, Const, Dx, Mul, ProblemSpec
from ckscale.constants import estimate_constants
from ckscale.oracles import heat_probe

transport = ProblemSpec(Dx(ARG_V), Const((0, 1)), R=2.0)
burgers = ProblemSpec(Mul(ARG_U, Dx(ARG_V)), Const((0, 1)), R=2.0)

for spec in (transport, burgers):
    est = estimate_constants(spec)
    print(f"{spec.A}: M_est={est.M_est:.5f} M_analytic={est.M_analytic} "
          f"K_est={est.K_est:.3f} K_analytic={est.K_analytic}")

# A second derivative has no such M: the sampled ratio grows like 1/delta.
ladder = (0.2, 0.1, 0.05, 0.025)
print("slope for dx:   ", round(heat_probe(ladder, Dx(ARG_V)), 3))
print("slope for dx dx:", round(heat_probe(ladder), 3))
