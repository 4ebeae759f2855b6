"""
Weighted power-series scales
============================

Each level s in (0, 1) carries the norm sum_k |c_k| s^k.  Norms grow with
s, and differentiation costs one over the gap between two levels.
"""

import numpy as np

from ckscale import AnalyticElement, derivative

# 1 / (1 - x / 2), truncated at degree 64
u = AnalyticElement(0.5 ** np.arange(65))

for s in (0.1, 0.5, 0.9):
    print(f"|u|_{s} = {u.norm(s):.6f}")

# The derivative bound: delta * |u'|_s <= |u|_{s + delta}
du = derivative(u)
for s, delta in ((0.2, 0.1), (0.5, 0.3), (0.8, 0.19)):
    lhs = delta * du.norm(s)
    rhs = u.norm(s + delta)
    print(f"s={s}, delta={delta}: {lhs:.6f} <= {rhs:.6f}")

# Products are Cauchy products, and the norm is submultiplicative
v = AnalyticElement([1.0, -2.0, 0.5])
print("|u v|_0.5 =", (u * v).norm(0.5), "<=", u.norm(0.5) * v.norm(0.5))
