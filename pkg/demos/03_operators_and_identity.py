#!/usr/bin/env python3
"""Truncated operators, their weighted norms, and the identity tying the
squared norm of the transform of 1 to a third of the triple integral.

The remainder of the identity is controlled by the squared growth
constant times the mass, so its normalized version stays bounded as the
sampling of one fixed measure is refined.
"""

from curvperm import generate
from curvperm.kernels import K_INF, K_ZERO
from curvperm.sio import (
    cauchy_l2_norm,
    default_grid,
    l2_norm_T1,
    mv_identity_report,
    sup_l2_norm,
    theorem1_ratios,
)

mu = generate("segment", n=200)
grid = default_grid(mu)
print("truncated norms on the unit segment (n=200):")
for eps in grid.epsilons[::5]:
    print(f"  eps={eps:8.5f}:  |T_0 1| = {l2_norm_T1(K_ZERO, mu, eps):8.5f}"
          f"   |T_inf 1| = {l2_norm_T1(K_INF, mu, eps):8.5f}"
          f"   |C 1| = {cauchy_l2_norm(mu, eps):8.5f}")

val, eps = sup_l2_norm(K_INF, mu, grid)
print(f"sup over the grid: {val:.5f} attained at eps = {eps:.5f}")

print("\nidentity check under refinement (normalized remainders):")
for n in (100, 200, 400):
    m = generate("segment", n=n)
    mv = mv_identity_report(K_INF, m, 0.05)
    print(f"  n={n:4d}: lhs {mv.lhs:8.5f}  p/3 {mv.p_third: 8.5f}"
          f"  normalized remainder {mv.normalized_remainder:8.5f}")

print("\noperator-norm comparison ratios across measures:")
for name in ("segment", "circle", "cantor4"):
    m = (generate(name, n=128) if name != "cantor4"
         else generate("cantor4", level=3))
    r = theorem1_ratios(m, default_grid(m))
    print(f"  {name:9s}: forward {r.ratio_fwd:.4f}   backward {r.ratio_bwd:.4f}")
print("(a vertical line zeroes both norms; see demos/02 for the kernels)")
