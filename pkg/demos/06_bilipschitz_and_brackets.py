#!/usr/bin/env python3
"""Bi-Lipschitz images, the curvature budget, and the empirical brackets
for the comparison constants.

Shearing a measure changes its curvature by at most a constant multiple
of the original curvature plus the mass; isometries preserve it exactly.
Across a corpus, the largest permutation ratio brackets the absolute
constant of the two-kernel comparison from below.
"""

from curvperm import generate
from curvperm.experiments import bilipschitz_experiment, cantor_growth, corpus, t0_bracket

print("Cantor permutation growth by level (collinear control stays 0):")
rec = cantor_growth(4)
for lvl, v, c in zip(rec["levels"], rec["p_inf"], rec["controls"]):
    print(f"  level {lvl}: p_inf = {v:.6f}   control = {c: .2e}")

print("\nshear images of the slope-0.2 graph:")
rep = bilipschitz_experiment(
    generate("lipschitz_graph", n=128, slope=0.2, teeth=1)
)
print(f"  base c^2 = {rep['c2']:.6f}, budget = {rep['budget']:.6f}")
for row in rep["rows"]:
    print(f"  L = {row['L']}: image c^2 = {row['c2_image']:.6f}, "
          f"ratio = {row['ratio']:.4f}")
print(f"  isometry relative error: {rep['isometry_rel_err']:.2e}")

print("\nempirical comparison brackets over the corpus:")
bracket = t0_bracket(corpus())
for name, row in sorted(bracket["rows"].items()):
    print(f"  {name:18s} perm ratio {row['perm_ratio']:8.4f}   "
          f"operator ratio {row['ratio_fwd']:8.4f}")
print(f"  max permutation ratio: {bracket['max_perm_ratio']:.4f}")
print(f"  max operator ratio:    {bracket['max_ratio_fwd']:.4f}")
print("(these bracket the existential constants empirically; no universal "
      "value is claimed)")
