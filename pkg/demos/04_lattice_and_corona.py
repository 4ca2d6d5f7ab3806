#!/usr/bin/env python3
"""The cube hierarchy and the stopping-time decomposition.

A straight segment survives every stopping rule: one tree, empty stopping
family, and the whole measure in the good set.  The Cantor dust stops
immediately on accumulated permutations and re-roots generation after
generation; the packing sum over all roots stays controlled by the flat
permutation plus the growth term.
"""

from curvperm import generate
from curvperm.corona import Params, build_top, packing_sum, stop_mass_report
from curvperm.lattice import build

params = Params()
for name, mu in [
    ("segment", generate("segment", n=100)),
    ("graph slope 0.2", generate("lipschitz_graph", n=128, slope=0.2, teeth=1)),
    ("cantor4(3)", generate("cantor4", level=3)),
]:
    lat = build(mu)
    print(f"\n=== {name} ===")
    print(f"lattice: {len(lat.cubes)} cubes over {len(lat.levels)} levels; "
          f"sibling ball violations: "
          f"{len(lat.report['sibling_5b_violations'])}")
    corona = build_top(lat, mu, params)
    gens = [len(g) for g in corona.generations]
    print(f"corona generations: {gens}")
    root_tree = corona.trees[lat.root.id]
    labels = {}
    for tree in corona.trees.values():
        for v in tree.stop.values():
            labels[v.label] = labels.get(v.label, 0) + 1
    print(f"stop labels across all trees: {labels or 'none'}")
    print(f"root tree: |Tree| = {len(root_tree.tree_ids)}, "
          f"|DbTree| = {len(root_tree.dbtree_ids)}, "
          f"good atoms = {root_tree.g_r.size}, far atoms = {root_tree.r_far.size}")
    rep = stop_mass_report(lat, root_tree)
    print(f"stopped mass ratios: "
          f"{ {k: round(v, 4) for k, v in rep.ratios.items() if v} or 'none' }")
    pack = packing_sum(lat, corona, mu)
    print(f"packing: sum {pack.top_sum:.4f}, p0 {pack.p0:.4f}, "
          f"p_inf {pack.p_inf:.4f}, upper ratio {pack.ratio_upper:.4f}")
