"""Walk-through: the two-component theory and a constant-curvature pencil.

In two components every diagonal pair is controlled by a single potential
F(u): flatness of the second metric is a linear first-order system for the
diagonal entries, and the flat-pencil property is one more linear
second-order equation on F.  The logarithmic potential F = c*ln(u1 - u2)
solves both for every c.
"""

import numpy as np

from flatpencil import (
    MetricPair,
    TwoCompModel,
    assemble_two_metrics,
    check_flat_pencil,
    check_lequa,
    check_sys,
    constant_curvature_pencil,
    parse,
    sample_points,
)

raw = sample_points(2, 10, seed=7, lo=0.3, hi=2.0)
points = np.column_stack([np.max(raw, axis=1) + 0.2, np.min(raw, axis=1)])

print("logarithmic potentials F = c*ln(u1 - u2), f^i = u^i:")
for c, b_text in ((0.5, "sqrt(u1-u2)"), (1.0, "u1-u2")):
    b = parse(b_text, 2)
    model = TwoCompModel(
        b, b, parse(f"({c})*ln(u1-u2)", 2), -1, 1,
        parse("u1", 1), parse("u1", 1),
    )
    rs = check_sys(model, points).max_residuals["sys"]
    rl = check_lequa(model, points).max_residuals["lequa"]
    g1, g2 = assemble_two_metrics(model)
    flat = check_flat_pencil(MetricPair(g1, g2, points)).passed
    print(f"  c = {c}: system residual {rs:.2e}, pencil-equation residual "
          f"{rl:.2e}, assembled pair flat pencil: {flat}")

print()
print("constant-curvature pencil (three flat members, one of curvature K):")
for K in (1.0, -1.0):
    metrics, result = constant_curvature_pencil(K, points)
    print(f"  K = {K:+.0f}: all residuals below tolerance: {result.passed}")
    for key, val in sorted(result.max_residuals.items()):
        print(f"    {key:15s} {val:.3e}")
