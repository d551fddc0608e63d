"""Solve the two fixed-slope profiles, run the slope search and print the results.

Run from the repository root:  python demos/reproduce_tables.py
"""

import numpy as np

from cramer_dividends import ModelParams, UtilitySpec, search_initial_slope, solve_value_function

params = ModelParams(mu=0.26, lam=0.1, xi=0.4, beta=0.05)
power = UtilitySpec.power(0.5)

for b in (1.9, 2.0):
    sol = solve_value_function(params, power, b, x_max=10.0)
    print(f"slope {b}: {sol.regime.value}")
    print("   x          v        v_x          c")
    for x, v, vx, c in sol.rows_at(range(11)):
        print(f"{x:4.0f} {v:10.4f} {vx:10.4f} {c:10.4f}")
    print()

report = search_initial_slope(params, power)
print(f"{'label':>6} {'b':>14} {'a':>12} {'A':>12} {'a-A':>12}")
for r in report.rows:
    A = "" if r.A is None or np.isnan(r.A) else f"{r.A:12.6f}"
    gap = "" if r.A is None or np.isnan(r.A) else f"{r.a - r.A:12.6f}"
    print(f"{r.label.value:>6} {r.b:14.9f} {r.a:12.6f} {A:>12} {gap:>12}")
print(report.summary())
