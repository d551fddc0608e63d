"""Ratios of long solutions to the large-reserve formulas, for both utilities."""

from cramer_dividends import ModelParams, UtilitySpec, search_initial_slope, solve_value_function
from cramer_dividends.asymptotics import convergence_diagnostic

params = ModelParams(mu=0.26, lam=0.1, xi=0.4, beta=0.05)

cases = [("power(0.5)", UtilitySpec.power(0.5), 1.9)]
log = UtilitySpec.log()
cases.append(("log", log, search_initial_slope(params, log).decaying_slope))

for name, u, b in cases:
    sol = solve_value_function(params, u, b, x_max=500.0)
    diag = convergence_diagnostic(sol, xs=[10.0, 50.0, 100.0, 250.0, 500.0])
    print(f"{name}, slope {b:.9f}: {sol.regime.value}")
    print("     x   v/asym  vx/asym   c/asym")
    for row in zip(diag.xs, diag.ratio_v, diag.ratio_vx, diag.ratio_c):
        print("{:6.0f} {:8.5f} {:8.5f} {:8.5f}".format(*row))
    print()
