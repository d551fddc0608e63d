"""Compare the ODE value with a Monte Carlo estimate under the solved policy.

A smaller path count than the acceptance test keeps this quick; pass a
number on the command line to change it.
"""

import sys

from cramer_dividends import ModelParams, UtilitySpec, solve_value_function
from cramer_dividends.simulator import ConstantPolicy, GridPolicy, estimate_value

n_paths = int(sys.argv[1]) if len(sys.argv) > 1 else 20_000
params = ModelParams(mu=0.26, lam=0.1, xi=0.4, beta=0.05)
power = UtilitySpec.power(0.5)

sol = solve_value_function(params, power, 1.9, x_max=10.0)
policy = GridPolicy.from_solution(sol)

for x0 in (0.0, 5.0):
    ode = sol.value(x0)
    est = estimate_value(params, power, policy, x0, n_paths=n_paths, seed=1)
    flat = estimate_value(params, power, ConstantPolicy(float(sol.cs[0])), x0, n_paths=n_paths, seed=1)
    z = (est.mean - ode) / est.std_error
    print(f"x0={x0:4.1f}  ode={ode:8.4f}  mc={est.mean:8.4f} +/- {est.std_error:.4f}  (z={z:+.2f})"
          f"  ruin={est.ruin_fraction:.3f}  constant-rate policy={flat.mean:8.4f}")
