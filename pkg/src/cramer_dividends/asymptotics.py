"""Large-reserve asymptotics of the value function, its slope and the optimal rate.

Power utility ``x**a / a``::

    v(x)  ~ ((1 - a) / beta)**(1 - a) * x**a / a
    v'(x) ~ ((1 - a) / beta)**(1 - a) * x**(a - 1)
    c(x)  ~ beta * x / (1 - a)

Log utility ``ln(1 + x)``::

    v(x)  ~ (ln(beta * (x + 1)) - 1) / beta
    v'(x) ~ 1 / (beta * (x + 1))
    c(x)  ~ beta * x + beta - 1
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .hjb import HjbSolution, Regime
from .model import ModelParams, UtilitySpec

__all__ = [
    "asymptotic_value",
    "asymptotic_slope",
    "asymptotic_rate",
    "ConvergenceDiagnostic",
    "convergence_diagnostic",
]


def asymptotic_value(p: ModelParams, u: UtilitySpec, x):
    x = np.asarray(x, dtype=float)
    if u.is_power:
        a = u.alpha
        out = ((1 - a) / p.beta) ** (1 - a) * np.power(x, a) / a
    else:
        out = (np.log(p.beta * (x + 1.0)) - 1.0) / p.beta
    return out if out.ndim else float(out)


def asymptotic_slope(p: ModelParams, u: UtilitySpec, x):
    x = np.asarray(x, dtype=float)
    if u.is_power:
        a = u.alpha
        out = ((1 - a) / p.beta) ** (1 - a) * np.power(x, a - 1)
    else:
        out = 1.0 / (p.beta * (x + 1.0))
    return out if out.ndim else float(out)


def asymptotic_rate(p: ModelParams, u: UtilitySpec, x):
    x = np.asarray(x, dtype=float)
    if u.is_power:
        out = p.beta * x / (1 - u.alpha)
    else:
        out = p.beta * x + p.beta - 1.0
    return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class ConvergenceDiagnostic:
    xs: np.ndarray
    ratio_v: np.ndarray
    ratio_vx: np.ndarray
    ratio_c: np.ndarray

    @staticmethod
    def _trend(r) -> bool:
        dev = np.abs(np.asarray(r) - 1.0)
        return bool(np.all(np.diff(dev) <= 0))

    @property
    def trend_v(self) -> bool:
        """True when ``|ratio - 1|`` never grows from one sample to the next."""
        return self._trend(self.ratio_v)

    @property
    def trend_vx(self) -> bool:
        return self._trend(self.ratio_vx)

    @property
    def trend_c(self) -> bool:
        return self._trend(self.ratio_c)

    def to_csv(self, path, decimals: int = 6):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "ratio_v", "ratio_vx", "ratio_c"])
            for row in zip(self.xs, self.ratio_v, self.ratio_vx, self.ratio_c):
                w.writerow([f"{val:.{decimals}f}" for val in row])


def convergence_diagnostic(sol: HjbSolution, xs=None, n_samples: int = 20) -> ConvergenceDiagnostic:
    """Ratios of the numerical solution to the asymptotic formulas.

    By default the ratios are sampled at ``n_samples`` grid nodes spread
    evenly over the second half of the grid, ending at its last node.
    """
    if sol.regime is not Regime.DECAYING:
        raise ValueError(f"diagnostic needs a decaying solution, got {sol.regime.value}")
    if xs is None:
        idx = np.unique(np.linspace(sol.xs.size // 2, sol.xs.size - 1, n_samples).round().astype(int))
    else:
        idx = np.array([sol.index_of(float(x)) for x in np.atleast_1d(xs)])
    x = sol.xs[idx]
    p, u = sol.params, sol.utility
    with np.errstate(divide="ignore", invalid="ignore"):
        rv = sol.vs[idx] / asymptotic_value(p, u, x)
        rvx = sol.vxs[idx] / asymptotic_slope(p, u, x)
        rc = sol.cs[idx] / asymptotic_rate(p, u, x)
    return ConvergenceDiagnostic(x, np.atleast_1d(rv), np.atleast_1d(rvx), np.atleast_1d(rc))
