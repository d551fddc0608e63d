"""HJB ordinary differential equation for exponential claims.

For Exp(xi) claims the integro-differential HJB equation reduces, after
differentiation and an integration by parts, to

    (mu - c) v'' + (xi mu - beta - lam) v' - xi beta v + xi (U(c) - c v') = 0,

with ``c = (U')^{-1}(v')``.  The coefficient of ``v''`` vanishes where the
optimal rate equals the premium rate (the singular locus).
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .model import DomainError, ModelParams, UtilitySpec, optimal_rate_from_slope, utility_value
from .numerics import IvpConfig, integrate_ivp

__all__ = [
    "SingularLocusError",
    "ClassificationError",
    "Regime",
    "HjbSolution",
    "curvature_rhs",
    "boundary_v0",
    "solve_value_function",
    "classify_solution",
    "hjb_residual",
    "riccati_residual",
    "riccati_residuals",
    "BUBBLE_GUARD_FACTOR",
]

SINGULAR_EPS = 1e-12
BUBBLE_GUARD_FACTOR = 100.0


class SingularLocusError(ArithmeticError):
    """The dividend rate equals the premium rate, so ``v''`` is undetermined."""


class ClassificationError(ValueError):
    pass


class Regime(enum.Enum):
    DECAYING = "decaying"
    BUBBLE = "bubble"
    SINGULAR_STOP = "singular_stop"


def curvature_rhs(p: ModelParams, u: UtilitySpec, v: float, vx: float) -> float:
    """``v''`` from the HJB ODE at state ``(v, v')``."""
    c = optimal_rate_from_slope(u, vx)
    denom = p.mu - c
    if abs(denom) < SINGULAR_EPS:
        raise SingularLocusError(f"optimal rate {c!r} equals premium rate at slope {vx!r}")
    numer = (p.xi * p.mu - p.beta - p.lam) * vx - p.xi * p.beta * v + p.xi * (utility_value(u, c) - c * vx)
    return -numer / denom


def boundary_v0(p: ModelParams, u: UtilitySpec, b: float) -> float:
    """``v(0)`` implied by the HJB equation at zero reserve for slope ``b``.

    At ``x = 0`` the claim integral vanishes, leaving
    ``(beta + lam) v(0) = mu b + U(c0) - c0 b``.
    """
    if u.kind == "log" and b > 1.0:
        raise DomainError("log utility needs an initial slope in (0, 1]")
    c0 = optimal_rate_from_slope(u, b)
    return float((p.mu * b + utility_value(u, c0) - c0 * b) / (p.beta + p.lam))


@dataclass(frozen=True, eq=False)
class HjbSolution:
    xs: np.ndarray
    vs: np.ndarray
    vxs: np.ndarray
    cs: np.ndarray
    regime: Regime
    params: ModelParams
    utility: UtilitySpec
    b: float
    x_stop: float | None = None
    stop_reason: str = "completed"
    spacing: float = field(default=0.01)

    @property
    def x_max(self) -> float:
        return float(self.xs[-1])

    def _check(self, x: float):
        if not (self.xs[0] - 1e-12 <= x <= self.xs[-1] + 1e-12):
            raise DomainError(f"x={x!r} outside the solved range [{self.xs[0]}, {self.xs[-1]}]")

    def value(self, x):
        """Cubic Hermite interpolation of ``v`` using the stored slopes."""
        x = np.asarray(x, dtype=float)
        for xv in np.ravel(x):
            self._check(float(xv))
        i = np.clip(np.searchsorted(self.xs, x, side="right") - 1, 0, self.xs.size - 2)
        x0, x1 = self.xs[i], self.xs[i + 1]
        h = x1 - x0
        s = (x - x0) / h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        out = h00 * self.vs[i] + h10 * h * self.vxs[i] + h01 * self.vs[i + 1] + h11 * h * self.vxs[i + 1]
        return out if out.ndim else float(out)

    def slope(self, x):
        x = np.asarray(x, dtype=float)
        for xv in np.ravel(x):
            self._check(float(xv))
        out = np.interp(x, self.xs, self.vxs)
        return out if np.ndim(out) else float(out)

    def rows_at(self, xs) -> np.ndarray:
        """``(x, v, v_x, c)`` rows at exact grid nodes ``xs``."""
        idx = [self.index_of(x) for x in xs]
        return np.column_stack([self.xs[idx], self.vs[idx], self.vxs[idx], self.cs[idx]])

    def index_of(self, x: float) -> int:
        self._check(x)
        i = int(round((x - self.xs[0]) / self.spacing))
        if abs(self.xs[i] - x) > 1e-9:
            raise DomainError(f"x={x!r} is not a grid node")
        return i

    def to_csv(self, path, decimals: int = 6):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "v", "vx", "c"])
            for row in zip(self.xs, self.vs, self.vxs, self.cs):
                w.writerow([f"{val:.{decimals}f}" for val in row])


def classify_solution(vxs, *, stop_reason: str = "completed") -> Regime:
    """Label a solved slope profile as decaying or a bubble.

    Bubble: slopes increase over the final quarter or end above where they
    started.  Decaying: slopes decrease over the final quarter and end below
    the start.  An early guard stop is a bubble by construction; a singular
    or divergent stop is passed through.
    """
    if stop_reason == "guard":
        return Regime.BUBBLE
    if stop_reason in ("singular", "diverged"):
        return Regime.SINGULAR_STOP
    vxs = np.asarray(vxs, dtype=float)
    if vxs.size < 10:
        raise ClassificationError("need at least 10 grid points to classify")
    tail = np.diff(vxs[-(vxs.size // 4 + 1):])
    if np.all(tail > 0) or vxs[-1] > vxs[0]:
        return Regime.BUBBLE
    if np.all(tail < 0) and vxs[-1] < vxs[0]:
        return Regime.DECAYING
    raise ClassificationError("indeterminate: slope tail is not monotone")


def solve_value_function(p: ModelParams, u: UtilitySpec, b: float, x_max: float = 10.0,
                         cfg: IvpConfig | None = None) -> HjbSolution:
    """Integrate the HJB ODE from ``(boundary_v0(b), b)`` over ``[0, x_max]``."""
    cfg = cfg or IvpConfig()
    if not x_max > 0:
        raise ValueError("x_max must be positive")
    v0 = boundary_v0(p, u, b)
    c0 = optimal_rate_from_slope(u, b)
    if abs(p.mu - c0) < SINGULAR_EPS:
        raise SingularLocusError(f"initial slope {b!r} lies on the singular locus")

    def rhs(x, y):
        return (y[1], curvature_rhs(p, u, y[0], y[1]))

    limit = BUBBLE_GUARD_FACTOR * b

    def guard(x, y):
        return y[1] > limit

    res = integrate_ivp(rhs, 0.0, (v0, b), x_max, cfg, guard=guard)
    vs, vxs = res.ys[:, 0], res.ys[:, 1]
    cs = optimal_rate_from_slope(u, vxs)
    if res.completed:
        regime = classify_solution(vxs)
        x_stop = None
    else:
        regime = classify_solution(vxs, stop_reason=res.reason)
        x_stop = res.x_stop
    return HjbSolution(res.xs, vs, vxs, np.asarray(cs, dtype=float), regime, p, u, float(b),
                       x_stop=x_stop, stop_reason=res.reason, spacing=cfg.dense_spacing)


def hjb_residual(sol: HjbSolution, x: float) -> float:
    """Residual of the integro-differential HJB equation at a grid node.

    ``(mu - c) v_x - (beta + lam) v + U(c) + lam * int_0^x v(x - y) xi e^{-xi y} dy``
    with the claim integral taken by the trapezoid rule on the solution grid.
    """
    p, u = sol.params, sol.utility
    i = sol.index_of(x)
    v, vx, c = sol.vs[i], sol.vxs[i], sol.cs[i]
    if i == 0:
        conv = 0.0
    else:
        ys = sol.xs[i] - sol.xs[: i + 1]
        integrand = sol.vs[: i + 1] * p.xi * np.exp(-p.xi * ys)
        conv = float(np.trapezoid(integrand[::-1], ys[::-1]))
    return float((p.mu - c) * vx - (p.beta + p.lam) * v + utility_value(u, c) + p.lam * conv)


class RiccatiResidual(NamedTuple):
    value: float
    one_sided: bool


def _riccati_lhs(p: ModelParams, u: UtilitySpec, v, y, yv):
    if u.is_power:
        k = -u.alpha / (1.0 - u.alpha)
        ypow = np.power(y, k)
        return (p.mu * yv * y + (p.xi * p.mu - p.beta - p.lam) * y - p.xi * p.beta * v
                + p.xi * (1.0 - u.alpha) / u.alpha * ypow - ypow * yv)
    return ((p.xi * p.mu + p.xi - p.beta - p.lam) * y - p.xi * np.log(y) - p.xi * p.beta * v - p.xi
            + (p.mu + 1.0) * y * yv - yv)


def _dy_dv(vs, ys):
    """Three-point derivative of y with respect to v on a non-uniform v grid."""
    n = vs.size
    d = np.empty(n)
    h1 = vs[1:-1] - vs[:-2]
    h2 = vs[2:] - vs[1:-1]
    d[1:-1] = (-h2 / (h1 * (h1 + h2)) * ys[:-2] + (h2 - h1) / (h1 * h2) * ys[1:-1]
               + h1 / (h2 * (h1 + h2)) * ys[2:])
    d[0] = (ys[1] - ys[0]) / (vs[1] - vs[0])
    d[-1] = (ys[-1] - ys[-2]) / (vs[-1] - vs[-2])
    return d


def riccati_residuals(sol: HjbSolution) -> np.ndarray:
    """Reduced first-order residual at every grid node (ends one-sided)."""
    if np.any(np.diff(sol.vs) <= 0):
        raise DomainError("value function is not strictly increasing on the grid")
    yv = _dy_dv(sol.vs, sol.vxs)
    return _riccati_lhs(sol.params, sol.utility, sol.vs, sol.vxs, yv)


def riccati_residual(sol: HjbSolution, index: int) -> RiccatiResidual:
    """Residual of the equation for ``y(v) = v_x`` at one grid index."""
    n = sol.xs.size
    if not -n <= index < n:
        raise IndexError(index)
    index %= n
    lo, hi = max(index - 1, 0), min(index + 2, n)
    vs, ys = sol.vs[lo:hi], sol.vxs[lo:hi]
    if np.any(np.diff(vs) <= 0):
        raise DomainError("value function is not strictly increasing near this index")
    yv = _dy_dv(vs, ys)[index - lo]
    value = float(_riccati_lhs(sol.params, sol.utility, sol.vs[index], sol.vxs[index], yv))
    return RiccatiResidual(value, index in (0, n - 1))
