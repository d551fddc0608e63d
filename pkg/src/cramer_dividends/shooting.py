"""Locating the free initial slope ``v_x(0)`` by first-jump self-consistency.

For a candidate slope ``b`` the ODE is solved, the optimal rate is fitted by
a line ``c_hat(x) = a1 x + b1`` and the value by ``v_hat(x) = a2 x**alpha + b2``
(``a2 ln(1 + x) + b2`` for log utility).  Following the reserve from zero
along ``x' = mu - c_hat(x)`` until the first claim gives the estimate

    A = E[e^{-beta T} v_hat(x(T) - S)] + E[int_0^T e^{-beta t} U(c_hat(x(t))) dt],

``T ~ Exp(lam)``, ``S ~ Exp(xi)``, which should reproduce ``a = v(0)``.
Candidates are labelled too big (the ODE solution is a bubble), too small
(the fitted intercept exceeds ``mu`` so the trajectory would go negative)
or correct.
"""

from __future__ import annotations

import csv
import enum
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .hjb import ClassificationError, HjbSolution, Regime, boundary_v0, solve_value_function
from .model import ModelParams, UtilitySpec, utility_value
from .numerics import (IvpConfig, LinearFit, LogFit, PowerFit, adaptive_simpson, fit_linear, fit_log,
                       fit_power, quad_exp_weight)

__all__ = [
    "Label",
    "InfeasibleTrajectory",
    "ShootingConfig",
    "CandidateEvaluation",
    "ShootingReport",
    "deterministic_trajectory",
    "first_jump_value",
    "running_dividends_nested",
    "first_jump_monte_carlo",
    "evaluate_candidate",
    "search_initial_slope",
    "default_start",
]

log = logging.getLogger(__name__)

DEFAULT_SCHEDULE = tuple(10.0 ** -k for k in range(2, 10))


class Label(enum.Enum):
    CORRECT = "c."
    TOO_BIG = "t.b."
    TOO_SMALL = "t.s."


class InfeasibleTrajectory(ValueError):
    """The fitted intercept exceeds ``mu``: the reserve would fall below zero."""


@dataclass(frozen=True)
class ShootingConfig:
    b_start: float | None = None
    step_schedule: tuple = DEFAULT_SCHEDULE
    epsilon: float = 0.005
    fit_count: int = 11
    x_max: float = 10.0
    mc_check: int | None = None
    ivp: IvpConfig = field(default_factory=IvpConfig)
    quad_tol: float = 1e-11
    max_evaluations: int = 1000

    def __post_init__(self):
        sched = tuple(float(d) for d in self.step_schedule)
        object.__setattr__(self, "step_schedule", sched)
        if not sched or any(d <= 0 for d in sched) or any(b >= a for a, b in zip(sched, sched[1:])):
            raise ValueError("step_schedule must be positive and strictly decreasing")
        if self.fit_count < 3:
            raise ValueError("fit_count must be at least 3")
        if self.fit_points[-1] > self.x_max + 1e-12:
            raise ValueError("fit points x = 0..fit_count-1 must lie within x_max")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    @property
    def fit_points(self) -> np.ndarray:
        return np.arange(self.fit_count, dtype=float)


@dataclass(frozen=True, eq=False)
class CandidateEvaluation:
    b: float
    label: Label
    a: float
    A: float | None = None
    gap: float | None = None
    cfit: LinearFit | None = None
    vfit: PowerFit | LogFit | None = None
    regime: Regime | None = None
    mc: tuple | None = None  # (mean, std_error) of the Monte Carlo cross-check


def deterministic_trajectory(p: ModelParams, fit: LinearFit, t):
    """Reserve ``x(t)`` from zero under ``x' = mu - (a1 x + b1)`` before the first claim."""
    if not fit.a1 > 0:
        raise ValueError("trajectory needs a positive fitted slope a1")
    if fit.b1 > p.mu:
        raise InfeasibleTrajectory(f"fitted intercept {fit.b1:.6g} exceeds mu={p.mu:g}")
    level = (p.mu - fit.b1) / fit.a1
    t = np.asarray(t, dtype=float)
    out = level * -np.expm1(-fit.a1 * t)
    return out if out.ndim else float(out)


def _rate_along(p, cfit, t):
    return np.maximum(cfit(deterministic_trajectory(p, cfit, t)), 0.0)


def first_jump_value(p: ModelParams, u: UtilitySpec, cfit: LinearFit, vfit, *, tol: float = 1e-11) -> float:
    """First-jump estimate ``A`` of ``v(0)`` for fitted policy and value.

    ``v_hat`` is taken as zero below zero reserve (ruin pays nothing), so the
    claim-size integral stops at the current reserve.  The running term uses
    ``E int_0^T g(t) dt = int_0^inf e^{-lam t} g(t) dt``.
    """
    deterministic_trajectory(p, cfit, 0.0)

    def jump_integrand(t):
        xt = deterministic_trajectory(p, cfit, t)
        inner = quad_exp_weight(lambda s: vfit(np.maximum(xt - s, 0.0)), p.xi, upper=xt, tol=tol)
        return np.exp(-p.beta * t) * inner

    jump = quad_exp_weight(jump_integrand, p.lam, tol=tol)
    rate = p.beta + p.lam
    running = quad_exp_weight(lambda t: utility_value(u, _rate_along(p, cfit, t)), rate, tol=tol) / rate
    return float(jump + running)


def running_dividends_nested(p: ModelParams, u: UtilitySpec, cfit: LinearFit, *, tol: float = 1e-11) -> float:
    """``E[int_0^T e^{-beta t} U(c_hat(x(t))) dt]`` computed as the nested double integral."""

    def inner(t_upper):
        return np.array([adaptive_simpson(
            lambda t: np.exp(-p.beta * t) * utility_value(u, _rate_along(p, cfit, t)), 0.0, T, tol=tol * 1e-2)
            for T in np.ravel(t_upper)]).reshape(np.shape(t_upper))

    return quad_exp_weight(inner, p.lam, tol=tol)


def first_jump_monte_carlo(p: ModelParams, u: UtilitySpec, cfit: LinearFit, vfit, n: int = 10**6,
                           seed: int = 0, dt: float = 0.005) -> tuple[float, float]:
    """Monte Carlo estimate of the first-jump identity: ``(mean, std_error)``.

    The running integral is read off a cumulative trapezoid table on a
    ``dt`` time grid, independent of the quadrature used by
    :func:`first_jump_value`.
    """
    rng = np.random.default_rng(seed)
    T = rng.exponential(1.0 / p.lam, n)
    S = rng.exponential(1.0 / p.xi, n)
    grid = np.arange(0.0, T.max() + 2 * dt, dt)
    g = np.exp(-p.beta * grid) * utility_value(u, _rate_along(p, cfit, grid))
    cum = np.concatenate([[0.0], np.cumsum(0.5 * dt * (g[1:] + g[:-1]))])
    running = np.interp(T, grid, cum)
    post = deterministic_trajectory(p, cfit, T) - S
    survived = post >= 0
    jump = np.zeros(n)
    jump[survived] = np.exp(-p.beta * T[survived]) * vfit(post[survived])
    sample = jump + running
    return float(sample.mean()), float(sample.std(ddof=1) / math.sqrt(n))


def _value_fit(u: UtilitySpec, xs, vs):
    return fit_power(xs, vs, u.alpha) if u.is_power else fit_log(xs, vs)


def evaluate_candidate(p: ModelParams, u: UtilitySpec, b: float, cfg: ShootingConfig | None = None,
                       solution: HjbSolution | None = None) -> CandidateEvaluation:
    """Run one step of the shooting pipeline for slope ``b`` and label it."""
    cfg = cfg or ShootingConfig()
    a = boundary_v0(p, u, b)
    try:
        sol = solution or solve_value_function(p, u, b, cfg.x_max, cfg.ivp)
    except ClassificationError:
        return CandidateEvaluation(b, Label.TOO_BIG, a)
    if sol.regime is not Regime.DECAYING:
        return CandidateEvaluation(b, Label.TOO_BIG, a, regime=sol.regime)
    xs = cfg.fit_points
    idx = [sol.index_of(x) for x in xs]
    cfit = fit_linear(xs, sol.cs[idx])
    vfit = _value_fit(u, xs, sol.vs[idx])
    if cfit.b1 > p.mu or not cfit.a1 > 0:
        return CandidateEvaluation(b, Label.TOO_SMALL, a, cfit=cfit, vfit=vfit, regime=sol.regime)
    A = first_jump_value(p, u, cfit, vfit, tol=cfg.quad_tol)
    mc = first_jump_monte_carlo(p, u, cfit, vfit, n=cfg.mc_check) if cfg.mc_check else None
    return CandidateEvaluation(b, Label.CORRECT, a, A, a - A, cfit, vfit, sol.regime, mc)


def default_start(p: ModelParams, u: UtilitySpec, step: float) -> float:
    """Smallest multiple of ``step`` strictly above the singular slope."""
    b_sing = u.singular_slope(p.mu)
    b = (math.floor(b_sing / step + 1e-9) + 1) * step
    if not u.is_power:
        b = min(b, 1.0)
    return round(b, 12)


@dataclass(eq=False)
class ShootingReport:
    rows: list
    b_final: float | None
    a_final: float | None
    gap_final: float | None
    bracket: tuple  # (largest too-small slope, smallest slope above it that is not too small)
    converged: bool
    warnings: list = field(default_factory=list)

    @property
    def decaying_slope(self) -> float | None:
        """Final correct slope, or the upper end of the too-small region if none was found."""
        return self.b_final if self.b_final is not None else self.bracket[0]

    def summary(self) -> dict:
        return {
            "b_final": self.b_final,
            "a_final": self.a_final,
            "gap": self.gap_final,
            "bracket": list(self.bracket),
            "converged": self.converged,
            "evaluations": len(self.rows),
            "warnings": list(self.warnings),
        }

    def to_csv(self, path, decimals: int = 6):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["label", "b", "a", "A", "gap"])
            for r in self.rows:
                w.writerow([r.label.value, f"{r.b:.12g}",
                            "" if r.label is not Label.CORRECT else f"{r.a:.{decimals}f}",
                            "" if r.A is None else f"{r.A:.{decimals}f}",
                            "" if r.gap is None else f"{r.gap:.{decimals}f}"])

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def search_initial_slope(p: ModelParams, u: UtilitySpec, cfg: ShootingConfig | None = None) -> ShootingReport:
    """Staged scan for the initial slope.

    Starting at ``b_start`` the slope is lowered by the first step until a
    too-small candidate appears; from there it is raised by the next step
    until the candidate is no longer too small, then lowered by the step
    after that, and so on through the schedule.  The scan stops early at
    the first correct candidate with ``|a - A| < epsilon``.
    """
    cfg = cfg or ShootingConfig()
    b = cfg.b_start if cfg.b_start is not None else default_start(p, u, cfg.step_schedule[0])
    rows: list[CandidateEvaluation] = []
    warnings: list[str] = []
    seen: dict[float, CandidateEvaluation] = {}

    def evaluate(bv):
        bv = round(bv, 12)
        if bv not in seen:
            ev = evaluate_candidate(p, u, bv, cfg)
            seen[bv] = ev
            rows.append(ev)
            log.debug("b=%.12g %s gap=%s", bv, ev.label.value, ev.gap)
        return seen[bv]

    def done(ev):
        return ev.label is Label.CORRECT and abs(ev.gap) < cfg.epsilon

    ev = evaluate(b)
    if ev.label is Label.TOO_SMALL:
        raise ValueError(f"b_start={b:g} is too small (fitted intercept exceeds mu); choose a larger start")
    converged = done(ev)
    direction = -1
    upper = 1.0 if not u.is_power else math.inf
    prev_correct = ev if ev.label is Label.CORRECT else None
    for d in cfg.step_schedule if not converged else ():
        while len(rows) < cfg.max_evaluations:
            nb = round(b + direction * d, 12)
            if nb <= 0 or nb > upper:
                warnings.append(f"scan left the admissible slope range at b={nb:.12g}")
                break
            ev = evaluate(nb)
            b = nb
            if ev.label is Label.CORRECT:
                if (direction < 0 and prev_correct is not None and prev_correct.b > b
                        and abs(ev.gap) > abs(prev_correct.gap)):
                    warnings.append(f"gap grew from {prev_correct.gap:.3e} to {ev.gap:.3e} at b={b:.12g}")
                prev_correct = ev
                if done(ev):
                    converged = True
                    break
            if direction < 0 and ev.label is Label.TOO_SMALL:
                break
            if direction > 0 and ev.label is not Label.TOO_SMALL:
                break
        else:
            warnings.append("evaluation budget exhausted")
        if converged or len(rows) >= cfg.max_evaluations:
            break
        direction = -direction

    correct = [r for r in rows if r.label is Label.CORRECT]
    final = prev_correct if prev_correct is not None else None
    small = [r.b for r in rows if r.label is Label.TOO_SMALL]
    b_low = max(small) if small else None
    above = [r.b for r in rows if r.label is not Label.TOO_SMALL and (b_low is None or r.b > b_low)]
    b_high = min(above) if above else None
    if converged:
        final = rows[-1]
    elif correct and final is None:
        final = correct[-1]
    return ShootingReport(
        rows=rows,
        b_final=None if final is None else final.b,
        a_final=None if final is None else final.a,
        gap_final=None if final is None else final.gap,
        bracket=(b_low, b_high),
        converged=converged,
        warnings=warnings,
    )
