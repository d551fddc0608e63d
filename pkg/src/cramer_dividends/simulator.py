"""Monte Carlo estimate of the discounted utility of dividends under a fixed policy.

Between claims the reserve follows ``x' = mu - c(x)``; claims arrive at rate
``lam`` with Exp(``xi``) sizes and the path stops at ruin, the first claim
that leaves the reserve negative.  At zero reserve the paid rate is
``min(c(0), mu)``, so dividends alone never cause ruin.  When ``c(0) >= mu``
a path that reaches zero stays there paying ``mu`` until the next claim,
which ruins it; that stretch is accounted for in closed form.

Randomness is fixed per path: every path owns a row of inter-arrival times
and claim sizes drawn up front from a chunk generator spawned off one
``SeedSequence``.  Results therefore depend only on the seed, not on the
step size, the chunking order or the number of workers.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .hjb import HjbSolution
from .model import DomainError, ModelParams, UtilitySpec, utility_value

__all__ = [
    "LinearPolicy",
    "GridPolicy",
    "ConstantPolicy",
    "PathEstimate",
    "simulate_path",
    "estimate_value",
    "default_horizon",
]

DEFAULT_DT = 0.01
CHUNK_SIZE = 8192
_BUFFER_COLUMNS = 16


@dataclass(frozen=True)
class LinearPolicy:
    """``c(x) = max(a1 x + b1, 0)``; the reserve path is followed in closed form."""

    a1: float
    b1: float

    def __post_init__(self):
        if not (math.isfinite(self.a1) and math.isfinite(self.b1)) or self.a1 < 0:
            raise DomainError("linear policy needs a finite nonnegative slope a1")

    def rate(self, x):
        return np.maximum(self.a1 * np.asarray(x, dtype=float) + self.b1, 0.0)

    def flow(self, mu: float, x, h):
        """Exact reserve after time ``h`` starting from ``x`` (arrays)."""
        x = np.asarray(x, dtype=float)
        h = np.broadcast_to(np.asarray(h, dtype=float), x.shape)
        a1, b1 = self.a1, self.b1
        if a1 == 0.0:
            return np.maximum(x + (mu - max(b1, 0.0)) * h, 0.0)
        # below x_cut the rate is zero and the reserve rises at speed mu
        x_cut = max(-b1 / a1, 0.0)
        t_cut = np.maximum(x_cut - x, 0.0) / mu
        below = h <= t_cut
        y = np.where(below, x, np.maximum(x, x_cut))
        s = np.where(below, 0.0, h - t_cut)
        level = (mu - b1) / a1
        out = level + (y - level) * np.exp(-a1 * s)
        out = np.where(below, x + mu * h, out)
        return np.maximum(out, 0.0)


@dataclass(frozen=True, eq=False)
class GridPolicy:
    """Rate tabulated on an increasing grid, linear in between and beyond the last node."""

    xs: np.ndarray
    cs: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        cs = np.asarray(self.cs, dtype=float)
        if xs.ndim != 1 or xs.shape != cs.shape or xs.size < 2:
            raise DomainError("grid policy needs matching 1-d arrays with at least two nodes")
        if np.any(np.diff(xs) <= 0) or xs[0] != 0.0:
            raise DomainError("grid must start at 0 and increase strictly")
        if not np.all(np.isfinite(cs)) or np.any(cs < 0) or np.any(np.diff(cs) < 0):
            raise DomainError("policy must be finite, nonnegative and non-decreasing")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "cs", cs)
        steps = np.diff(xs)
        uniform = np.allclose(steps, steps[0], rtol=1e-9, atol=0.0)
        object.__setattr__(self, "_spacing", float(steps[0]) if uniform else None)
        object.__setattr__(self, "_dc", np.diff(cs))
        object.__setattr__(self, "_tail_slope", float((cs[-1] - cs[-2]) / (xs[-1] - xs[-2])))

    @classmethod
    def from_solution(cls, sol: HjbSolution) -> "GridPolicy":
        return cls(sol.xs, sol.cs)

    def rate(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        xs, cs = self.xs, self.cs
        if self._spacing is None:
            out = np.interp(x, xs, cs)
        else:
            pos = x * (1.0 / self._spacing)
            i = pos.astype(np.intp)
            np.minimum(i, xs.size - 2, out=i)
            out = np.take(cs, i) + (pos - i) * np.take(self._dc, i)
        if np.ndim(x) and x.size and x.max() <= xs[-1]:
            return out
        return np.where(x > xs[-1], cs[-1] + self._tail_slope * (x - xs[-1]), out)


@dataclass(frozen=True)
class ConstantPolicy:
    c0: float

    def __post_init__(self):
        if not (math.isfinite(self.c0) and self.c0 >= 0):
            raise DomainError("constant rate must be finite and nonnegative")

    def rate(self, x):
        return np.full(np.shape(x), self.c0, dtype=float)


@dataclass(frozen=True)
class PathEstimate:
    mean: float
    std_error: float
    n_paths: int
    ruin_fraction: float
    horizon: float
    bias_bound: float

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def default_horizon(p: ModelParams) -> float:
    """``20 / beta``: the discount factor at the horizon is ``e^{-20}``."""
    return 20.0 / p.beta


def _utility_kernel(u: UtilitySpec):
    # unchecked U for the inner loop; rates are nonnegative by construction
    if u.is_power:
        a = u.alpha
        return lambda c: np.power(c, a) * (1.0 / a)
    return np.log1p


class _Stepper:
    """Advance reserve and discounted utility over per-path steps ``h``."""

    def __init__(self, p: ModelParams, u: UtilitySpec, policy):
        self.mu, self.beta = p.mu, p.beta
        self.policy = policy
        self.U = _utility_kernel(u)
        self.exact = isinstance(policy, LinearPolicy)
        c0 = float(policy.rate(np.array([0.0]))[0])
        # with c(0) > mu the paid rate at zero is capped at mu
        self.capped = c0 > p.mu
        # with c(0) >= mu zero reserve is held until the next claim
        self.sticky = c0 >= p.mu

    def paid_rate(self, x):
        c = self.policy.rate(x)
        if self.capped:
            c = np.where(x <= 0.0, np.minimum(c, self.mu), c)
        return c

    def __call__(self, x, t, h):
        disc0 = np.exp(-self.beta * t)
        disc_mid = disc0 * np.exp(-0.5 * self.beta * h)
        disc1 = disc0 * np.exp(-self.beta * h)
        mu, U = self.mu, self.U
        if self.exact:
            # closed-form reserve, Simpson's rule for the utility
            x_mid = self.policy.flow(mu, x, 0.5 * h)
            x_new = self.policy.flow(mu, x, h)
            g0 = disc0 * U(self.paid_rate(x))
            gm = disc_mid * U(self.paid_rate(x_mid))
            g1 = disc1 * U(self.paid_rate(x_new))
            return x_new, h / 6.0 * (g0 + 4.0 * gm + g1)
        c1 = self.paid_rate(x)
        k1 = mu - c1
        c2 = self.paid_rate(x + 0.5 * h * k1)
        k2 = mu - c2
        c3 = self.paid_rate(x + 0.5 * h * k2)
        k3 = mu - c3
        c4 = self.paid_rate(x + h * k3)
        k4 = mu - c4
        x_new = np.maximum(x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), 0.0)
        gain = h / 6.0 * (disc0 * U(c1) + 2.0 * disc_mid * (U(c2) + U(c3)) + disc1 * U(c4))
        return x_new, gain


def _check_policy(policy):
    if not isinstance(policy, (LinearPolicy, GridPolicy, ConstantPolicy)):
        raise TypeError(f"unsupported policy {type(policy).__name__}")


def _run_paths(p: ModelParams, u: UtilitySpec, policy, x0: float, horizon: float, dt: float,
               rng: np.random.Generator, n: int):
    """Simulate ``n`` paths; returns per-path totals and ruin times (NaN if not ruined)."""
    step = _Stepper(p, u, policy)
    gaps = [rng.exponential(1.0 / p.lam, (n, _BUFFER_COLUMNS))]
    sizes = [rng.exponential(1.0 / p.xi, (n, _BUFFER_COLUMNS))]

    def draw(rows, cols):
        # extend every row by a whole block so each path's stream is fixed
        while cols.max() >= gaps[0].shape[1]:
            gaps[0] = np.hstack([gaps[0], rng.exponential(1.0 / p.lam, (n, _BUFFER_COLUMNS))])
            sizes[0] = np.hstack([sizes[0], rng.exponential(1.0 / p.xi, (n, _BUFFER_COLUMNS))])
        return gaps[0][rows, cols], sizes[0][rows, cols]

    total = np.zeros(n)
    ruin = np.full(n, np.nan)
    idx = np.arange(n)
    x = np.full(n, float(x0))
    t = np.zeros(n)
    k = np.zeros(n, dtype=np.intp)
    t_jump = gaps[0][:, 0].copy()
    acc = np.zeros(n)
    done = np.zeros(n, dtype=bool)
    u_mu = float(utility_value(u, p.mu))

    while idx.size:
        if step.sticky:
            # at zero the reserve stays put, paying mu, until the next claim ruins it
            held = (x <= 0.0) & ~done
            if held.any():
                end = np.minimum(t_jump[held], horizon)
                acc[held] += u_mu * (np.exp(-p.beta * t[held]) - np.exp(-p.beta * end)) / p.beta
                rows = idx[held]
                ruin[rows] = np.where(t_jump[held] < horizon, t_jump[held], np.nan)
                done |= held
        h = np.minimum(np.minimum(dt, t_jump - t), horizon - t)
        h[done] = 0.0
        x_new, gain = step(x, t, h)
        x = np.where(done, x, x_new)
        acc += gain
        to_jump = ~done & (t_jump - t <= h) & (t_jump < horizon)
        to_end = ~done & ~to_jump & (horizon - t <= h)
        t = np.where(to_jump, t_jump, np.where(to_end, horizon, t + h))
        if to_jump.any():
            jumped = np.flatnonzero(to_jump)
            _, claim = draw(idx[jumped], k[jumped])
            gap, _ = draw(idx[jumped], k[jumped] + 1)
            k[jumped] += 1
            x_after = x[jumped] - claim
            dead = jumped[x_after < 0.0]
            ruin[idx[dead]] = t_jump[dead]
            done[dead] = True
            x[jumped] = np.maximum(x_after, 0.0)
            t_jump[jumped] += gap
        done |= to_end
        n_done = np.count_nonzero(done)
        if n_done and (n_done * 4 >= idx.size or n_done == idx.size):
            total[idx[done]] = acc[done]
            keep = ~done
            idx, x, t, k, t_jump, acc = idx[keep], x[keep], t[keep], k[keep], t_jump[keep], acc[keep]
            done = np.zeros(idx.size, dtype=bool)
    return total, ruin


def simulate_path(p: ModelParams, u: UtilitySpec, policy, x0: float, horizon: float | None = None,
                  seed: int = 0, dt: float = DEFAULT_DT) -> tuple[float, float | None]:
    """Discounted utility of one path and its ruin time (``None`` if it survives the horizon)."""
    _check_policy(policy)
    if not x0 >= 0:
        raise DomainError("initial reserve must be nonnegative")
    horizon = default_horizon(p) if horizon is None else float(horizon)
    if not horizon > 0:
        raise DomainError("horizon must be positive")
    total, ruin = _run_paths(p, u, policy, x0, horizon, dt, np.random.default_rng(seed), 1)
    return float(total[0]), None if np.isnan(ruin[0]) else float(ruin[0])


def _chunk(args):
    p, u, policy, x0, horizon, dt, seed_seq, n = args
    return _run_paths(p, u, policy, x0, horizon, dt, np.random.default_rng(seed_seq), n)


def _rate_bound(policy, p: ModelParams, x0: float, horizon: float) -> float:
    # the reserve can never exceed x0 + mu * horizon and policies are non-decreasing
    return float(policy.rate(np.array([x0 + p.mu * horizon]))[0])


def estimate_value(p: ModelParams, u: UtilitySpec, policy, x0: float, n_paths: int = 100_000,
                   horizon: float | None = None, seed: int = 0, dt: float = DEFAULT_DT,
                   workers: int = 1) -> PathEstimate:
    """Monte Carlo mean and standard error of the discounted utility from ``x0``.

    Paths are split into fixed chunks of ``CHUNK_SIZE`` with one spawned
    seed each, so the estimate is bit-identical for any ``workers``.
    """
    _check_policy(policy)
    if n_paths < 100:
        raise DomainError("n_paths must be at least 100")
    if not x0 >= 0:
        raise DomainError("initial reserve must be nonnegative")
    horizon = default_horizon(p) if horizon is None else float(horizon)
    if not horizon > 0:
        raise DomainError("horizon must be positive")
    sizes = [CHUNK_SIZE] * (n_paths // CHUNK_SIZE)
    if n_paths % CHUNK_SIZE:
        sizes.append(n_paths % CHUNK_SIZE)
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(p, u, policy, float(x0), horizon, dt, s, m) for s, m in zip(seeds, sizes)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_chunk, jobs))
    else:
        parts = [_chunk(j) for j in jobs]
    totals = np.concatenate([t for t, _ in parts])
    ruins = np.concatenate([r for _, r in parts])
    bias = float(utility_value(u, _rate_bound(policy, p, x0, horizon))) * math.exp(-p.beta * horizon) / p.beta
    return PathEstimate(
        mean=float(np.mean(totals)),
        std_error=float(np.std(totals, ddof=1) / math.sqrt(n_paths)),
        n_paths=int(n_paths),
        ruin_fraction=float(np.mean(~np.isnan(ruins))),
        horizon=horizon,
        bias_bound=bias,
    )
