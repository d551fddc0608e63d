"""Adaptive Dormand-Prince 5(4) integration with cubic Hermite dense output."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["IvpConfig", "IvpResult", "integrate_ivp"]

# Dormand-Prince tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


@dataclass(frozen=True)
class IvpConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-10
    max_step: float = 0.05
    dense_spacing: float = 0.01

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "max_step", "dense_spacing"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive, got {value!r}")

    def refined(self, factor: float = 2.0) -> "IvpConfig":
        """Same tolerances with the dense grid and step cap divided by ``factor``."""
        return IvpConfig(self.rel_tol, self.abs_tol, self.max_step / factor, self.dense_spacing / factor)


@dataclass
class IvpResult:
    """Solution sampled on a uniform grid.

    ``reason`` is one of ``"completed"``, ``"guard"``, ``"singular"`` (step
    size underflow) or ``"diverged"`` (non-finite right-hand side).
    """

    xs: np.ndarray
    ys: np.ndarray  # shape (len(xs), dim)
    reason: str
    x_stop: float
    n_steps: int
    n_rejected: int

    @property
    def completed(self) -> bool:
        return self.reason == "completed"


class _NonFinite(Exception):
    """Trial stage failed; ``diverged`` is False when rhs raised a domain error."""

    def __init__(self, diverged: bool):
        super().__init__()
        self.diverged = diverged


def _eval(rhs, x, y):
    try:
        f = np.asarray(rhs(x, y), dtype=float)
    except (ArithmeticError, ValueError):
        raise _NonFinite(False) from None
    if not np.all(np.isfinite(f)):
        raise _NonFinite(True)
    return f


def _hermite(x0, x1, y0, y1, f0, f1, xq):
    h = x1 - x0
    s = ((xq - x0) / h)[:, None]
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def integrate_ivp(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    x0: float,
    state0,
    x_end: float,
    cfg: IvpConfig | None = None,
    guard: Callable[[float, np.ndarray], bool] | None = None,
) -> IvpResult:
    """Integrate ``y' = rhs(x, y)`` from ``x0`` to ``x_end``.

    The returned states sit on the grid ``x0 + k * cfg.dense_spacing``.  When
    ``guard(x, y)`` returns True after an accepted step, integration stops
    there with reason ``"guard"``; the grid then ends at the last node not
    beyond the stop point.
    """
    cfg = cfg or IvpConfig()
    if not x_end > x0:
        raise ValueError("x_end must exceed x0")
    y = np.array(state0, dtype=float)
    try:
        f = _eval(rhs, x0, y)
    except _NonFinite:
        raise ValueError(f"right-hand side is not finite at the initial state {y!r}") from None

    n_grid = int(math.floor((x_end - x0) / cfg.dense_spacing + 1e-9)) + 1
    grid = x0 + cfg.dense_spacing * np.arange(n_grid)
    out = np.empty((n_grid, y.size))
    out[0] = y
    filled = 1

    x = float(x0)
    span = x_end - x0
    h = min(cfg.max_step, 0.01 * span, cfg.dense_spacing)
    n_steps = n_rejected = 0
    reason = "completed"
    last_failure_nonfinite = False
    k = np.empty((7, y.size))

    while x < x_end:
        h = min(h, x_end - x)
        if h < 1e-13 * max(1.0, abs(x)):
            reason = "diverged" if last_failure_nonfinite else "singular"
            break
        k[0] = f
        try:
            for i in range(1, 7):
                yi = y + h * (np.dot(_A[i], k[:i]) if i > 1 else _A[1][0] * k[0])
                k[i] = _eval(rhs, x + _C[i] * h, yi)
        except _NonFinite as exc:
            n_rejected += 1
            last_failure_nonfinite = exc.diverged
            h *= 0.25
            continue
        y_new = y + h * np.dot(_B5[:6], k[:6])
        err_vec = h * np.dot(_E, k)
        scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))
        if err > 1.0:
            n_rejected += 1
            last_failure_nonfinite = False
            h *= max(_MIN_FACTOR, _SAFETY * err ** -0.2)
            continue

        x_new = x + h
        f_new = k[6].copy()
        j1 = filled
        while j1 < n_grid and grid[j1] <= x_new + 1e-12 * max(1.0, abs(x_new)):
            j1 += 1
        if j1 > filled:
            out[filled:j1] = _hermite(x, x_new, y, y_new, f, f_new, grid[filled:j1])
            filled = j1
        x, y, f = x_new, y_new, f_new
        n_steps += 1
        last_failure_nonfinite = False
        factor = _MAX_FACTOR if err == 0 else min(_MAX_FACTOR, _SAFETY * err ** -0.2)
        h = min(h * factor, cfg.max_step)
        if guard is not None and guard(x, y):
            reason = "guard"
            break

    return IvpResult(grid[:filled].copy(), out[:filled].copy(), reason, x, n_steps, n_rejected)
