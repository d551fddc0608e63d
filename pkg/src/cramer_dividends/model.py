"""Risk-model parameters and the two utility families.

The reserve follows a Cramer-Lundberg process with premium rate ``mu``,
Poisson claim intensity ``lam`` and Exp(``xi``) claim sizes; dividends are
paid at a rate ``c(X_t)`` and discounted at ``beta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

__all__ = [
    "DomainError",
    "ModelParams",
    "UtilitySpec",
    "utility_value",
    "utility_derivative",
    "optimal_rate_from_slope",
    "net_profit_check",
]


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of a model function."""


@dataclass(frozen=True)
class ModelParams:
    mu: float
    lam: float
    xi: float
    beta: float

    def __post_init__(self):
        for name in ("mu", "lam", "xi", "beta"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                key = "lambda" if name == "lam" else name
                raise DomainError(f"{key} must be a positive finite number, got {value!r}")

    @property
    def mean_claim(self) -> float:
        return 1.0 / self.xi

    def to_dict(self) -> dict:
        return {"mu": self.mu, "lambda": self.lam, "xi": self.xi, "beta": self.beta}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        return cls(mu=float(d["mu"]), lam=float(d["lambda"]), xi=float(d["xi"]), beta=float(d["beta"]))


@dataclass(frozen=True)
class UtilitySpec:
    """Power utility ``x**alpha / alpha`` or logarithmic utility ``ln(1 + x)``."""

    kind: Literal["power", "log"]
    alpha: float | None = None

    def __post_init__(self):
        if self.kind == "power":
            if self.alpha is None or not (0.0 < self.alpha < 1.0):
                raise DomainError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        elif self.kind == "log":
            if self.alpha is not None:
                raise DomainError("log utility takes no alpha")
        else:
            raise DomainError(f"unknown utility kind {self.kind!r}")

    @classmethod
    def power(cls, alpha: float) -> "UtilitySpec":
        return cls("power", float(alpha))

    @classmethod
    def log(cls) -> "UtilitySpec":
        return cls("log")

    @property
    def is_power(self) -> bool:
        return self.kind == "power"

    def singular_slope(self, mu: float) -> float:
        """Slope ``v_x`` at which the optimal rate equals ``mu``."""
        if self.is_power:
            return mu ** (-(1.0 - self.alpha))
        return 1.0 / (1.0 + mu)

    def to_dict(self) -> dict:
        if self.is_power:
            return {"utility": "power", "alpha": self.alpha}
        return {"utility": "log"}

    def __str__(self):
        return f"Power({self.alpha:g})" if self.is_power else "Log"


def _as_float_or_array(x):
    return np.asarray(x, dtype=float) if np.ndim(x) else float(x)


def utility_value(u: UtilitySpec, d):
    """U(d); zero at d = 0 for both families."""
    d = _as_float_or_array(d)
    if np.any(np.less(d, 0.0)):
        raise DomainError("dividend rate must be nonnegative")
    if u.is_power:
        return np.power(d, u.alpha) / u.alpha
    return np.log1p(d)


def utility_derivative(u: UtilitySpec, d):
    """Marginal utility U'(d).

    For power utility U'(0) is infinite; ``math.inf`` is returned there
    rather than raising.
    """
    d = _as_float_or_array(d)
    if np.any(np.less(d, 0.0)):
        raise DomainError("dividend rate must be nonnegative")
    if u.is_power:
        with np.errstate(divide="ignore"):
            out = np.power(d, u.alpha - 1.0)
        return out if np.ndim(out) else float(out)
    return 1.0 / (1.0 + d)


def optimal_rate_from_slope(u: UtilitySpec, vx, *, return_flag: bool = False):
    """Maximiser ``(U')^{-1}(vx)`` of the HJB Hamiltonian.

    Log utility with ``vx > 1`` would give a negative rate; it is clamped to
    zero and, with ``return_flag=True``, reported as ``(rate, clamped)``.
    """
    vx = _as_float_or_array(vx)
    if np.any(np.less_equal(vx, 0.0)) or np.any(np.isnan(vx)):
        raise DomainError("value-function slope must be positive")
    if u.is_power:
        rate = np.power(vx, -1.0 / (1.0 - u.alpha))
        clamped = np.zeros_like(vx, dtype=bool) if np.ndim(vx) else False
    else:
        raw = 1.0 / vx - 1.0
        clamped = np.greater(vx, 1.0) if np.ndim(vx) else vx > 1.0
        rate = np.maximum(raw, 0.0) if np.ndim(vx) else max(raw, 0.0)
    if return_flag:
        return rate, clamped
    return rate


def net_profit_check(p: ModelParams) -> bool:
    """True when premium income exceeds the expected claim outflow."""
    return p.mu > p.lam / p.xi
