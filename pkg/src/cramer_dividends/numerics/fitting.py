"""Least-squares fits that are linear in their coefficients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SingularDesignError", "LinearFit", "PowerFit", "LogFit", "fit_linear", "fit_power", "fit_log"]


class SingularDesignError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class LinearFit:
    """``a1 * x + b1``."""

    a1: float
    b1: float
    rss: float

    def __call__(self, x):
        return self.a1 * np.asarray(x, dtype=float) + self.b1


@dataclass(frozen=True)
class PowerFit:
    """``a2 * x**alpha + b2`` with the exponent held fixed."""

    a2: float
    b2: float
    alpha: float
    rss: float

    def __call__(self, x):
        return self.a2 * np.power(np.asarray(x, dtype=float), self.alpha) + self.b2


@dataclass(frozen=True)
class LogFit:
    """``a2 * ln(1 + x) + b2``."""

    a2: float
    b2: float
    rss: float

    def __call__(self, x):
        return self.a2 * np.log1p(np.asarray(x, dtype=float)) + self.b2


def _two_term_lstsq(basis: np.ndarray, ys: np.ndarray):
    if basis.shape != ys.shape or basis.ndim != 1:
        raise ValueError("abscissae and ordinates must be 1-d arrays of equal length")
    if basis.size < 2:
        raise SingularDesignError("need at least two samples")
    if np.ptp(basis) == 0.0:
        raise SingularDesignError("all basis values are equal; slope is not identifiable")
    design = np.column_stack([basis, np.ones_like(basis)])
    coef, *_ = np.linalg.lstsq(design, ys, rcond=None)
    resid = ys - design @ coef
    return float(coef[0]), float(coef[1]), float(resid @ resid)


def fit_linear(xs, ys) -> LinearFit:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    return LinearFit(*_two_term_lstsq(xs, ys))


def fit_power(xs, ys, alpha: float) -> PowerFit:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if np.any(xs < 0):
        raise ValueError("power basis needs nonnegative abscissae")
    a2, b2, rss = _two_term_lstsq(np.power(xs, alpha), ys)
    return PowerFit(a2, b2, float(alpha), rss)


def fit_log(xs, ys) -> LogFit:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if np.any(xs <= -1):
        raise ValueError("log basis needs abscissae above -1")
    return LogFit(*_two_term_lstsq(np.log1p(xs), ys))
