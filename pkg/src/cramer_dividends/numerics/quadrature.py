"""Adaptive Simpson quadrature, including integrals against Exp(r) densities."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

__all__ = ["QuadratureError", "adaptive_simpson", "quad_exp_weight", "TAIL_MASS"]

TAIL_MASS = 1e-12
_TAIL_SCALE = -math.log(TAIL_MASS)  # ~27.63


class QuadratureError(ArithmeticError):
    """Integrand returned a non-finite value; ``point`` is where it happened."""

    def __init__(self, point: float, value: float):
        super().__init__(f"integrand is not finite at {point!r} (value {value!r})")
        self.point = point
        self.value = value


def _call(f, x, m=None):
    y = np.asarray(f(x), dtype=float)
    if y.ndim == 0 or y.shape[0] != x.shape[0]:
        y = np.broadcast_to(y, x.shape if m is None else (x.shape[0], m)).astype(float)
    bad = ~np.isfinite(y)
    if bad.any():
        i = np.argwhere(bad)[0]
        raise QuadratureError(float(x[i[0]]), float(y[tuple(i)]))
    return y


def adaptive_simpson(f: Callable, a: float, b: float, *, tol: float = 1e-10,
                     rel_tol: float = 1e-12, max_depth: int = 60):
    """Integrate ``f`` over ``[a, b]`` by globally vectorised adaptive Simpson.

    ``f`` maps a 1-d array of ``n`` abscissae to ``n`` values, or to an
    ``(n, m)`` array for ``m`` integrands sharing the interval (then an array
    of ``m`` integrals is returned).  All unconverged intervals are bisected
    together each round.  An interval is retired once its Richardson error
    estimate is within its share of the budget ``max(tol, rel_tol * |I|)``;
    refinement stops as soon as the summed estimate fits the budget, taken
    componentwise.
    """
    if a == b:
        y = np.asarray(f(np.array([a])), dtype=float)
        return 0.0 if y.ndim < 2 else np.zeros(y.shape[1])
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    width = b - a
    y0 = _call(f, np.array([a, 0.5 * (a + b), b]))
    vector = y0.ndim == 2
    y0 = y0.reshape(3, -1)
    m = y0.shape[1]
    lo, hi = np.array([a]), np.array([b])
    flo, fmid, fhi = y0[0:1], y0[1:2], y0[2:3]
    whole = width / 6.0 * (flo + 4.0 * fmid + fhi)
    done_sum = np.zeros(m)
    done_err = np.zeros(m)
    for depth in range(max_depth):
        mid = 0.5 * (lo + hi)
        n = lo.size
        fq = _call(f, np.concatenate([0.5 * (lo + mid), 0.5 * (mid + hi)]), m).reshape(2 * n, m)
        fl, fr = fq[:n], fq[n:]
        h = (hi - lo)[:, None]
        left = h / 12.0 * (flo + 4.0 * fl + fmid)
        right = h / 12.0 * (fmid + 4.0 * fr + fhi)
        two = left + right
        err = np.abs(two - whole) / 15.0
        refined = two + (two - whole) / 15.0
        total = done_sum + refined.sum(axis=0)
        budget = np.maximum(tol, rel_tol * np.abs(total))
        if np.all(done_err + err.sum(axis=0) <= budget) or depth == max_depth - 1:
            return sign * (total if vector else float(total[0]))
        ok = np.all(err <= budget * (h / width), axis=1)
        done_sum += refined[ok].sum(axis=0)
        done_err += err[ok].sum(axis=0)
        keep = ~ok
        lo_k, mid_k, hi_k = lo[keep], mid[keep], hi[keep]
        lo = np.concatenate([lo_k, mid_k])
        hi = np.concatenate([mid_k, hi_k])
        flo, fmid, fhi = (np.concatenate([flo[keep], fmid[keep]]),
                          np.concatenate([fl[keep], fr[keep]]),
                          np.concatenate([fmid[keep], fhi[keep]]))
        whole = np.concatenate([left[keep], right[keep]])
    raise AssertionError("unreachable")


def quad_exp_weight(f: Callable, rate: float, upper=None, *,
                    tol: float = 1e-11, rel_tol: float = 1e-12):
    """Integral of ``f(s) * rate * exp(-rate * s)`` over ``[0, upper]``.

    With ``upper=None`` the range ``[0, s*]``, ``s* = -ln(1e-12) / rate``
    (weight tail mass 1e-12), is integrated first; further blocks of the
    same length are added while they still contribute above tolerance, which
    matters only for rapidly growing ``f``.

    ``upper`` may be an array of ``m`` truncation points.  ``f`` then
    receives an ``(n, m)`` array whose column ``k`` samples ``[0, upper[k]]``
    and the ``m`` integrals are returned together.
    """
    if not rate > 0:
        raise ValueError("rate must be positive")

    def g(s):
        return f(s) * (rate * np.exp(-rate * s))

    if upper is not None:
        up = np.asarray(upper, dtype=float)
        if np.any(up < 0):
            raise ValueError("upper must be nonnegative")
        if up.ndim == 0:
            return 0.0 if up == 0 else adaptive_simpson(g, 0.0, float(up), tol=tol, rel_tol=rel_tol)
        # common unit interval, column k stretched onto [0, upper[k]]
        return adaptive_simpson(lambda w: g(w[:, None] * up[None, :]) * up[None, :], 0.0, 1.0,
                                tol=tol, rel_tol=rel_tol)

    block = _TAIL_SCALE / rate
    total = adaptive_simpson(g, 0.0, block, tol=tol, rel_tol=rel_tol)
    s_lo = block
    for _ in range(40):
        budget = max(tol, rel_tol * abs(total))
        part = adaptive_simpson(g, s_lo, s_lo + block, tol=0.1 * budget, rel_tol=0.0)
        total += part
        if abs(part) <= budget:
            break
        s_lo += block
    return total
