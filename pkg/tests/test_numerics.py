import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sp_integrate

from cramer_dividends.numerics import (IvpConfig, QuadratureError, SingularDesignError, adaptive_simpson,
                                       fit_linear, fit_log, fit_power, integrate_ivp, quad_exp_weight)


# ---- integrator ----------------------------------------------------------

def test_decay_problem():
    res = integrate_ivp(lambda x, y: (-y[0],), 0.0, (1.0,), 1.0)
    assert res.completed
    assert res.ys[-1, 0] == pytest.approx(math.exp(-1.0), abs=1e-9)
    assert res.xs[-1] == pytest.approx(1.0)


def test_dense_grid_is_uniform():
    res = integrate_ivp(lambda x, y: (y[1], -y[0]), 0.0, (0.0, 1.0), 3.0, IvpConfig(dense_spacing=0.01))
    np.testing.assert_allclose(np.diff(res.xs), 0.01, atol=1e-12)
    # Hermite dense output on a sine
    np.testing.assert_allclose(res.ys[:, 0], np.sin(res.xs), atol=1e-9)


@pytest.mark.parametrize("lam", [-1.0, 0.0, 1.0])
def test_exponential_growth_within_tolerance(lam):
    cfg = IvpConfig(rel_tol=1e-8, abs_tol=1e-12)
    res = integrate_ivp(lambda x, y: (lam * y[0],), 0.0, (1.0,), 10.0, cfg)
    rel = np.abs(res.ys[:, 0] / np.exp(lam * res.xs) - 1.0)
    assert rel.max() <= 10 * cfg.rel_tol


def test_tighter_tolerance_never_worse():
    errs = []
    for tol in (1e-6, 5e-7, 2.5e-7, 1.25e-7):
        cfg = IvpConfig(rel_tol=tol, abs_tol=tol, max_step=10.0)
        res = integrate_ivp(lambda x, y: (y[0],), 0.0, (1.0,), 10.0, cfg)
        errs.append(abs(res.ys[-1, 0] / math.exp(10.0) - 1.0))
    assert all(b <= a for a, b in zip(errs, errs[1:]))


def test_guard_stops_early():
    # v' = vx, vx' = vx: the slope grows like e^x and crosses 10 near ln 10
    res = integrate_ivp(lambda x, y: (y[1], y[1]), 0.0, (0.0, 1.0), 10.0, guard=lambda x, y: y[1] > 10.0)
    assert res.reason == "guard"
    assert res.x_stop == pytest.approx(math.log(10.0), abs=0.06)
    assert res.xs[-1] <= res.x_stop


def test_finite_time_blowup_is_diverged_or_singular():
    # y' = y^2 from y(0)=1 blows up at x = 1
    res = integrate_ivp(lambda x, y: (y[0] ** 2,), 0.0, (1.0,), 2.0)
    assert res.reason in ("singular", "diverged")
    assert res.x_stop == pytest.approx(1.0, abs=1e-3)


def test_rhs_domain_error_is_singular():
    def rhs(x, y):
        if x > 0.5:
            raise ArithmeticError("locus")
        return (1.0,)

    res = integrate_ivp(rhs, 0.0, (0.0,), 1.0)
    assert res.reason == "singular"
    assert res.x_stop == pytest.approx(0.5, abs=1e-6)


def test_config_validation():
    with pytest.raises(ValueError):
        IvpConfig(rel_tol=-1.0)
    cfg = IvpConfig().refined()
    assert cfg.dense_spacing == pytest.approx(0.005)
    assert cfg.max_step == pytest.approx(0.025)


# ---- quadrature ----------------------------------------------------------

def test_density_mass():
    assert quad_exp_weight(lambda s: np.ones_like(s), 0.4) == pytest.approx(1.0, abs=1e-9)


def test_exponential_mean():
    assert quad_exp_weight(lambda s: s, 0.4) == pytest.approx(2.5, abs=1e-8)


def test_discounted_mass():
    assert quad_exp_weight(lambda s: np.exp(-0.05 * s), 0.1) == pytest.approx(0.1 / 0.15, abs=1e-8)


@pytest.mark.parametrize("k", range(11))
def test_polynomial_moments(k):
    r = 0.4
    exact = math.factorial(k) / r ** k
    assert quad_exp_weight(lambda s: s ** k, r) == pytest.approx(exact, rel=1e-8)


def test_bounded_matches_closed_form():
    r, up = 0.4, 3.0
    assert quad_exp_weight(lambda s: np.ones_like(s), r, upper=up) == pytest.approx(-math.expm1(-r * up), abs=1e-12)


def test_vector_upper_matches_scalar_calls():
    ups = np.array([0.0, 0.7, 2.0, 9.5])
    f = lambda s: np.sqrt(np.maximum(3.0 - s, 0.0))
    batch = quad_exp_weight(f, 0.4, upper=ups)
    single = [quad_exp_weight(f, 0.4, upper=float(u)) for u in ups]
    np.testing.assert_allclose(batch, single, atol=1e-10)


def test_kinked_integrand_against_scipy():
    # post-jump value clamped at zero reserve, as in the first-jump integrand
    x = 3.0
    f = lambda s: np.where(s <= x, np.sqrt(np.maximum(x - s, 0.0)) + 1.0, 0.0)
    ours = quad_exp_weight(f, 0.4)
    ref, _ = sp_integrate.quad(lambda s: (math.sqrt(x - s) + 1.0) * 0.4 * math.exp(-0.4 * s), 0.0, x,
                               epsabs=1e-13, epsrel=1e-13)
    assert ours == pytest.approx(ref, abs=1e-9)


def test_nonfinite_integrand_reports_point():
    with pytest.raises(QuadratureError) as info:
        with np.errstate(divide="ignore"):
            adaptive_simpson(lambda x: 1.0 / (x - 0.5), 0.0, 1.0)
    assert info.value.point == pytest.approx(0.5)


def test_simpson_reversed_and_empty():
    assert adaptive_simpson(np.cos, 1.0, 0.0) == pytest.approx(-math.sin(1.0), abs=1e-12)
    assert adaptive_simpson(np.cos, 1.0, 1.0) == 0.0


def test_rate_must_be_positive():
    with pytest.raises(ValueError):
        quad_exp_weight(lambda s: s, 0.0)


@settings(max_examples=50, deadline=None)
@given(r=st.floats(0.05, 5.0), a=st.floats(-1.0, 1.0))
def test_exp_weight_of_exponential(r, a):
    # E[e^{-a S}] for S ~ Exp(r) is r / (r + a)
    if r + a < 0.05:
        return
    got = quad_exp_weight(lambda s: np.exp(-a * s), r)
    assert got == pytest.approx(r / (r + a), rel=1e-9)


# ---- fits ----------------------------------------------------------------

def test_linear_exact():
    f = fit_linear([0, 1, 2], [1, 3, 5])
    assert (f.a1, f.b1) == pytest.approx((2.0, 1.0))
    assert f.rss == pytest.approx(0.0, abs=1e-20)
    z = fit_linear([0, 1], [0, 0])
    assert (z.a1, z.b1) == pytest.approx((0.0, 0.0), abs=1e-15)


def test_power_exact():
    f = fit_power([0, 1, 4], [1, 2, 3], 0.5)
    assert (f.a2, f.b2) == pytest.approx((1.0, 1.0))
    c = fit_power([0, 1, 4, 9], [2.5] * 4, 0.5)
    assert c.a2 == pytest.approx(0.0, abs=1e-12)
    assert c.b2 == pytest.approx(2.5)


def test_singular_designs():
    with pytest.raises(SingularDesignError):
        fit_linear([1, 1, 1], [0, 1, 2])
    with pytest.raises(SingularDesignError):
        fit_power([4, 4], [1, 2], 0.5)
    with pytest.raises(SingularDesignError):
        fit_linear([1], [1])


def test_fits_agree_with_polyfit():
    rng = np.random.default_rng(3)
    xs = np.arange(10.0)
    ys = 2.0 + 0.3 * xs + rng.normal(0.0, 0.1, xs.size)
    f = fit_linear(xs, ys)
    np.testing.assert_allclose((f.a1, f.b1), np.polyfit(xs, ys, 1), rtol=1e-10)
    coef = np.polyfit(np.sqrt(xs), ys, 1)
    g = fit_power(xs, ys, 0.5)
    np.testing.assert_allclose((g.a2, g.b2), coef, rtol=1e-10)
    h = fit_log(xs, ys)
    np.testing.assert_allclose((h.a2, h.b2), np.polyfit(np.log1p(xs), ys, 1), rtol=1e-10)


@settings(max_examples=100, deadline=None)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5), alpha=st.floats(0.1, 0.9))
def test_fits_recover_own_model(a, b, alpha):
    xs = np.arange(10.0)
    lin = fit_linear(xs, a * xs + b)
    assert lin.rss <= 1e-10
    assert (lin.a1, lin.b1) == pytest.approx((a, b), abs=1e-9)
    pw = fit_power(xs, a * xs ** alpha + b, alpha)
    assert pw.rss <= 1e-10
    assert (pw.a2, pw.b2) == pytest.approx((a, b), abs=1e-9)
    lg = fit_log(xs, a * np.log1p(xs) + b)
    assert lg.rss <= 1e-10


def test_fits_on_decaying_profile(sol19):
    rows = sol19.rows_at(range(10))
    xs, vs, cs = rows[:, 0], rows[:, 1], rows[:, 3]
    lin = fit_linear(xs, cs)
    np.testing.assert_allclose((lin.a1, lin.b1), np.polyfit(xs, cs, 1), rtol=1e-10)
    # regression values recorded from the oracle
    assert (lin.a1, lin.b1) == (pytest.approx(0.07580, abs=1e-5), pytest.approx(0.26249, abs=1e-5))
    pw = fit_power(xs, vs, 0.5)
    np.testing.assert_allclose((pw.a2, pw.b2), np.polyfit(np.sqrt(xs), vs, 1), rtol=1e-10)
    resid = vs - (pw.a2 * np.sqrt(xs) + pw.b2)
    assert pw.rss == pytest.approx(float(resid @ resid), rel=1e-10)
