import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cramer_dividends import HjbSolution, ModelParams, Regime, UtilitySpec, optimal_rate_from_slope
from cramer_dividends.asymptotics import (asymptotic_rate, asymptotic_slope, asymptotic_value,
                                          convergence_diagnostic)


def test_power_formulas(params, power):
    assert asymptotic_value(params, power, 10.0) == pytest.approx(20.0)
    assert asymptotic_value(params, power, 100.0) == pytest.approx(63.2456, abs=1e-4)
    assert asymptotic_rate(params, power, 10.0) == pytest.approx(1.0)
    assert asymptotic_rate(params, power, 0.0) == 0.0


def test_log_formulas(params, log_utility):
    assert asymptotic_value(params, log_utility, 100.0) == pytest.approx(20 * (math.log(5.05) - 1), abs=1e-10)
    assert asymptotic_value(params, log_utility, 100.0) == pytest.approx(12.3877, abs=1e-4)
    assert asymptotic_rate(params, log_utility, 100.0) == pytest.approx(4.05)
    assert asymptotic_slope(params, log_utility, 100.0) == pytest.approx(1 / (0.05 * 101))


def test_vectorised(params, power):
    xs = np.array([1.0, 4.0])
    np.testing.assert_allclose(asymptotic_value(params, power, xs), [2 * math.sqrt(10), 4 * math.sqrt(10)])


@settings(max_examples=100, deadline=None)
@given(alpha=st.floats(0.05, 0.95), beta=st.floats(0.01, 0.5), x=st.floats(0.01, 1e4))
def test_power_theorem_consistency(alpha, beta, x):
    p = ModelParams(1.0, 0.1, 1.0, beta)
    u = UtilitySpec.power(alpha)
    rate = optimal_rate_from_slope(u, asymptotic_slope(p, u, x))
    assert rate == pytest.approx(asymptotic_rate(p, u, x), rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(beta=st.floats(0.01, 0.5), x=st.floats(1.0 / 0.01, 1e4))
def test_log_theorem_consistency(beta, x):
    p = ModelParams(1.0, 0.1, 1.0, beta)
    u = UtilitySpec.log()
    if beta * (x + 1) < 1:
        return
    rate = optimal_rate_from_slope(u, asymptotic_slope(p, u, x))
    assert rate == pytest.approx(asymptotic_rate(p, u, x), rel=1e-12, abs=1e-12)


def test_ratios_at_ten(sol19):
    d = convergence_diagnostic(sol19, xs=[10.0])
    assert d.ratio_v[0] == pytest.approx(19.9126 / 20.0, abs=1e-3)
    assert d.ratio_c[0] == pytest.approx(1.0515, abs=1e-3)


def test_default_sampling(sol19):
    d = convergence_diagnostic(sol19)
    assert d.xs.size == 20
    assert d.xs[-1] == pytest.approx(10.0)
    assert d.xs[0] == pytest.approx(5.0)


def test_self_comparison_is_one(params, power):
    xs = np.arange(0.01, 10.0001, 0.01)
    vs = asymptotic_value(params, power, xs)
    vxs = asymptotic_slope(params, power, xs)
    sol = HjbSolution(xs, vs, vxs, optimal_rate_from_slope(power, vxs), Regime.DECAYING, params, power,
                      float(vxs[0]))
    d = convergence_diagnostic(sol)
    for r in (d.ratio_v, d.ratio_vx, d.ratio_c):
        np.testing.assert_allclose(r, 1.0, rtol=1e-12)


def test_long_run_ratios_approach_one(sol19_long):
    d = convergence_diagnostic(sol19_long, xs=[50.0, 500.0])
    for r in (d.ratio_v, d.ratio_vx, d.ratio_c):
        assert abs(r[1] - 1) < abs(r[0] - 1)


def test_bubble_rejected(sol20):
    with pytest.raises(ValueError, match="decaying"):
        convergence_diagnostic(sol20)


def test_csv(sol19, tmp_path):
    path = tmp_path / "asym.csv"
    d = convergence_diagnostic(sol19)
    d.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,ratio_v,ratio_vx,ratio_c"
    assert len(lines) == 21


def test_trend_flags():
    from cramer_dividends.asymptotics import ConvergenceDiagnostic
    d = ConvergenceDiagnostic(np.arange(3.0), np.array([0.9, 0.95, 0.99]), np.array([1.2, 1.1, 1.15]),
                              np.array([1.0, 1.0, 1.0]))
    assert d.trend_v and not d.trend_vx and d.trend_c
