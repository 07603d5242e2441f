"""Gauge machinery tests: closed forms, inversion round trips, condition
verdicts, and rate-fit recovery.

Closed-form oracles used below (verified with 30-digit mpmath):
  power gauge, m = alpha (n+2)/n:
      clock(t) = (t^m - 1)/m,     clock^{-1}(y) = (1 + m y)^{1/m}
  neg-log-power gauge, gam = 1 + kappa (n+2)/n:
      clock(t) = (ln^gam(M t) - ln^gam M)/gam
      clock^{-1}(y) = (1/M) exp((gam y + ln^gam M)^{1/gam})
"""

import math

import numpy as np
import pytest

from repde.asymptotics import (
    IterLogGauge,
    LogPlusGauge,
    NegLogPowGauge,
    PowerGauge,
    check_conditions,
    closed_form_laws,
    compute_L,
    eval_ell,
    fit_log_slope,
    fit_power,
    invert_L,
    predicted_E,
)


def power_clock(alpha, n, t):
    m = alpha * (n + 2) / n
    return (t**m - 1.0) / m


def power_clock_inv(alpha, n, y):
    m = alpha * (n + 2) / n
    return (1.0 + m * y) ** (1.0 / m)


def neglog_clock(kappa, M, n, t):
    gam = 1.0 + kappa * (n + 2) / n
    return (math.log(M * t) ** gam - math.log(M) ** gam) / gam


def neglog_clock_inv(kappa, M, n, y):
    gam = 1.0 + kappa * (n + 2) / n
    return math.exp((gam * y + math.log(M) ** gam) ** (1.0 / gam)) / M


def test_eval_ell_pointwise():
    assert eval_ell(PowerGauge(0.2, dim=1), 0.0) == 0.0
    assert eval_ell(NegLogPowGauge(1.0, 2.0, dim=1), 1.0) == pytest.approx(
        1.4426950408889634  # 1/ln 2
    )
    # iterated log: at xi with lnln(M/xi) = 1 the value is 1
    m_big = 2.0 * math.exp(math.e)
    f = IterLogGauge(1.0, m_big, xi2=5.0, dim=1)
    assert eval_ell(f, 2.0) == pytest.approx(1.0, rel=1e-12)
    # cap continuity
    g = NegLogPowGauge(1.0, 2.0, dim=1)
    assert eval_ell(g, 1.0 - 1e-9) == pytest.approx(eval_ell(g, 1.0 + 1e-9), rel=1e-6)


def test_gauge_parameter_validation():
    with pytest.raises(ValueError):
        PowerGauge(-0.1, dim=1)
    with pytest.raises(ValueError):
        NegLogPowGauge(1.0, 1.5, dim=1)  # M < 2
    with pytest.raises(ValueError):
        IterLogGauge(1.0, 2.0, xi2=0.5, dim=1)  # M <= e
    with pytest.raises(ValueError):
        IterLogGauge(1.0, 20.0, xi2=10.0, dim=1)  # xi2 >= M/e


def test_clock_integral_matches_power_closed_form():
    f = PowerGauge(0.25, dim=1)
    assert compute_L(f, math.e) == pytest.approx(1.4893333554835662, rel=1e-9)
    for t in np.logspace(np.log10(1.001), 6, 12):
        assert compute_L(f, float(t)) == pytest.approx(
            power_clock(0.25, 1, t), rel=1e-6
        )
    assert compute_L(f, 1.0) == 0.0


def test_clock_integral_matches_neglog_closed_form():
    f = NegLogPowGauge(1.0, 2.0, dim=1)
    assert compute_L(f, 10.0) == pytest.approx(20.077308260306095, rel=1e-9)
    for t in np.logspace(np.log10(1.001), 6, 12):
        assert compute_L(f, float(t)) == pytest.approx(
            neglog_clock(1.0, 2.0, 1, t), rel=1e-6
        )
    f2 = NegLogPowGauge(2.0, 4.0, dim=2)
    for t in (1.5, 20.0, 1e4):
        assert compute_L(f2, t) == pytest.approx(
            neglog_clock(2.0, 4.0, 2, t), rel=1e-6
        )


def test_invert_clock_closed_forms_and_round_trip():
    f = PowerGauge(0.25, dim=1)
    assert invert_L(f, 1.0) == pytest.approx(2.1088744811533262, rel=1e-8)
    g = NegLogPowGauge(1.0, 2.0, dim=1)
    for y in (0.1, 1.0, 10.0, 1e3):
        assert invert_L(f, y) == pytest.approx(power_clock_inv(0.25, 1, y), rel=1e-7)
        assert invert_L(g, y) == pytest.approx(neglog_clock_inv(1.0, 2.0, 1, y), rel=1e-7)
        assert compute_L(f, invert_L(f, y)) == pytest.approx(y, rel=1e-7)
        assert compute_L(g, invert_L(g, y)) == pytest.approx(y, rel=1e-7)
    with pytest.raises(ValueError):
        invert_L(f, -1.0)


def test_predicted_energy_power_gauge_is_logarithmic():
    # d(predicted E)/d(ln t) -> 1/m - 1 (= 1/3 for alpha = 1/4, n = 1)
    f = PowerGauge(0.25, dim=1)
    t = np.logspace(4, 7, 40)
    e_vals = np.array([predicted_E(f, 1.0, float(x)) for x in t])
    fit = fit_log_slope(t, e_vals, (t[0], t[-1]))
    assert fit.value == pytest.approx(1.0 / 3.0, rel=1e-3)
    assert np.all(np.diff(e_vals) >= 0)


def test_predicted_energy_neglog_gauge_is_power_law():
    # gam = 1 + kappa (n+2)/n = 4: predicted E ~ c t^(1/4), approached from
    # above through a -0.75 ln t correction, so probe a deep window
    f = NegLogPowGauge(1.0, 2.0, dim=1)
    t = np.logspace(12, 15, 30)
    e_vals = np.array([predicted_E(f, 1.0, float(x)) for x in t])
    fit = fit_power(t, e_vals, (t[0], t[-1]))
    assert fit.value == pytest.approx(0.25, abs=0.02)
    assert np.all(np.diff(e_vals) >= 0)


def test_predicted_energy_iterlog_gauge_nearly_linear():
    # E ~ c t / ln^{1.5}(t): log-log slope approaches 1 from below
    f = IterLogGauge(0.5, 30.0, xi2=5.0, dim=1)
    t = np.logspace(3, 5, 25)
    e_vals = np.array([predicted_E(f, 1.0, float(x)) for x in t])
    fit = fit_power(t, e_vals, (t[0], t[-1]))
    assert 0.7 < fit.value < 1.0
    assert np.all(np.diff(e_vals) >= 0)


def test_condition_checker_catalog_verdicts():
    # power below the critical exponent: upper-route monotonicity holds
    rep = check_conditions(PowerGauge(0.25, dim=1))
    assert rep.zero_positive_nondecreasing
    assert rep.scaled_tail_monotone
    assert rep.integral_diverges
    assert rep.strictly_increasing_near_zero
    # but powers have constant log-slope and fail the vanishing-slope and
    # doubling conditions
    assert not rep.vanishing_log_slope
    assert not rep.scaling_upper_bound

    # power at the critical exponent: xi * ell^3(1/xi) is constant
    rep = check_conditions(PowerGauge(1.0 / 3.0, dim=1))
    assert rep.scaled_tail_monotone

    # power above the critical exponent fails tail monotonicity
    rep = check_conditions(PowerGauge(0.4, dim=1))
    assert not rep.scaled_tail_monotone

    # neg-log-power gauges: every condition holds
    for kappa, m_big in ((2.0, 4.0), (0.5, 2.0)):
        rep = check_conditions(NegLogPowGauge(kappa, m_big, dim=1))
        assert rep.all_upper_route(), (kappa, m_big, rep)
        assert rep.all_lower_route(), (kappa, m_big, rep)

    # iterated-log gauge: both routes hold
    rep = check_conditions(IterLogGauge(1.0, 30.0, xi2=5.0, dim=1))
    assert rep.all_upper_route()
    assert rep.all_lower_route()

    # log-plus gauge satisfies the base conditions and divergence
    rep = check_conditions(LogPlusGauge(1.0, dim=1))
    assert rep.zero_positive_nondecreasing
    assert rep.integral_diverges


def test_closed_form_laws():
    upper, lower = closed_form_laws("algebraic", 1, gamma=4.0, eps=1.0)
    assert upper.kind == "log_slope" and upper.value == pytest.approx(1.0)
    assert lower.value == pytest.approx(2.0 / 3.0)

    upper, lower = closed_form_laws("exponential", 1, beta=3.0, eps=0.25)
    assert upper.kind == "power" and upper.value == pytest.approx(0.5)

    upper, lower = closed_form_laws("exponential", 2, beta=4.0, eps=0.5)
    assert lower.value == pytest.approx(0.4)

    upper, lower = closed_form_laws("doubly_exponential", 1, beta=2.0, eps=0.5)
    assert upper is None
    assert lower.kind == "log_corrected" and lower.value == pytest.approx(2.0)

    for scenario, kw in (
        ("algebraic", dict(gamma=3.0)),
        ("exponential", dict(beta=2.0)),
    ):
        up, lo = closed_form_laws(scenario, 1, eps=0.25, **kw)
        assert up.value > lo.value

    with pytest.raises(ValueError):
        closed_form_laws("algebraic", 2, gamma=1.5)
    with pytest.raises(ValueError):
        closed_form_laws("unknown", 1)


def test_gauge_route_consistent_with_algebraic_slopes_for_steep_decay():
    # data decaying like r^{-gamma} correspond to a power gauge with
    # alpha = n q / gamma; in the q -> 1 limit the predicted log-slope
    # gamma/(n+2) - 1 approaches the direct slope (gamma - n)/(n+2) as
    # gamma grows.  Checked at three points with 10% slack.
    n = 1
    for gamma in (25.0, 45.0, 81.0):
        alpha = n / gamma
        f = PowerGauge(alpha, dim=n)
        t = np.logspace(6, 9, 30)
        e_vals = np.array([predicted_E(f, 1.0, float(x)) for x in t])
        fit = fit_log_slope(t, e_vals, (t[0], t[-1]))
        direct = (gamma - n) / (n + 2)
        assert fit.value == pytest.approx(direct, rel=0.10)


def test_fit_log_slope_recovery():
    t = np.logspace(1, 4, 60)
    fit = fit_log_slope(t, 2.0 * np.log(t) + 5.0, (t[0], t[-1]))
    assert fit.value == pytest.approx(2.0, abs=1e-9)
    assert fit.intercept == pytest.approx(5.0, abs=1e-9)
    assert fit.r_squared == pytest.approx(1.0)

    # model mismatch is visible in r^2 over two decades
    t2 = np.logspace(1, 3, 60)
    fit2 = fit_log_slope(t2, 3.0 * t2**0.5, (t2[0], t2[-1]))
    assert fit2.r_squared < 0.999

    flat = fit_log_slope(t, np.full(t.size, 4.0), (t[0], t[-1]))
    assert flat.value == pytest.approx(0.0, abs=1e-12)

    with pytest.raises(ValueError):
        fit_log_slope(t[:5], np.log(t[:5]), (t[0], t[4]))


def test_fit_power_recovery():
    t = np.logspace(1, 4, 60)
    fit = fit_power(t, 3.0 * t**0.5, (t[0], t[-1]))
    assert fit.value == pytest.approx(0.5, abs=1e-9)
    assert math.exp(fit.intercept) == pytest.approx(3.0, rel=1e-9)

    t2 = np.logspace(3, 6, 80)
    fit2 = fit_power(t2, 2.0 * np.log(t2), (t2[0], t2[-1]))
    assert fit2.value < 0.15  # distinguishable from any genuine power law

    with pytest.raises(ValueError):
        fit_power(t, np.full(t.size, -1.0), (t[0], t[-1]))
