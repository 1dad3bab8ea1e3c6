import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tickwork.exceptions import ConfigError, NoTicksError
from tickwork.ldt import (
    analytic_theta_two_level,
    clockwork_power,
    closed_form_populations,
    closed_form_ratio_hybrid_pi,
    count_moments,
    effective_inverse_temperature,
    mandel_q,
    relative_error,
    steady_state,
    summarize,
    theta,
    theta_curve,
    theta_derivatives,
    tick_rate,
)
from tickwork.models import ThreeLevelAthermal, ThreeLevelHybrid, TwoLevelAthermal


def two_level_q(gm, gw):
    return -4 * gm * gw / (4 * gm + gw) ** 2


def test_theta_vanishes_at_zero():
    for model in (TwoLevelAthermal(), ThreeLevelAthermal(), ThreeLevelHybrid()):
        assert abs(theta(model, 0.0)) <= 1e-10


@given(st.floats(0.1, 5.0), st.floats(0.5, 10.0), st.floats(-2.0, 2.0))
def test_two_level_theta_matches_closed_form(gm, gw, s):
    model = TwoLevelAthermal(1.0, gm, gw)
    assert theta(model, s) == pytest.approx(analytic_theta_two_level(gm, gw, s), abs=1e-9)


def test_theta_out_of_range():
    with pytest.raises(ValueError):
        theta(TwoLevelAthermal(), 5.5)


def test_theta_is_convex_and_decreasing():
    curve = theta_curve(ThreeLevelAthermal(), np.linspace(-2, 2, 41))
    assert np.all(np.diff(curve.theta_values) < 0)
    assert np.all(np.diff(curve.theta_values, 2) > -1e-12)


def test_derivatives_match_analytic_two_level():
    gm, gw = 1.0, 6.0
    d1, d2 = theta_derivatives(TwoLevelAthermal(1.0, gm, gw))
    # mean rate gamma_w P_e and variance rate (1 + Q) times that
    rate = gw * 2 * gm / (4 * gm + gw)
    assert -d1 == pytest.approx(rate, abs=1e-9)
    assert d2 == pytest.approx(rate * (1 + two_level_q(gm, gw)), abs=1e-8)


def test_count_moments_example():
    mean, var = count_moments(TwoLevelAthermal(1.0, 1.0, 6.0), 1.0)
    assert mean == pytest.approx(1.2, abs=1e-9)
    assert var == pytest.approx(0.912, abs=1e-8)
    with pytest.raises(ValueError):
        count_moments(TwoLevelAthermal(), 0.0)


@given(st.floats(0.2, 4.0), st.floats(0.5, 12.0))
def test_two_level_mandel_q(gm, gw):
    assert mandel_q(TwoLevelAthermal(1.0, gm, gw)) == pytest.approx(two_level_q(gm, gw), abs=1e-8)


def test_no_ticks_without_pumping():
    model = ThreeLevelAthermal(gamma_m=0.0)
    assert tick_rate(model) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(NoTicksError):
        mandel_q(model)
    with pytest.raises(NoTicksError):
        relative_error(model, 1.0)


def test_relative_error_poisson_scaling():
    model = TwoLevelAthermal(1.0, 1.5, 6.0)
    assert relative_error(model, 4.0) == pytest.approx(relative_error(model, 1.0) / 2)
    assert relative_error(model, 1.0) == pytest.approx(math.sqrt(0.75 / 1.5), rel=1e-7)


def test_athermal_three_level_fig3_values():
    model = ThreeLevelAthermal(gamma_m=3.0)
    p = np.real(np.diag(steady_state(model)))
    assert p[0] == pytest.approx(24 / 78, abs=1e-12)
    assert p[1] == pytest.approx(18 / 78, abs=1e-12)
    assert tick_rate(model) == pytest.approx(2 * 4 * 3 * 3 / (4 * 15 + 18), abs=1e-12)
    assert effective_inverse_temperature(model) == pytest.approx(4 / 3, abs=1e-12)
    assert clockwork_power(model) == pytest.approx(tick_rate(model) * 0.9)


@pytest.mark.parametrize("th", np.linspace(0, math.pi, 13))
@pytest.mark.parametrize("phi", [0.0, 1.1])
def test_athermal_closed_forms(th, phi):
    model = ThreeLevelAthermal(theta=th, phi=phi)
    rho = steady_state(model)
    pm, pc, coh = closed_form_populations(model)
    assert rho[0, 0].real == pytest.approx(pm, abs=1e-9)
    assert rho[1, 1].real == pytest.approx(pc, abs=1e-9)
    assert abs(rho[0, 2]) ** 2 == pytest.approx(coh, abs=1e-9)


def test_mg_coherence_flow_uses_omega_m(rng):
    # flow equation for rho_mg; the oscillation term carries Omega_m
    from tickwork.models import lindblad_terms
    from tickwork.numkernel import unvec, vec

    model = ThreeLevelAthermal(theta=0.9, phi=0.4)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    rho = a @ a.conj().T
    rho /= np.trace(rho)
    drho = unvec(lindblad_terms(model).matrix @ vec(rho))
    gm, gw, th, ph = model.gamma_m, model.gamma_w, model.theta, model.phi
    rmm, rgg, rmg = rho[0, 0], rho[2, 2], rho[0, 2]
    expect = (-0.5 * rmg * (2 * gm * math.cos(2 * th) + 6 * gm + gw + 2j * model.omega_m)
              + gm * np.exp(1j * ph) * (rmm - rgg) * math.sin(2 * th)
              + 2 * gm * np.exp(2j * ph) * rho[2, 0] * math.sin(th) ** 2)
    assert drho[0, 2] == pytest.approx(expect, abs=1e-13)
    with_omega_c = expect - 1j * (model.omega_c - model.omega_m) * rmg
    assert abs(drho[0, 2] - with_omega_c) > 1e-3


def test_hybrid_closed_forms():
    for th in (math.pi / 2, math.pi):
        model = ThreeLevelHybrid(theta=th)
        rho = steady_state(model)
        pm, pc, coh = closed_form_populations(model)
        assert rho[0, 0].real == pytest.approx(pm, abs=1e-9)
        assert rho[1, 1].real == pytest.approx(pc, abs=1e-9)
        assert coh == 0.0
    model = ThreeLevelHybrid(theta=math.pi)
    assert effective_inverse_temperature(model) == pytest.approx(
        closed_form_ratio_hybrid_pi(model), abs=1e-9)
    with pytest.raises(ConfigError):
        closed_form_populations(ThreeLevelHybrid(theta=1.0))


def test_closed_forms_reject_two_level():
    with pytest.raises(ValueError):
        closed_form_populations(TwoLevelAthermal())
    with pytest.raises(ValueError):
        clockwork_power(TwoLevelAthermal())


def test_summary_fields():
    s = summarize(ThreeLevelAthermal())
    d = s.as_dict()
    assert d["gamma_tick"] == pytest.approx(d["mean_rate"], rel=1e-9)
    assert d["mandel_q"] < 0
    assert "clockwork_power" in d
    assert "clockwork_power" not in summarize(TwoLevelAthermal()).as_dict()
    assert math.isnan(summarize(ThreeLevelAthermal(gamma_m=0.0)).mandel_q)
