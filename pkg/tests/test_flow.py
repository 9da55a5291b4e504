import json
import math

import numpy as np
import pytest

from blowuplab import charts, model, spectral
from blowuplab.charts import ChartPoint
from blowuplab.errors import ConfigError, DomainError, StiffnessError
from blowuplab.flow import (
    Box,
    SectionParams,
    SectionSpec,
    conserved_drift,
    desingularization_defect,
    exit_scaling_fit,
    integrate,
    integrate_to_section,
    mode_envelope,
    passage,
    sections,
    with_clock,
)
from blowuplab.flow.passage import k1_domain

# ---------------------------------------------------------------- integrator


def test_linear_diffusion_mode_matches_exponential():
    k0, eps, a, mu = 3, 0.05, 0.8, 0.5
    y0 = np.array([0.0, 0.0, 0.0, 0.0, 0.4, -0.2, eps, a])
    f = lambda y: model.orig_rhs(y, mu, k0)
    T = 2.0
    tr = integrate(f, y0, T, rtol=1e-11, atol=1e-13)
    ts = np.linspace(0, T, 9)
    Y = tr(ts)
    for k, i in ((2, 4), (3, 5)):
        lam = spectral.scaled_eigenvalue(k, a)
        np.testing.assert_allclose(Y[:, i], y0[i] * np.exp(eps * lam * ts), rtol=1e-9)
    assert np.max(np.abs(Y[:, 6] - eps)) <= 1e-12
    assert np.max(np.abs(Y[:, 7] - a)) <= 1e-12


def test_critical_point_is_stationary():
    c = -0.3
    y0 = np.array([c, c, 0.0, 1.0])
    tr = integrate(lambda y: model.orig_rhs(y, 0.5, 1), y0, 10.0)
    assert np.max(np.abs(tr.y - y0)) == 0.0


def test_finite_time_blow_up_raises():
    with pytest.raises(StiffnessError):
        integrate(lambda y: y * y, np.array([1.0]), 2.0)


def test_unknown_method_rejected():
    with pytest.raises((ValueError, DomainError)):
        integrate(lambda y: -y, np.array([1.0]), 1.0, method="Euler")


@pytest.mark.parametrize("method", ["RK45", "DOP853", "Radau", "BDF"])
def test_methods_agree_on_a_stiff_linear_problem(method):
    lam = np.array([-1.0, -300.0])
    tr = integrate(lambda y: lam * y, np.array([1.0, 1.0]), 1.0, rtol=1e-8, atol=1e-12, method=method,
                   jac=lambda y: np.diag(lam))
    np.testing.assert_allclose(tr(1.0), np.exp(lam), rtol=1e-5, atol=1e-10)


def test_with_clock_jacobian():
    f = charts.chart_rhs("K1", 0.5, 2)
    J = charts.chart_jacobian("K1", 0.5, 2)
    fc, Jc = with_clock(f, J)
    z = np.array([0.5, 0.1, 0.7, -0.9, 0.02, 0.01, 0.3])
    h = 1e-7
    num = np.column_stack([(fc(z + h * e) - fc(z - h * e)) / (2 * h) for e in np.eye(z.size)])
    np.testing.assert_allclose(Jc(z), num, atol=1e-5)
    assert fc(z)[-1] == pytest.approx(0.5**-3)


# ---------------------------------------------------------------- sections


def _k2_reduced(a2):
    return lambda y: charts.k2_rhs(y, 0.5, 1)


def test_section_hit_time_in_scaling_chart():
    a2, v0, V = 0.3, -1.0, 2.0
    y0 = np.array([0.0, a2, -1.0, v0])
    sec = SectionSpec("V", "K2", lambda y: y[3] - V, direction=+1)
    res = integrate_to_section(_k2_reduced(a2), y0, sec, 100.0, rtol=1e-11, atol=1e-13)
    assert res.hit
    assert res.t == pytest.approx((V - v0) / (2 * a2), rel=1e-9)
    assert res.y[3] == pytest.approx(V, abs=1e-9)


def test_section_satisfied_at_start():
    y0 = np.array([0.0, 0.3, -1.0, 2.0])
    sec = SectionSpec("V", "K2", lambda y: y[3] - 2.0)
    res = integrate_to_section(_k2_reduced(0.3), y0, sec, 10.0)
    assert res.hit and res.t == 0.0
    res = integrate_to_section(_k2_reduced(0.3), y0, sec, 10.0, allow_start=False)
    assert res.status == "MISS"


def test_direction_and_guard_filter_crossings():
    f = lambda y: np.array([1.0, math.cos(y[0])])  # y1 = sin(t) oscillates
    y0 = np.array([0.0, 0.0])
    down = SectionSpec("down", "K2", lambda y: y[1] - 0.5, direction=-1)
    res = integrate_to_section(f, y0, down, 10.0, rtol=1e-10, atol=1e-12)
    assert res.t == pytest.approx(5 * math.pi / 6, rel=1e-8)
    guarded = SectionSpec("g", "K2", lambda y: y[1] - 0.5, direction=+1, guard=lambda y: y[0] > 3)
    res = integrate_to_section(f, y0, guarded, 10.0, rtol=1e-10, atol=1e-12)
    assert res.t == pytest.approx(2 * math.pi + math.pi / 6, rel=1e-8)


def test_box_violation_is_reported():
    f = lambda y: np.array([1.0])
    sec = SectionSpec("x", "K2", lambda y: y[0] - 1.0, boxes=[Box("x", lambda y: y[0], hi=0.5)])
    res = integrate_to_section(f, np.array([0.0]), sec, 5.0)
    assert res.status == "BOX_VIOLATION" and "x=" in res.diagnostic


def test_leaving_the_wedge_is_a_miss():
    # radial coordinate driven through zero
    f = lambda y: np.array([-1.0, 0.0, 0.0, 0.0])
    sec = SectionSpec("far", "K1", lambda y: y[3] - 1.0)
    res = integrate_to_section(f, np.array([0.5, 0.1, 0.5, 0.0]), sec, 10.0, domain=k1_domain)
    assert res.status == "MISS" and "wedge" in res.diagnostic
    res = integrate_to_section(f, np.array([0.5, 0.1, 0.5, 0.0]), sec, 0.1)
    assert res.status == "MISS" and "no crossing" in res.diagnostic


# ---------------------------------------------------------------- section parameters


def test_section_params_validation():
    with pytest.raises(ConfigError, match="canard"):
        SectionParams().resolve(1.0, 4)
    with pytest.raises(ConfigError, match="nu <"):
        SectionParams(nu=10.0).resolve(0.5, 4)
    with pytest.raises(ConfigError, match="delta <"):
        SectionParams(delta=5.0).resolve(0.5, 4)
    with pytest.raises(ConfigError):
        SectionParams(rho=1.5).resolve(0.5, 4)
    sp = SectionParams().resolve(2.0, 8)
    assert 0 < sp.delta <= 0.1 and sp.omega == pytest.approx(2 * math.sqrt(2))


def test_delta_bound_independent_of_truncation():
    sp = SectionParams()
    assert sp.delta_bound(0.5, 4) == sp.delta_bound(0.5, 64)


# ---------------------------------------------------------------- consistency


K1_PT = lambda k0, rng: ChartPoint("K1", 0.6, 0.8, -0.95, 0.02 * rng.uniform(-1, 1, k0 - 1),
                                   0.02 * rng.uniform(-1, 1, k0 - 1), eps=0.05)


@pytest.mark.parametrize("k0", [1, 3])
def test_desingularization_defect_small(k0, rng):
    d, t = desingularization_defect(K1_PT(k0, rng), 0.5, 1.0)
    assert d < 1e-8 and t > 0
    p2 = ChartPoint("K2", 0.5, 0.5, -1.2, np.zeros(k0 - 1), np.zeros(k0 - 1), u_first=-1.0)
    d, _ = desingularization_defect(p2, 0.5, 1.0)
    assert d < 1e-8
    with pytest.raises(DomainError):
        desingularization_defect(charts.orig_point(model.GalerkinState([-0.1], [-0.1]), 0.1, 1.0), 0.5, 1.0)


@pytest.mark.parametrize("k0", [1, 4])
def test_conserved_quantities(k0, rng):
    assert conserved_drift(K1_PT(k0, rng), 0.5, 2.0) < 1e-9
    p3 = ChartPoint("K3", 0.3, 0.3, 0.1, np.zeros(k0 - 1), np.zeros(k0 - 1), eps=0.05)
    assert conserved_drift(p3, 2.0, 2.0) < 1e-9
    po = charts.orig_point(model.initial_condition(-0.2, 0.01, k0), 0.01, 1.0)
    assert conserved_drift(po, 0.5, 2.0) == 0.0


# ---------------------------------------------------------------- passage


@pytest.fixture(scope="module")
def exchange():
    return passage(model.ModelParams(mu=0.5, a=1.0, eps=1e-4, k0=8))


@pytest.fixture(scope="module")
def jump():
    return passage(model.ModelParams(mu=2.0, a=1.0, eps=1e-4, k0=8))


def test_exchange_passage(exchange):
    rep = exchange
    assert rep.outcome == "EXCHANGE"
    assert [e.section for e in rep.itinerary] == ["S1_in", "S1_out", "S2_in", "S2a_out", "S1_back", "D_a_out"]
    assert rep.diagnostics["distance_to_target"] <= 0.1 * rep.diagnostics["rho"]
    assert rep.exit_v > 0


def test_jump_passage(jump):
    rep = jump
    assert rep.outcome == "JUMP"
    assert [e.section for e in rep.itinerary] == ["S1_in", "S1_out", "S2_in", "S2e_out", "S3_in", "S3_out"]
    d = rep.diagnostics
    exit2 = rep.itinerary[3].point
    assert exit2.v_first <= d["omega"] * d["delta"] ** -0.125
    assert rep.exit_v >= 0


def test_jump_exit_in_k3_is_of_order_delta_quarter():
    ratios = []
    for d in (0.1, 0.01):
        rep = passage(model.ModelParams(mu=2.0, eps=1e-6, k0=4), section_params=SectionParams(delta=d))
        v13 = [e for e in rep.itinerary if e.section == "S3_in"][0].point.v_first
        ratios.append(abs(v13) / d**0.25)
    assert max(ratios) < 0.2
    assert ratios[1] <= ratios[0] * 1.1


def test_tolerance_halving_replay(jump):
    rep2 = passage(model.ModelParams(mu=2.0, a=1.0, eps=1e-4, k0=8), rtol=0.5e-9, atol=0.5e-12)
    assert rep2.outcome == jump.outcome
    assert rep2.exit_v == pytest.approx(jump.exit_v, rel=1e-5)


def test_itinerary_json(exchange):
    d = json.loads(exchange.to_json())
    assert d["outcome"] == "EXCHANGE"
    assert len(d["itinerary"]) == exchange.n_sections
    assert all("chart" in e and "time" in e for e in d["itinerary"])


def test_mode_envelope_caps(exchange):
    env = mode_envelope(exchange)
    assert np.all(env["u"] <= env["cap_u"]) and np.all(env["v"] <= env["cap_v"])


def test_first_mode_only_data_keeps_higher_modes_zero():
    rep = passage(model.ModelParams(mu=0.5, eps=1e-4, k0=4), section_params=SectionParams(entry_perturbation=0.0))
    assert rep.outcome == "EXCHANGE"
    assert rep.diagnostics["mode_env_max"] < 1e-12


def test_passage_preconditions():
    with pytest.raises(ConfigError):
        passage(model.ModelParams(mu=0.5, eps=0.0, k0=2))
    with pytest.raises(ConfigError):
        passage(model.ModelParams(mu=1.0, eps=1e-4, k0=2))
    with pytest.raises(ConfigError, match="eps too large"):
        passage(model.ModelParams(mu=0.5, eps=0.5, k0=2))
    with pytest.raises(DomainError):
        passage(model.ModelParams(mu=0.5, eps=1e-4, k0=2), entry=model.initial_condition(-0.1, 0.0, 2))


def test_exit_scaling_fit_preconditions():
    with pytest.raises(ConfigError):
        exit_scaling_fit(model.ModelParams(mu=0.5, k0=2), [1e-3, 1e-5])
    with pytest.raises(ConfigError):
        exit_scaling_fit(model.ModelParams(mu=2.0, k0=2), [1e-3, 3e-4])


def test_sections_layout():
    sp = SectionParams().resolve(2.0, 4)
    secs = sections(2.0, 4, 1.0, sp)
    assert set(secs) == {"S1_out", "S2a_out", "S2e_out", "D_a_out", "S3_out"}
    assert secs["S2e_out"].chart == "K2" and secs["S3_out"].chart == "K3"
