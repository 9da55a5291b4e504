import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blowuplab import spectral
from blowuplab.errors import DomainError, ResonanceError
from blowuplab.manifolds import (
    F1_reduced,
    ManifoldExpansion,
    cm_closed_form,
    cm_closed_form_K1,
    compare,
    convergence_report,
    diagnostics,
    hausdorff_distance,
    invariance_residual,
    k1_standard_coeffs,
    oracle_K1,
    oracle_orig,
    ray_slope,
    reduced_Hpm,
    tail_bound_check,
)
from blowuplab.manifolds.diagnostics import field_for

GRID = list(itertools.product([0.0, 0.5, 2.0], [-0.1, -0.5], [0.5, 1.0]))


@pytest.mark.parametrize("k0", [1, 2, 3, 8])
def test_oracle_matches_closed_form_orig(k0):
    for mu, c, a in GRID:
        assert compare(cm_closed_form(k0, c, mu, a), oracle_orig(k0, c, mu, a)) < 1e-8


@pytest.mark.parametrize("k0", [1, 2, 3, 8])
@pytest.mark.parametrize("A", [0.0, 0.2])
def test_oracle_matches_closed_form_k1(k0, A):
    for mu in (0.0, 0.5, 2.0):
        assert compare(cm_closed_form_K1(k0, A, mu), oracle_K1(k0, A, mu)) < 1e-8


@given(st.integers(1, 5), st.floats(-0.7, -0.05), st.floats(-1.0, 3.0), st.floats(0.3, 2.0))
def test_oracle_matches_closed_form_random(k0, c, mu, a):
    assert compare(cm_closed_form(k0, c, mu, a), oracle_orig(k0, c, mu, a)) < 1e-8


def test_k0_1_first_mode_coefficients():
    c, mu, a = -0.5, 0.0, 1.0
    b = k1_standard_coeffs(c, mu)
    assert b["b12"] == pytest.approx(-2.0)
    # evaluating the displayed formula literally gives -3; the invariance solve gives +3
    assert b["b22"] == pytest.approx(3.0)
    e = oracle_orig(1, c, mu, a)
    assert e.coef("u1", "v1", "eps") == pytest.approx(2 * a * b["b12"], rel=1e-10)
    assert e.coef("u1", "eps", "eps") == pytest.approx(4 * a**2 * b["b22"], rel=1e-10)
    assert e.coef("u1", "v1", "v1") == pytest.approx(b["b11"], abs=1e-12)


def test_k0_2_displayed_coefficients():
    c, mu, a = -0.3, 0.4, 0.8
    lam = spectral.scaled_eigenvalue(2, a)
    e = oracle_orig(2, c, mu, a)
    assert e.coef("u1", "v2", "v2") == pytest.approx(1 / (2 * c) - 2 * c / (lam + 2 * c) ** 2, rel=1e-9)
    assert e.coef("u2", "v1", "v2") == pytest.approx(2 * lam / (lam + 2 * c) ** 2, rel=1e-9)


def test_mu_one_zeroes_eps_corrections():
    e = cm_closed_form(4, -0.4, 1.0, 0.9)
    for mono in (("eps",), ("v1", "eps"), ("eps", "eps")):
        assert e.coef("u1", *mono) == 0.0
    o = oracle_orig(4, -0.4, 1.0, 0.9)
    for mono in (("eps",), ("v1", "eps"), ("eps", "eps")):
        assert abs(o.coef("u1", *mono)) < 1e-12


def test_k1_limit_coefficients():
    e = cm_closed_form_K1(6, 0.0, 0.7)
    for k in range(2, 7):
        assert not np.any(e.lin[k - 1]) and not np.any(e.quad[k - 1])
    for A in (0.0, 0.2):
        assert cm_closed_form_K1(4, A, 0.7).coef("v1", "eps") == pytest.approx((1 - 0.7) * A)
    # shifting back to a1 = A + x reproduces H^-(eps1, a1) = -1 + (1 - mu) a1 eps1
    e = cm_closed_form_K1(3, 0.0, 0.7)
    assert e.coef("v1", "eps", "a") == pytest.approx(1 - 0.7)


def test_closed_form_preconditions():
    with pytest.raises(DomainError, match="normal hyperbolicity lost"):
        cm_closed_form(2, 0.0, 0.5, 1.0)
    with pytest.raises(DomainError):
        cm_closed_form(2, -0.9, 0.5, 1.0)
    with pytest.raises(DomainError):
        cm_closed_form_K1(2, -0.1, 0.5)


def test_denominators_stay_away_from_resonance():
    # lambda_k + 2c < 0 for every c < 0, so the guard never fires on valid input
    for k0 in (2, 8, 32):
        for c in (-1e-6, -0.1, -0.75):
            e = cm_closed_form(k0, c, 0.5, 1.0)
            assert np.all(np.isfinite(e.lin)) and np.all(np.isfinite(e.quad))


def test_reduced_slow_manifolds():
    assert reduced_Hpm("-", 0.0, 0.3) == -1.0
    assert reduced_Hpm("+", 0.1, 2.0) == pytest.approx(1.3)
    for rho in (1e-2, 1e-3, 1e-4):
        val = F1_reduced(reduced_Hpm("-", rho, 0.6), rho, 0.6)
        assert abs(val - 2 * rho) <= 2 * rho**2


EXPANSIONS = [("ORIG", k0, (c, mu, a)) for k0 in (1, 2, 3, 8) for mu, c, a in GRID[::3]] + [
    ("K1", k0, (A, mu)) for k0 in (1, 2, 3, 8) for A in (0.0, 0.2) for mu in (0.5, 2.0)]


def _build(kind, k0, args):
    if kind == "ORIG":
        c, mu, a = args
        return cm_closed_form(k0, c, mu, a)
    A, mu = args
    return cm_closed_form_K1(k0, A, mu)


@pytest.mark.parametrize("kind,k0,args", EXPANSIONS)
def test_residual_vanishes_at_base_and_is_cubic(kind, k0, args):
    e = _build(kind, k0, args)
    f = field_for(e)
    assert invariance_residual(e, f, np.zeros(len(e.center_vars))) < 1e-14
    slope, _ = ray_slope(e)
    assert slope >= 2.7


def test_perturbed_coefficient_gives_quadratic_residual():
    e = cm_closed_form(3, -0.5, 0.5, 1.0)
    bad = e.copy()
    bad.set_coef("u1", "v1", "v1", value=e.coef("u1", "v1", "v1") + 1e-3)
    d = np.zeros(len(e.center_vars))
    d[e.center_vars.index("v1")] = 1.0
    # u1 = v1 is exactly invariant along this ray, so only the perturbation shows
    _, res_ok = ray_slope(e, direction=d)
    slope_bad, _ = ray_slope(bad, direction=d)
    assert np.max(res_ok) < 1e-15
    assert slope_bad == pytest.approx(2.0, abs=0.1)


def test_tail_selection_rule():
    e = cm_closed_form(8, -0.3, 0.5, 1.0)
    nonzero = [k for k in range(1, 9) if abs(e.coef(f"u{k}", "v2", "v2")) > 0]
    assert nonzero == [1, 3]


def test_tail_constant_stable_under_doubling(rng):
    def C(k0):
        e = cm_closed_form(k0, -0.3, 0.5, 1.0)
        pts = diagnostics.sample_grid(k0, n=200, vmax=0.2, eps_max=0.01, seed=1)
        # samples are (v1 - c, eps, v2..)
        return tail_bound_check(e, pts)

    r16, r32 = C(16), C(32)
    assert abs(r32["C"] - r16["C"]) <= 0.1 * r16["C"]
    # |h_k| |lambda_k| stays bounded, i.e. h_k decays at least like k^-2
    assert np.all(r32["C_k"] <= 2 * r32["C"])
    with pytest.raises(DomainError):
        tail_bound_check(cm_closed_form_K1(3, 0.2, 0.5), np.zeros((1, 5)))


def test_hausdorff_examples():
    A = np.random.default_rng(0).normal(size=(30, 4))
    assert hausdorff_distance(A, A) == 0.0
    x, y = np.array([[1.0, 2.0]]), np.array([[4.0, 6.0]])
    assert hausdorff_distance(x, y) == pytest.approx(5.0)
    with pytest.raises(DomainError):
        hausdorff_distance(np.zeros((0, 2)), x)


@given(st.integers(0, 10_000), st.integers(1, 20), st.integers(1, 20))
def test_hausdorff_against_brute_force(seed, n, m):
    rng = np.random.default_rng(seed)
    A, B, C = rng.normal(size=(n, 3)), rng.normal(size=(m, 3)), rng.normal(size=(5, 3))
    D = np.linalg.norm(A[:, None, :] - B[None, :, :], axis=2)
    ref = max(D.min(axis=1).max(), D.min(axis=0).max())
    assert hausdorff_distance(A, B) == pytest.approx(ref, rel=1e-12)
    assert hausdorff_distance(B, A) == pytest.approx(ref, rel=1e-12)
    assert hausdorff_distance(A, B) <= hausdorff_distance(A, C) + hausdorff_distance(C, B) + 1e-12


def test_convergence_report_monotone():
    rep = convergence_report([2, 4, 8, 16], -0.5, 0.5, 1.0, kref=32, n=32)
    d = [r["sup_distance"] for r in rep["rows"]]
    h = [r["hausdorff"] for r in rep["rows"]]
    assert all(x > y for x, y in zip(d, d[1:]))
    assert all(x > y for x, y in zip(h, h[1:]))
    assert rep["decay_exponent"] >= 1.0


def test_convergence_report_ignores_sample_order(monkeypatch):
    base = convergence_report([2, 4], -0.5, 0.5, 1.0, kref=16, n=24)
    orig = diagnostics.sample_grid
    monkeypatch.setattr(diagnostics, "sample_grid", lambda *a, **k: orig(*a, **k)[::-1].copy())
    flipped = convergence_report([2, 4], -0.5, 0.5, 1.0, kref=16, n=24)
    assert base == flipped


@pytest.mark.parametrize("kind,k0,args", EXPANSIONS[::4])
def test_json_round_trip(kind, k0, args):
    e = _build(kind, k0, args)
    back = ManifoldExpansion.from_json(e.to_json())
    assert back.center_vars == e.center_vars and back.graph_vars == e.graph_vars
    np.testing.assert_array_equal(back.lin, e.lin)
    np.testing.assert_allclose(back.quad, e.quad, rtol=0, atol=0)
    np.testing.assert_array_equal(back.base, e.base)
