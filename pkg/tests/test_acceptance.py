"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python tests/test_acceptance.py`` for the plain table.
"""
import contextlib
import itertools
import sys
import time

import numpy as np
import pytest

from blowuplab import charts, model, pdecheck
from blowuplab.charts import ChartPoint
from blowuplab.flow import SectionParams, conserved_drift, desingularization_defect, exit_scaling_fit, passage
from blowuplab.manifolds import (
    cm_closed_form,
    cm_closed_form_K1,
    compare,
    convergence_report,
    oracle_K1,
    oracle_orig,
    ray_slope,
)

GRID = list(itertools.product([0.0, 0.5, 2.0], [-0.1, -0.5], [0.5, 1.0]))  # (mu, c, a)
K0_SET = (1, 2, 3, 8)
A_STAR = (0.0, 0.2)


LINES = []  # collected verdicts, printed by the terminal summary hook in conftest


def _emit(line):
    LINES.append(line)


@contextlib.contextmanager
def criterion(num, title, budget):
    """Time a criterion, print its verdict, re-raise on failure."""
    t0 = time.perf_counter()
    detail = {}
    try:
        yield detail
    except BaseException as exc:
        dt = time.perf_counter() - t0
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        _emit(f"[{num:2d}] FAIL  {title}  ({dt:.2f}s)  {detail.get('info', '')}  -> {msg}")
        raise
    dt = time.perf_counter() - t0
    ok = dt < budget
    _emit(f"[{num:2d}] {'PASS' if ok else 'FAIL'}  {title}  ({dt:.2f}s / {budget:g}s)  {detail.get('info', '')}")
    assert ok, f"runtime {dt:.1f}s over budget {budget}s"


def _all_expansions():
    for k0 in K0_SET:
        for mu, c, a in GRID:
            yield ("ORIG", k0, mu, c, a), cm_closed_form(k0, c, mu, a), oracle_orig(k0, c, mu, a)
        for A in A_STAR:
            for mu in (0.0, 0.5, 2.0):
                yield ("K1", k0, mu, A), cm_closed_form_K1(k0, A, mu), oracle_K1(k0, A, mu)


def test_01_coefficient_oracle_equivalence():
    with criterion(1, "closed-form coefficients reproduced by the invariance solver", 30) as d:
        worst = 0.0
        for tag, cf, orc in _all_expansions():
            dev = compare(cf, orc)
            worst = max(worst, dev)
            assert dev < 1e-8, f"{tag}: relative deviation {dev:.3e}"
        d["info"] = f"max rel dev {worst:.2e}"


def test_02_invariance_residual_order():
    exps = [cf for _, cf, _ in _all_expansions()]
    with criterion(2, "invariance residual slope >= 2.7 on s in [1e-4, 1e-2]", 10) as d:
        slopes = []
        for e in exps:
            s, _ = ray_slope(e, scales=np.logspace(-4, -2, 9))
            slopes.append(s)
        d["info"] = f"min slope {min(slopes):.3f} over {len(slopes)} expansions"
        assert min(slopes) >= 2.7


def _rand_chart_point(chart, rng):
    k0 = int(rng.integers(1, 9))
    n = k0 - 1
    mu_, mv_ = 0.3 * rng.uniform(-1, 1, n), 0.3 * rng.uniform(-1, 1, n)
    if chart == "K2":
        return ChartPoint("K2", rng.uniform(0.05, 1), rng.uniform(0.05, 2), rng.uniform(-2, 2), mu_, mv_,
                          u_first=rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 4))
    return ChartPoint(chart, rng.uniform(0.05, 1), rng.uniform(0.05, 2), rng.uniform(-2, 2), mu_, mv_,
                      eps=rng.uniform(0.01, 3))


def test_03_chart_algebra():
    rng = np.random.default_rng(2024)
    with criterion(3, "transition maps invert and commute with blow-down", 1) as d:
        worst = 0.0

        def rel(x, y):
            return float(np.max(np.abs(x - y) / np.maximum(1.0, np.abs(y))))

        def flat_down(p):
            s, e, a = charts.blowdown(p)
            return s.flat(e, a)

        for _ in range(100):
            p1 = _rand_chart_point("K1", rng)
            p3 = _rand_chart_point("K3", rng)
            p2 = _rand_chart_point("K2", rng)
            p2n = ChartPoint("K2", p2.r, p2.a, p2.v_first, p2.modes_u, p2.modes_v, u_first=-abs(p2.u_first))
            p2p = ChartPoint("K2", p2.r, p2.a, p2.v_first, p2.modes_u, p2.modes_v, u_first=abs(p2.u_first))
            checks = [
                (charts.kappa21(charts.kappa12(p1)).to_flat(), p1.to_flat()),
                (charts.kappa23(charts.kappa32(p3)).to_flat(), p3.to_flat()),
                (flat_down(charts.kappa12(p1)), flat_down(p1)),
                (flat_down(charts.kappa21(p2n)), flat_down(p2n)),
                (flat_down(charts.kappa32(p3)), flat_down(p3)),
                (flat_down(charts.kappa23(p2p)), flat_down(p2p)),
            ]
            for x, y in checks:
                worst = max(worst, rel(x, y))
        d["info"] = f"max deviation {worst:.2e}"
        assert worst <= 1e-12


def test_04_desingularization_consistency():
    rng = np.random.default_rng(7)
    with criterion(4, "blown-down chart trajectories match the original flow", 60) as d:
        worst = 0.0
        for k0 in (1, 2, 4, 8):
            n = k0 - 1
            pts = [
                ChartPoint("K1", 0.6, 0.8, -0.95, 0.02 * rng.uniform(-1, 1, n), 0.02 * rng.uniform(-1, 1, n), eps=0.05),
                ChartPoint("K2", 0.5, 0.5, -1.2, 0.02 * rng.uniform(-1, 1, n), 0.02 * rng.uniform(-1, 1, n),
                           u_first=-1.0),
                ChartPoint("K3", 0.3, 0.3, 0.1, np.zeros(n), np.zeros(n), eps=0.05),
            ]
            for p in pts:
                defect, _ = desingularization_defect(p, 0.5, 2.0)
                worst = max(worst, defect)
        d["info"] = f"max sup-norm gap {worst:.2e}"
        assert worst < 1e-6


def test_05_conserved_quantities():
    rng = np.random.default_rng(11)
    with criterion(5, "blow-down invariants drift < 1e-9 per unit time", 10) as d:
        worst = 0.0
        for k0 in (1, 4, 8, 16):
            n = k0 - 1
            for mu in (0.5, 2.0):
                pts = [
                    charts.orig_point(model.initial_condition(-0.2, 0.01, k0), 0.01, 1.0),
                    ChartPoint("K1", 0.6, 0.8, -0.98, 0.02 * rng.uniform(-1, 1, n), 0.02 * rng.uniform(-1, 1, n),
                               eps=0.01),
                    # deep on the attracting side so the Riccati first mode stays bounded for mu = 2
                    ChartPoint("K2", 0.5, 0.2, -2.5, np.zeros(n), np.zeros(n), u_first=-2.0),
                    ChartPoint("K3", 0.3, 0.3, 0.1, np.zeros(n), np.zeros(n), eps=0.05),
                ]
                for p in pts:
                    worst = max(worst, conserved_drift(p, mu, 3.0))
        d["info"] = f"max relative drift {worst:.2e}"
        assert worst < 1e-9


def test_06_dichotomy():
    with criterion(6, "EXCHANGE for mu=0.5 near (-rho, rho), JUMP for mu=2", 300) as d:
        worst = 0.0
        rho = SectionParams().rho
        for eps in (1e-3, 1e-4):
            for k0 in (4, 8, 16):
                r = passage(model.ModelParams(mu=0.5, a=1.0, eps=eps, k0=k0))
                assert r.outcome == "EXCHANGE", f"mu=0.5 eps={eps} k0={k0}: {r.outcome}"
                dist = r.diagnostics["distance_to_target"]
                worst = max(worst, dist)
                assert dist <= 0.1 * rho
                r = passage(model.ModelParams(mu=2.0, a=1.0, eps=eps, k0=k0))
                assert r.outcome == "JUMP", f"mu=2 eps={eps} k0={k0}: {r.outcome}"
        d["info"] = f"max distance to (-rho, rho) {worst:.2e} (limit {0.1 * rho:g})"


def test_07_exit_scaling():
    with criterion(7, "exit slope 0.25 +- 0.1, stable +- 0.02 across k0", 600) as d:
        slopes = {}
        for k0 in (4, 8, 16):
            slopes[k0], _ = exit_scaling_fit(model.ModelParams(mu=2.0, a=1.0, k0=k0), [1e-3, 1e-4, 1e-5])
        spread = max(slopes.values()) - min(slopes.values())
        d["info"] = "slopes " + ", ".join(f"k0={k}: {s:.4f}" for k, s in slopes.items()) + f"; spread {spread:.1e}"
        assert spread <= 0.02
        for k0, s in slopes.items():
            assert abs(s - 0.25) <= 0.1, f"k0={k0}: slope {s:.4f}"


def test_08_manifold_convergence():
    with criterion(8, "truncated manifolds converge to the k0=64 reference", 60) as d:
        rep = convergence_report([2, 4, 8, 16, 32], -0.5, 0.5, 1.0, kref=64)
        sup = [r["sup_distance"] for r in rep["rows"]]
        haus = [r["hausdorff"] for r in rep["rows"]]
        d["info"] = f"decay exponent {rep['decay_exponent']:.2f}; sup {sup[0]:.1e}..{sup[-1]:.1e}"
        assert all(x > y for x, y in zip(sup, sup[1:]))
        assert all(x > y for x, y in zip(haus, haus[1:]))
        assert rep["decay_exponent"] >= 1.0


def test_09_modal_identity():
    with criterion(9, "entry-chart field equals the projected moving-interval PDE", 5) as d:
        worst = 0.0
        for k0 in range(1, 13):
            for seed in range(5):
                pt = pdecheck.random_k1_point(k0, seed)
                worst = max(worst, pdecheck.k1_pde_consistency(model.ModelParams(mu=0.7, k0=k0), pt))
        d["info"] = f"max defect {worst:.2e}"
        assert worst < 1e-10


def test_10_scaling_chart_limit():
    with criterion(10, "scaling-chart system approaches the planar limit ODE", 30) as d:
        eps_list = [1e-2, 1e-3, 1e-4]
        sup = pdecheck.sup_distance_by_eps(pdecheck.k2_limit_compare(1.0, 0.0, eps_list, eta=0.3))
        zero = pdecheck.k2_limit_compare(1.0, 0.0, [1e-3], eta=0.0, r2=0.0)
        z = max(r["l2_distance"] for r in zero)
        d["info"] = "sup distances " + ", ".join(f"{sup[e]:.2e}" for e in eps_list) + f"; constant data {z:.1e}"
        assert sup[1e-2] > sup[1e-3] > sup[1e-4]
        assert z < 1e-9


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
