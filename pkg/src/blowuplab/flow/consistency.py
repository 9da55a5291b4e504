"""Checks that chart flows are time-changed copies of the original flow."""
from __future__ import annotations

import numpy as np

from .. import charts, model
from ..charts import ChartPoint
from ..errors import DomainError
from .integrate import integrate, with_clock


def _blowdown_flat(chart, y):
    st, eps, a = charts.blowdown(ChartPoint.from_flat(chart, y))
    return st.flat(eps, a)


def desingularization_defect(point: ChartPoint, mu, tau_end, n_samples=50, rtol=1e-12, atol=1e-14,
                             method="DOP853"):
    """Sup-norm gap between a blown-down chart trajectory and the original flow.

    The chart field is integrated together with the original time
    t(tau) = int r^-3 dtau; the original system is integrated from the
    blown-down start and both are compared at matching times.
    """
    if point.chart not in ("K1", "K2", "K3"):
        raise DomainError("expected a chart point")
    k0 = point.k0
    f = charts.chart_rhs(point.chart, mu, k0)
    J = charts.chart_jacobian(point.chart, mu, k0)
    fc, Jc = with_clock(f, J)
    z0 = np.append(point.to_flat(), 0.0)
    chart_traj = integrate(fc, z0, tau_end, rtol, atol, method, Jc)
    taus = np.linspace(0.0, tau_end, n_samples)
    Z = chart_traj(taus)
    Yb = np.array([_blowdown_flat(point.chart, z[:-1]) for z in Z])
    t = Z[:, -1]
    g = lambda y: model.orig_rhs(y, mu, k0)
    Jg = lambda y: model.orig_jacobian(y, mu, k0)
    orig = integrate(g, Yb[0], t[-1], rtol, atol, method, Jg)
    Yo = orig(t)
    return float(np.max(np.abs(Yb - Yo))), float(t[-1])


def conserved_drift(point: ChartPoint, mu, tau_end, rtol=1e-12, atol=1e-14, method="DOP853", n_samples=200):
    """Largest relative drift per unit time of the blow-down invariants.

    For K1 and K3 these are r^8 eps_i (= eps) and r^-2 a_i (= a); for the
    original system they are eps and a themselves.
    """
    k0 = point.k0
    f = charts.chart_rhs(point.chart, mu, k0)
    J = charts.chart_jacobian(point.chart, mu, k0)
    y0 = point.to_flat()
    atol = np.full(y0.size, atol)
    if point.chart in ("K1", "K3"):
        # eps_i decays like exp(-8 tau / 3) in K3; keep its error relative
        atol[1] = atol[1] * max(abs(y0[1]), 1e-300) * 1e-8
    traj = integrate(f, y0, tau_end, rtol, atol, method, J)
    Y = traj(np.linspace(0.0, tau_end, n_samples))
    if point.chart == "ORIG":
        q = [Y[:, 2 * k0], Y[:, 2 * k0 + 1]]
    elif point.chart == "K2":
        q = [Y[:, 0], Y[:, 1]]
    else:
        r = Y[:, 0]
        q = [r**8 * Y[:, 1], Y[:, 2] / r**2]
    out = 0.0
    for series in q:
        ref = abs(series[0])
        if ref == 0.0:
            d = float(np.max(np.abs(series)))
        else:
            d = float(np.max(np.abs(series - series[0]))) / ref
        out = max(out, d / tau_end)
    return out
