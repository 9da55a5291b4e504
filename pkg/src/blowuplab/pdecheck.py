"""Cross-checks between the Galerkin hierarchy and its PDE readings."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import charts, model, spectral
from .charts import ChartPoint
from .errors import DomainError
from .flow.integrate import integrate


@dataclass
class ReferenceRun:
    k0_ref: int
    t: np.ndarray
    u: np.ndarray  # snapshots x modes
    v: np.ndarray
    norms: np.ndarray  # L2 norm of (u, v) per snapshot

    def state(self, i):
        return model.GalerkinState(self.u[i], self.v[i])

    def distance(self, other):
        """Sup over shared snapshots of the L2 distance, after zero-padding to the larger truncation."""
        if not np.allclose(self.t, other.t):
            raise DomainError("runs use different snapshot times")
        k = max(self.k0_ref, other.k0_ref)
        pad = lambda A: np.pad(A, ((0, 0), (0, k - A.shape[1])))
        du = pad(self.u) - pad(other.u)
        dv = pad(self.v) - pad(other.v)
        return float(np.max(np.sqrt(np.sum(du**2, axis=1) + np.sum(dv**2, axis=1))))


def reference_solve(params: model.ModelParams, initial: model.GalerkinState, T, n_snapshots=11, rtol=1e-10,
                    atol=1e-13):
    """High-truncation run of the original Galerkin system on [0, T].

    The diagonal stiffness of the slaved modes is handled by the implicit
    Radau method with the analytic Jacobian.
    """
    k0 = params.k0
    if params.has_hooks:
        raise DomainError("reference runs use the polynomial system")
    y0 = initial.padded(k0).flat(params.eps, params.a)
    f = lambda y: model.orig_rhs(y, params.mu, k0)
    J = lambda y: model.orig_jacobian(y, params.mu, k0)
    traj = integrate(f, y0, T, rtol=rtol, atol=atol, method="Radau", jac=J)
    ts = np.linspace(0.0, T, n_snapshots)
    Y = traj(ts)
    u, v = Y[:, :k0], Y[:, k0 : 2 * k0]
    norms = np.sqrt(np.sum(u**2, axis=1) + np.sum(v**2, axis=1))
    return ReferenceRun(k0, ts, u, v, norms)


def self_convergence(params, initial, T, k0_list, **kw):
    """Distances between runs at k0 and 2 k0 for each k0 in the list."""
    rows = []
    for k0 in k0_list:
        lo = reference_solve(params.with_(k0=k0), initial.padded(k0) if initial.k0 <= k0 else _cut(initial, k0), T, **kw)
        hi = reference_solve(params.with_(k0=2 * k0), initial.padded(2 * k0) if initial.k0 <= 2 * k0
                             else _cut(initial, 2 * k0), T, **kw)
        rows.append({"k0": k0, "k0_ref": 2 * k0, "l2_distance": lo.distance(hi)})
    return rows


def _cut(state, k0):
    return model.GalerkinState(state.u[:k0], state.v[:k0])


# ---------------------------------------------------------------- scaling chart limit


def _project_profile(fn, k0, a2, n=2048):
    x = spectral.quadrature_grid(a2, n)
    vals = fn(x)
    return np.array([spectral.project(vals, k, a2, x).value for k in range(1, k0 + 1)])


def limit_ode(U0, V0, mu, T, n_snapshots=11, rtol=1e-12, atol=1e-14):
    """Planar limit U' = U^2 - V^2 + mu, V' = 1.

    Returns (times, U, V, blowup_time); blowup_time is None unless |U|
    exceeds 1e6 before T, in which case the arrays stop there.
    """
    f = lambda y: np.array([y[0] ** 2 - y[1] ** 2 + mu, 1.0])
    hit = {"t": None}

    def obs(t0, t1, solver):
        if abs(solver.y[0]) > 1e6:
            hit["t"] = t1
            return True
        return False

    traj = integrate(f, np.array([U0, V0], dtype=float), T, rtol=rtol, atol=atol, method="DOP853", observer=obs)
    ts = np.linspace(0.0, T, n_snapshots)
    if hit["t"] is not None:
        ts = ts[ts < hit["t"]]
    Y = traj(ts)
    return ts, Y[:, 0], Y[:, 1], hit["t"]


def k2_limit_compare(a, mu, eps_list, T=1.0, U0=-1.0, V0=-1.0, eta=0.0, k0=8, r2=None, n_snapshots=11,
                     rtol=1e-11, atol=1e-13):
    """Distance of the scaling-chart Galerkin flow to the planar limit ODE.

    For each eps the chart domain is [-a2, a2] with a2 = a eps^(1/4) and
    r2 = eps^(1/8) (``r2`` overrides the latter). Initial data are
    U(X) = U0 + eta X^2 and V(X) = V0 + eta X^2. Distances are measured in
    L2 of the profiles transported to [-a, a], which is sqrt(a / a2) times
    the L2 distance on the chart domain. Chart time tau relates to the limit
    time through T = sqrt(2 a2) tau.
    """
    rows = []
    for eps in eps_list:
        a2 = a * eps**0.25
        rr = eps**0.125 if r2 is None else r2
        s = math.sqrt(2 * a2)
        ts, Ul, Vl, tb = limit_ode(U0, V0, mu, T, n_snapshots)
        cu = _project_profile(lambda x: U0 + eta * x**2, k0, a2)
        cv = _project_profile(lambda x: V0 + eta * x**2, k0, a2)
        if eta == 0.0:
            cu[1:] = 0.0
            cv[1:] = 0.0
            cu[0], cv[0] = U0 * s, V0 * s
        y0 = np.concatenate([[rr, a2, cu[0], cv[0]], cu[1:], cv[1:]])
        f = charts.chart_rhs("K2", mu, k0)
        J = charts.chart_jacobian("K2", mu, k0)
        tau_end = (ts[-1] if ts.size else 0.0) / s
        traj = integrate(f, y0, tau_end, rtol=rtol, atol=atol, method="Radau", jac=J)
        Y = traj(ts / s)
        for m, T_snap in enumerate(ts):
            du = np.concatenate([[Y[m, 2] - s * Ul[m]], Y[m, 4 : 4 + k0 - 1]])
            dv = np.concatenate([[Y[m, 3] - s * Vl[m]], Y[m, 4 + k0 - 1 :]])
            dist = math.sqrt(a / a2) * math.sqrt(du @ du + dv @ dv)
            rows.append({"eps": eps, "k0": k0, "T_snapshot": float(T_snap), "l2_distance": dist,
                         "blowup_time": tb})
    return rows


def sup_distance_by_eps(rows):
    out = {}
    for r in rows:
        out[r["eps"]] = max(out.get(r["eps"], 0.0), r["l2_distance"])
    return out


# ---------------------------------------------------------------- entry chart PDE reading


def k1_pde_rhs(point: ChartPoint, mu):
    """Projection of the moving-interval PDE of the entry chart onto the modes.

    Terms are assembled from L2 triple products and Laplacian eigenvalues on
    [-a1, a1], with the first u-mode pinned at -1; the rows of r1, eps1 and a1
    are shared with the chart field.
    """
    if point.chart != "K1":
        raise DomainError("expected a K1 point")
    k0 = point.k0
    r, e, a1 = point.r, point.eps, point.a
    u = np.concatenate([[-1.0], point.modes_u])
    v = np.concatenate([[point.v_first], point.modes_v])
    s = math.sqrt(2 * a1)
    F = 2 * a1 * e * mu + (u @ u) - (v @ v)
    tp = np.array([[[spectral.triple_product(i, j, k, a1) for k in range(1, k0 + 1)] for j in range(1, k0 + 1)]
                   for i in range(1, k0 + 1)])
    quad = np.einsum("i,j,ijk->k", u, u, tp) - np.einsum("i,j,ijk->k", v, v, tp)
    lam = np.array([spectral.eigenvalue(k, a1) for k in range(1, k0 + 1)])
    const = np.zeros(k0)
    const[0] = s  # <1, e_1>
    du = s * (lam * u + quad) + F * u
    dv = s * (e * r**8 * lam * v + e * const) + F * v
    dr = -r * F / 3.0
    return np.concatenate([[dr, 8 * e * F / 3.0, -2 * a1 * F / 3.0, dv[0]], du[1:], dv[1:]])


def k1_pde_consistency(params: model.ModelParams, point: ChartPoint):
    """Max absolute modal defect between the chart field and the PDE projection."""
    if point.k0 != params.k0:
        raise DomainError("point and params disagree on k0")
    lhs = charts.field_K1(point, params).to_flat()
    rhs = k1_pde_rhs(point, params.mu)
    return float(np.max(np.abs(lhs - rhs)))


def random_k1_point(k0, seed=0, scale=0.3):
    rng = np.random.default_rng(seed)
    n = k0 - 1
    return ChartPoint("K1", rng.uniform(0.1, 1.0), rng.uniform(0.2, 2.0), rng.uniform(-1.5, -0.5),
                      scale * rng.uniform(-1, 1, n), scale * rng.uniform(-1, 1, n), eps=rng.uniform(0.0, 0.5))
