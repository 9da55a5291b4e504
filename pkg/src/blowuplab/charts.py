"""Blow-up charts K1 (entry), K2 (scaling) and K3 (exit).

Weights of the blow-up are 3 for the mode amplitudes, 8 for eps and -2 for
the half-length a. K1 and K3 differ only in the sign of u1 = -+ r^3, so their
fields share one implementation with ``s = -1`` (K1) or ``s = +1`` (K3).

Flat layouts:

* K1, K3: ``[r, eps_i, a_i, v1_i, u_2..u_k0, v_2..v_k0]``
* K2:     ``[r, a_2, u1_2, v1_2, u_2..u_k0, v_2..v_k0]``
* ORIG:   ``[u_1..u_k0, v_1..v_k0, eps, a]`` (see model)
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import model, spectral
from .errors import ChartDomainError, DomainError, SingularCoefficientError, SingularMapError

CHARTS = ("ORIG", "K1", "K2", "K3")
A_FLOOR = 1e-8
WEIGHTS = {"u": 3, "v": 3, "eps": 8, "a": -2}

_SIGN = {"K1": -1.0, "K3": 1.0}


@dataclass
class ChartPoint:
    chart: str
    r: Optional[float]
    a: float
    v_first: float
    modes_u: np.ndarray
    modes_v: np.ndarray
    eps: Optional[float] = None
    u_first: Optional[float] = None

    def __post_init__(self):
        if self.chart not in CHARTS:
            raise DomainError(f"unknown chart {self.chart!r}")
        self.modes_u = np.asarray(self.modes_u, dtype=float)
        self.modes_v = np.asarray(self.modes_v, dtype=float)

    @property
    def k0(self):
        return self.modes_u.size + 1

    def to_flat(self):
        if self.chart == "K2":
            head = [self.r, self.a, self.u_first, self.v_first]
        elif self.chart == "ORIG":
            return np.concatenate([[self.u_first], self.modes_u, [self.v_first], self.modes_v, [self.eps, self.a]])
        else:
            head = [self.r, self.eps, self.a, self.v_first]
        return np.concatenate([np.asarray(head, dtype=float), self.modes_u, self.modes_v])

    @classmethod
    def from_flat(cls, chart, y):
        y = np.asarray(y, dtype=float)
        if chart == "ORIG":
            k0 = (y.size - 2) // 2
            return cls("ORIG", None, y[-1], y[k0], y[1:k0], y[k0 + 1 : 2 * k0], eps=y[-2], u_first=y[0])
        n = (y.size - 4) // 2
        mu_, mv_ = y[4 : 4 + n], y[4 + n :]
        if chart == "K2":
            return cls("K2", y[0], y[1], y[3], mu_, mv_, u_first=y[2])
        return cls(chart, y[0], y[2], y[3], mu_, mv_, eps=y[1])

    def to_json(self):
        first = {"v": float(self.v_first)}
        if self.u_first is not None:
            first["u"] = float(self.u_first)
        rec = {
            "chart": self.chart,
            "r": None if self.r is None else float(self.r),
            "eps_i": None if self.eps is None else float(self.eps),
            "a_i": float(self.a),
            "first_mode": first,
            "modes_u": [float(x) for x in self.modes_u],
            "modes_v": [float(x) for x in self.modes_v],
        }
        return json.dumps(rec)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        f = d["first_mode"]
        return cls(d["chart"], d["r"], d["a_i"], f["v"], d["modes_u"], d["modes_v"], eps=d["eps_i"], u_first=f.get("u"))


def orig_point(state, eps, a):
    return ChartPoint("ORIG", None, a, state.v[0], state.u[1:], state.v[1:], eps=eps, u_first=state.u[0])


# ---------------------------------------------------------------- blow-down


def blowdown(point: ChartPoint, recover_a=True):
    """Map a chart point to (GalerkinState, eps, a) in original coordinates."""
    c = point.chart
    if c == "ORIG":
        u = np.concatenate([[point.u_first], point.modes_u])
        v = np.concatenate([[point.v_first], point.modes_v])
        return model.GalerkinState(u, v), point.eps, point.a
    r = point.r
    if r < 0:
        raise ChartDomainError("radial coordinate must be nonnegative")
    r3 = r**3
    if c == "K2":
        u1 = r3 * point.u_first
        eps = r**8
    else:
        u1 = _SIGN[c] * r3
        eps = r**8 * point.eps
    if r == 0:
        if recover_a:
            raise SingularMapError("cannot recover a on the blown-up locus r = 0")
        a = None
    else:
        a = point.a / r**2
    u = np.concatenate([[u1], r3 * point.modes_u])
    v = np.concatenate([[r3 * point.v_first], r3 * point.modes_v])
    return model.GalerkinState(u, v), eps, a


def lift(state, eps, a, chart):
    """Inverse of blowdown on the chart's domain."""
    u1, v1 = state.u[0], state.v[0]
    if chart == "ORIG":
        return orig_point(state, eps, a)
    if chart == "K2":
        if not eps > 0:
            raise ChartDomainError("K2 requires eps > 0")
        r = eps ** 0.125
        r3 = r**3
        return ChartPoint("K2", r, a * r**2, v1 / r3, state.u[1:] / r3, state.v[1:] / r3, u_first=u1 / r3)
    if chart == "K1":
        if not u1 < 0:
            raise ChartDomainError("K1 requires u1 < 0")
    elif chart == "K3":
        if not u1 > 0:
            raise ChartDomainError("K3 requires u1 > 0")
    else:
        raise DomainError(f"unknown chart {chart!r}")
    r = abs(u1) ** (1.0 / 3.0)
    r3 = abs(u1)
    return ChartPoint(chart, r, a * r**2, v1 / r3, state.u[1:] / r3, state.v[1:] / r3, eps=eps / r**8)


def wedge_defect(point, a_target):
    """Relative mismatch of a_i against r^2 a for a point that should blow down to a."""
    if point.chart == "ORIG":
        return abs(point.a - a_target) / a_target
    return abs(point.a - point.r**2 * a_target) / max(point.r**2 * a_target, 1e-300)


def wedge_ok(point, a_min, a_max):
    """True iff the recovered half-length lies in [a_min, a_max]."""
    if point.chart != "ORIG" and point.r == 0:
        return True
    _, _, a = blowdown(point)
    return a_min <= a <= a_max


# ---------------------------------------------------------------- fields


def _check_a(a):
    av = getattr(a, "value", a)
    if av <= A_FLOOR:
        raise SingularCoefficientError(f"chart a-coordinate {av} below floor {A_FLOOR}")


def k13_rhs(y, mu, k0, s):
    """Desingularized field of K1 (s=-1) or K3 (s=+1) on the flat layout."""
    r, e, a, w = y[0], y[1], y[2], y[3]
    n = k0 - 1
    u = y[4 : 4 + n]
    v = y[4 + n : 4 + 2 * n]
    F = 1 - w * w + 2 * a * e * mu + np.sum(u * u - v * v)
    out = np.empty_like(y)
    out[0] = (s / 3.0) * r * F
    out[1] = (-8.0 * s / 3.0) * e * F
    out[2] = (2.0 * s / 3.0) * a * F
    out[3] = 2 * a * e - s * w * F
    if n:
        lam = spectral.b_vector(k0) * a**-1.5
        out[4 : 4 + n] = lam * u + 2 * (s * u - v * w) + model.coupling_term(u, v, k0) - s * u * F
        out[4 + n :] = r**8 * e * lam * v - s * v * F
    return out


def k13_jacobian(y, mu, k0, s):
    y = np.asarray(y, dtype=float)
    r, e, a, w = y[:4]
    n = k0 - 1
    u = y[4 : 4 + n]
    v = y[4 + n :]
    N = y.size
    F = 1 - w * w + 2 * a * e * mu + np.sum(u * u - v * v)
    dF = np.zeros(N)
    dF[1] = 2 * a * mu
    dF[2] = 2 * e * mu
    dF[3] = -2 * w
    dF[4 : 4 + n] = 2 * u
    dF[4 + n :] = -2 * v
    # every component carries a term coef * X * F
    coef = np.concatenate([[s / 3.0, -8.0 * s / 3.0, 2.0 * s / 3.0, -s], -s * np.ones(2 * n)])
    J = np.outer(coef * y, dF) + np.diag(coef * F)
    J[3, 1] += 2 * a
    J[3, 2] += 2 * e
    if n:
        b = spectral.b_vector(k0)
        lam = b * a**-1.5
        lam_a = -1.5 * b * a**-2.5
        iu = np.arange(4, 4 + n)
        iv = iu + n
        c2 = model.SQRT2
        J[np.ix_(iu, iu)] += np.diag(lam + 2 * s) + c2 * model.coupling_jacobian(u, k0)
        J[np.ix_(iu, iv)] += np.diag(-2 * w * np.ones(n)) - c2 * model.coupling_jacobian(v, k0)
        J[iu, 3] += -2 * v
        J[iu, 2] += lam_a * u
        J[iv, iv] += r**8 * e * lam
        J[iv, 0] += 8 * r**7 * e * lam * v
        J[iv, 1] += r**8 * lam * v
        J[iv, 2] += r**8 * e * lam_a * v
    return J


def k2_rhs(y, mu, k0):
    r, a, U, V = y[0], y[1], y[2], y[3]
    n = k0 - 1
    u = y[4 : 4 + n]
    v = y[4 + n : 4 + 2 * n]
    out = np.empty_like(y)
    out[0] = 0 * r
    out[1] = 0 * a
    out[2] = U * U - V * V + 2 * a * mu + np.sum(u * u - v * v)
    out[3] = 2 * a
    if n:
        lam = spectral.b_vector(k0) * a**-1.5
        out[4 : 4 + n] = lam * u + 2 * (u * U - v * V) + model.coupling_term(u, v, k0)
        out[4 + n :] = r**8 * lam * v
    return out


def k2_jacobian(y, mu, k0):
    y = np.asarray(y, dtype=float)
    r, a, U, V = y[:4]
    n = k0 - 1
    u = y[4 : 4 + n]
    v = y[4 + n :]
    J = np.zeros((y.size, y.size))
    J[2, 1] = 2 * mu
    J[2, 2] = 2 * U
    J[2, 3] = -2 * V
    J[2, 4 : 4 + n] = 2 * u
    J[2, 4 + n :] = -2 * v
    J[3, 1] = 2.0
    if n:
        b = spectral.b_vector(k0)
        lam = b * a**-1.5
        lam_a = -1.5 * b * a**-2.5
        iu = np.arange(4, 4 + n)
        iv = iu + n
        c2 = model.SQRT2
        J[np.ix_(iu, iu)] = np.diag(lam + 2 * U) + c2 * model.coupling_jacobian(u, k0)
        J[np.ix_(iu, iv)] = np.diag(-2 * V * np.ones(n)) - c2 * model.coupling_jacobian(v, k0)
        J[iu, 2] = 2 * u
        J[iu, 3] = -2 * v
        J[iu, 1] = lam_a * u
        J[iv, iv] = r**8 * lam
        J[iv, 0] = 8 * r**7 * lam * v
        J[iv, 1] = r**8 * lam_a * v
    return J


def chart_rhs(chart, mu, k0):
    """Return f(y) for the flat layout of ``chart`` (hooks excluded)."""
    if chart == "K2":
        return lambda y: k2_rhs(y, mu, k0)
    if chart == "ORIG":
        return lambda y: model.orig_rhs(y, mu, k0)
    s = _SIGN[chart]
    return lambda y: k13_rhs(y, mu, k0, s)


def chart_jacobian(chart, mu, k0):
    if chart == "K2":
        return lambda y: k2_jacobian(y, mu, k0)
    if chart == "ORIG":
        return lambda y: model.orig_jacobian(y, mu, k0)
    s = _SIGN[chart]
    return lambda y: k13_jacobian(y, mu, k0, s)


def _hook_transport(point, params):
    """Chart-time contribution of the hook terms, pushed through the scaling."""
    if point.r is None or point.r <= 0:
        raise SingularMapError("hook transport needs r > 0")
    state, eps, a = blowdown(point)
    k0 = point.k0
    du = np.zeros(k0)
    dv = np.zeros(k0)
    if params.hu is not None:
        du = np.asarray(params.hu(state.u, state.v, eps, a), dtype=float)
    if params.hv is not None:
        dv = eps * np.asarray(params.hv(state.u, state.v, eps, a), dtype=float)
    r = point.r
    r3 = r**3
    d = np.zeros(2 * k0 + 2)
    if point.chart == "K2":
        d[2] = du[0] / r3
        d[3] = dv[0] / r3
        d[4 : 4 + k0 - 1] = du[1:] / r3
        d[4 + k0 - 1 :] = dv[1:] / r3
    else:
        s = _SIGN[point.chart]
        dr = du[0] / (3 * s * r**2)
        d[0] = dr
        d[1] = -8 * point.eps * dr / r
        d[2] = 2 * point.a * dr / r
        d[3] = dv[0] / r3 - 3 * point.v_first * dr / r
        d[4 : 4 + k0 - 1] = du[1:] / r3 - 3 * point.modes_u * dr / r
        d[4 + k0 - 1 :] = dv[1:] / r3 - 3 * point.modes_v * dr / r
    return d / r3


def _field(point, params, chart):
    if point.chart != chart:
        raise ChartDomainError(f"expected a {chart} point, got {point.chart}")
    if point.k0 != params.k0:
        raise DomainError("mode count does not match params.k0")
    _check_a(point.a)
    y = point.to_flat()
    dy = chart_rhs(chart, params.mu, params.k0)(y)
    if params.has_hooks:
        dy = dy + _hook_transport(point, params)
    return ChartPoint.from_flat(chart, dy)


def field_K1(point, params):
    """Desingularized K1 field, returned as a ChartPoint of derivatives."""
    return _field(point, params, "K1")


def field_K2(point, params):
    return _field(point, params, "K2")


def field_K3(point, params):
    return _field(point, params, "K3")


def k2_stability_bound(a2):
    """u1_2 must stay below this for the slaved modes to remain stable.

    The slowest slaved rate is b_2 a2^(-3/2) + 2 u1_2, so the threshold is
    pi^2 2^(-5/2) a2^(-3/2), a quarter of pi^2 2^(-1/2) a2^(-3/2).
    """
    return -0.5 * spectral.b_coefficient(2) * a2**-1.5


# ---------------------------------------------------------------- transitions


def kappa12(p):
    if p.chart != "K1":
        raise ChartDomainError("kappa12 expects a K1 point")
    if not p.eps > 0:
        raise ChartDomainError("kappa12 requires eps_1 > 0")
    s = p.eps ** -0.375
    return ChartPoint("K2", p.eps**0.125 * p.r, p.eps**0.25 * p.a, s * p.v_first, s * p.modes_u, s * p.modes_v, u_first=-s)


def kappa21(p):
    if p.chart != "K2":
        raise ChartDomainError("kappa21 expects a K2 point")
    if not p.u_first < 0:
        raise ChartDomainError("kappa21 requires u1_2 < 0")
    m = -p.u_first
    return ChartPoint(
        "K1", m ** (1 / 3) * p.r, m ** (2 / 3) * p.a, p.v_first / m, p.modes_u / m, p.modes_v / m, eps=m ** (-8 / 3)
    )


def kappa32(p):
    if p.chart != "K3":
        raise ChartDomainError("kappa32 expects a K3 point")
    if not p.eps > 0:
        raise ChartDomainError("kappa32 requires eps_3 > 0")
    s = p.eps ** -0.375
    return ChartPoint("K2", p.eps**0.125 * p.r, p.eps**0.25 * p.a, s * p.v_first, s * p.modes_u, s * p.modes_v, u_first=s)


def kappa23(p):
    if p.chart != "K2":
        raise ChartDomainError("kappa23 expects a K2 point")
    if not p.u_first > 0:
        raise ChartDomainError("kappa23 requires u1_2 > 0")
    m = p.u_first
    return ChartPoint(
        "K3", m ** (1 / 3) * p.r, m ** (2 / 3) * p.a, p.v_first / m, p.modes_u / m, p.modes_v / m, eps=m ** (-8 / 3)
    )


# ---------------------------------------------------------------- audits


def quasi_homogeneity_defect(k0, mu=0.7, scale=0.37, seed=1):
    """Check the weighted scaling of the original field under the blow-up weights.

    Substituting u -> s^3 u, v -> s^3 v, eps -> s^8 eps, a -> s^-2 a multiplies
    the u-equations and the v1-equation by s^6 and the v_k-equations (k >= 2)
    by s^14; the extra s^8 there is the diffusion factor. Returns the largest
    relative deviation from these laws.
    """
    rng = np.random.default_rng(seed)
    y = np.concatenate([rng.uniform(-1, 1, 2 * k0), [rng.uniform(0.1, 1), rng.uniform(0.5, 2)]])
    sc = np.concatenate([np.full(2 * k0, scale**3), [scale**8, scale**-2]])
    f0 = model.orig_rhs(y, mu, k0)
    f1 = model.orig_rhs(sc * y, mu, k0)
    expect = np.concatenate([np.full(k0, scale**6), [scale**6], np.full(k0 - 1, scale**14)])
    ref = expect * f0[: 2 * k0]
    return float(np.max(np.abs(f1[: 2 * k0] - ref) / np.maximum(np.abs(ref), 1e-300)))
