"""Truncated Galerkin system in original coordinates.

Flat state layout used by the integrators and the oracle:
``y = [u_1..u_k0, v_1..v_k0, eps, a]``. The right-hand side functions only use
arithmetic that also works on object arrays, so they can be evaluated on
truncated Taylor jets.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import spectral
from .errors import DomainError

Hook = Callable[[np.ndarray, np.ndarray, float, float], np.ndarray]

SQRT2 = math.sqrt(2.0)


@dataclass
class ModelParams:
    mu: float
    a: float = 1.0
    eps: float = 0.0
    k0: int = 1
    hu: Optional[Hook] = field(default=None, repr=False)
    hv: Optional[Hook] = field(default=None, repr=False)

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError("a must be positive")
        if self.eps < 0:
            raise DomainError("eps must be nonnegative")
        if int(self.k0) != self.k0 or self.k0 < 1:
            raise DomainError("k0 must be an integer >= 1")
        self.k0 = int(self.k0)

    @property
    def has_hooks(self):
        return self.hu is not None or self.hv is not None

    def with_(self, **kw):
        d = dict(mu=self.mu, a=self.a, eps=self.eps, k0=self.k0, hu=self.hu, hv=self.hv)
        d.update(kw)
        return ModelParams(**d)


@dataclass
class GalerkinState:
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.u.shape != self.v.shape or self.u.ndim != 1:
            raise DomainError("u and v must be 1-d arrays of equal length")

    @property
    def k0(self):
        return self.u.size

    def norm2(self):
        """Squared l2 norm of (u, v); equals the L2 norm of the functions."""
        return float(self.u @ self.u + self.v @ self.v)

    def padded(self, k0):
        u = np.zeros(k0)
        v = np.zeros(k0)
        u[: self.k0] = self.u
        v[: self.k0] = self.v
        return GalerkinState(u, v)

    def flat(self, eps, a):
        return np.concatenate([self.u, self.v, [eps, a]])

    @classmethod
    def from_flat(cls, y):
        k0 = (len(y) - 2) // 2
        return cls(y[:k0], y[k0 : 2 * k0])

    def to_record(self, params):
        rec = {"k0": self.k0, "mu": params.mu, "a": params.a, "eps": params.eps}
        rec.update({f"u_{k}": float(x) for k, x in enumerate(self.u, 1)})
        rec.update({f"v_{k}": float(x) for k, x in enumerate(self.v, 1)})
        return rec

    @classmethod
    def from_record(cls, rec):
        k0 = int(rec["k0"])
        u = [float(rec[f"u_{k}"]) for k in range(1, k0 + 1)]
        v = [float(rec[f"v_{k}"]) for k in range(1, k0 + 1)]
        return cls(u, v), ModelParams(mu=float(rec["mu"]), a=float(rec["a"]), eps=float(rec["eps"]), k0=k0)


def coupling_term(uh, vh, k0):
    """sqrt(2) * sum_ij alpha_ij^k (u_i u_j - v_i v_j) for k = 2..k0.

    ``uh``, ``vh`` hold modes 2..k0. Works for float and object arrays.
    """
    if k0 < 3:
        return uh * 0.0
    A = spectral.coupling_matrix(k0)
    quad = np.outer(uh, uh) - np.outer(vh, vh)
    return SQRT2 * (A @ quad.ravel())


def coupling_jacobian(uh, k0):
    """Derivative of sum_ij alpha_ij^k u_i u_j with respect to u_i (without sqrt 2)."""
    n = k0 - 1
    if k0 < 3:
        return np.zeros((n, n))
    table = spectral._alpha_table(k0)
    return 2.0 * table @ uh


def orig_rhs(y, mu, k0, hu=None, hv=None):
    """Right-hand side on the flat layout [u, v, eps, a]."""
    u = y[:k0]
    v = y[k0 : 2 * k0]
    eps = y[2 * k0]
    a = y[2 * k0 + 1]
    out = np.empty_like(y)
    uh, vh = u[1:], v[1:]
    du1 = u[0] * u[0] - v[0] * v[0] + 2 * a * eps * mu + np.sum(uh * uh - vh * vh)
    dv1 = 2 * a * eps
    out[0] = du1
    out[k0] = dv1
    if k0 > 1:
        lam = spectral.b_vector(k0) * a**-1.5
        out[1:k0] = lam * uh + 2 * (uh * u[0] - vh * v[0]) + coupling_term(uh, vh, k0)
        out[k0 + 1 : 2 * k0] = eps * lam * vh
    if hu is not None:
        out[:k0] = out[:k0] + hu(u, v, eps, a)
    if hv is not None:
        out[k0 : 2 * k0] = out[k0 : 2 * k0] + eps * hv(u, v, eps, a)
    out[2 * k0] = 0 * eps
    out[2 * k0 + 1] = 0 * a
    return out


def orig_jacobian(y, mu, k0):
    """Analytic Jacobian of orig_rhs (hooks not included)."""
    y = np.asarray(y, dtype=float)
    u, v = y[:k0], y[k0 : 2 * k0]
    eps, a = y[2 * k0], y[2 * k0 + 1]
    n = 2 * k0 + 2
    J = np.zeros((n, n))
    J[0, :k0] = 2 * u
    J[0, k0 : 2 * k0] = -2 * v
    J[0, 2 * k0] = 2 * a * mu
    J[0, 2 * k0 + 1] = 2 * eps * mu
    J[k0, 2 * k0] = 2 * a
    J[k0, 2 * k0 + 1] = 2 * eps
    if k0 > 1:
        b = spectral.b_vector(k0)
        lam = b * a**-1.5
        dlam = -1.5 * b * a**-2.5
        uh, vh = u[1:], v[1:]
        rows = np.arange(1, k0)
        C = SQRT2 * coupling_jacobian(uh, k0)
        Cv = SQRT2 * coupling_jacobian(vh, k0)
        J[1:k0, 1:k0] = np.diag(lam + 2 * u[0]) + C
        J[1:k0, k0 + 1 : 2 * k0] = np.diag(-2 * v[0] * np.ones(k0 - 1)) - Cv
        J[rows, 0] = 2 * uh
        J[rows, k0] = -2 * vh
        J[1:k0, 2 * k0 + 1] = dlam * uh
        J[rows + k0, rows + k0] = eps * lam
        J[k0 + 1 : 2 * k0, 2 * k0] = lam * vh
        J[k0 + 1 : 2 * k0, 2 * k0 + 1] = eps * dlam * vh
    return J


def vector_field(params: ModelParams, state: GalerkinState) -> GalerkinState:
    """Time derivative of (u, v) for the k0-truncated system."""
    if state.k0 != params.k0:
        raise DomainError(f"state has {state.k0} modes, params expect {params.k0}")
    dy = orig_rhs(state.flat(params.eps, params.a), params.mu, params.k0, params.hu, params.hv)
    return GalerkinState.from_flat(dy)


def pre_time_change_field(params, state):
    """Field before absorbing the factor sqrt(2a) into time."""
    d = vector_field(params, state)
    s = 1.0 / math.sqrt(2.0 * params.a)
    return GalerkinState(s * d.u, s * d.v)


def critical_branch(sign, v1, k0):
    """Point on the attracting branch u1 = v1 < 0 (sign '-') or u1 = -v1 < 0 (sign '+')."""
    if sign == "-":
        if not v1 < 0:
            raise DomainError("branch '-' requires v1 < 0")
        u1 = v1
    elif sign == "+":
        if not v1 > 0:
            raise DomainError("branch '+' requires v1 > 0")
        u1 = -v1
    else:
        raise DomainError("sign must be '-' or '+'")
    u = np.zeros(k0)
    v = np.zeros(k0)
    u[0], v[0] = u1, v1
    return GalerkinState(u, v)


def mode_bound(k, a, delta, exponent=2.0):
    """Decay envelope (2a)^3 pi^-2 k^-p delta for the initial higher modes."""
    return (2.0 * a) ** 3 / np.pi**2 * np.asarray(k, dtype=float) ** -exponent * delta


def initial_condition(c, delta, k0, a=1.0, exponent=2.0, seed=0):
    """Near-homogeneous data: (u1, v1) = (c, c) plus bounded higher modes.

    Higher modes are uniform random multiples of ``mode_bound``; with
    ``delta = 0`` the result is exactly the critical branch point.
    """
    if not c < 0:
        raise DomainError("c must be negative")
    if delta < 0:
        raise DomainError("delta must be nonnegative")
    st = critical_branch("-", c, k0)
    if delta > 0 and k0 > 1:
        rng = np.random.default_rng(seed)
        k = np.arange(2, k0 + 1)
        env = mode_bound(k, a, delta, exponent)
        st.u[1:] = env * rng.uniform(-1, 1, k0 - 1)
        st.v[1:] = env * rng.uniform(-1, 1, k0 - 1)
    return st


def nesting_check(params_lo, params_hi, state, tol=1e-13):
    """True iff the low truncation agrees with the first k0 rows of the high one."""
    k0 = params_lo.k0
    d_lo = vector_field(params_lo, state)
    d_hi = vector_field(params_hi, state.padded(params_hi.k0))
    return bool(np.all(np.abs(d_hi.u[:k0] - d_lo.u) <= tol) and np.all(np.abs(d_hi.v[:k0] - d_lo.v) <= tol))


def rms_distance(state, target, a):
    """Max of the root-mean-square deviations of u and v from the target functions."""
    du = np.linalg.norm(state.u - target.u)
    dv = np.linalg.norm(state.v - target.v)
    return max(du, dv) / math.sqrt(2.0 * a)


def constant_pair(u_level, v_level, k0, a):
    """Galerkin state of the constant functions u = u_level, v = v_level."""
    s = math.sqrt(2.0 * a)
    u = np.zeros(k0)
    v = np.zeros(k0)
    u[0], v[0] = u_level * s, v_level * s
    return GalerkinState(u, v)
