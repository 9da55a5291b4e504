"""Closed-form second-order center manifolds.

Original coordinates: expansion about u1 = v1 = c < 0 of (u_1, ..., u_k0) over
(v1 - c, eps, v_2, ..., v_k0). Chart K1: expansion about p^-(A) = (r, eps1,
a1, v11) = (0, 0, A, -1) of (v11 + 1, u_2, ...) over (r, eps1, a1 - A, v_2, ...).
"""
from __future__ import annotations

import math

import numpy as np

from .. import spectral
from ..errors import DomainError, ResonanceError
from .expansion import ManifoldExpansion

SQRT2 = math.sqrt(2.0)
RESONANCE_REL = 1e-6


def orig_layout(k0):
    """Center/graph index lists and names in the flat layout [u, v, eps, a]."""
    center_idx = [k0, 2 * k0] + list(range(k0 + 1, 2 * k0))
    center_vars = ["v1", "eps"] + [f"v{k}" for k in range(2, k0 + 1)]
    graph_idx = list(range(k0))
    graph_vars = [f"u{k}" for k in range(1, k0 + 1)]
    return center_idx, center_vars, graph_idx, graph_vars


def k1_layout(k0):
    """Same for the K1 layout [r, eps1, a1, v11, u_2.., v_2..]."""
    n = k0 - 1
    center_idx = [0, 1, 2] + list(range(4 + n, 4 + 2 * n))
    center_vars = ["r", "eps", "a"] + [f"v{k}" for k in range(2, k0 + 1)]
    graph_idx = [3] + list(range(4, 4 + n))
    graph_vars = ["v1"] + [f"u{k}" for k in range(2, k0 + 1)]
    return center_idx, center_vars, graph_idx, graph_vars


def orig_base(k0, c, a):
    y = np.zeros(2 * k0 + 2)
    y[0] = y[k0] = c
    y[2 * k0 + 1] = a
    return y


def k1_base(k0, a_star):
    y = np.zeros(2 * k0 + 2)
    y[2] = a_star
    y[3] = -1.0
    return y


def _empty(chart, base, layout, k0, meta):
    ci, cv, gi, gv = layout
    nc, ng = len(cv), len(gv)
    return ManifoldExpansion(chart, base, cv, gv, ci, gi, np.zeros((ng, nc)), np.zeros((ng, nc, nc)), k0, meta)


def cm_closed_form(k0, c, mu, a, small=0.75):
    """Quadratic center manifold of the shifted Galerkin system at u1 = v1 = c."""
    if not c < 0:
        raise DomainError("c must be negative: normal hyperbolicity lost at c >= 0")
    if abs(c) > small:
        raise DomainError(f"|c| = {abs(c)} exceeds the smallness threshold {small}")
    exp = _empty("ORIG", orig_base(k0, c, a), orig_layout(k0), k0, {"c": c, "mu": mu, "a": a})
    lam = np.array([spectral.scaled_eigenvalue(k, a) for k in range(2, k0 + 1)])
    D = lam + 2 * c
    if np.any(np.abs(D) < RESONANCE_REL * abs(2 * c)):
        raise ResonanceError("lambda_k + 2c vanishes for some mode")
    L = 2 * c / D

    exp.set_coef("u1", "v1", value=1.0)
    exp.set_coef("u1", "eps", value=a * (1 - mu) / c)
    exp.set_coef("u1", "v1", "eps", value=a * (mu - 1) / c**2)
    exp.set_coef("u1", "eps", "eps", value=-(a**2) * (mu - 3) * (mu - 1) / (2 * c**3))
    for j in range(2, k0 + 1):
        exp.set_coef("u1", f"v{j}", f"v{j}", value=1 / (2 * c) - 2 * c / D[j - 2] ** 2)

    table = spectral.CouplingTable(k0)
    for k in range(2, k0 + 1):
        lk, Dk = lam[k - 2], D[k - 2]
        g = f"u{k}"
        exp.set_coef(g, f"v{k}", value=L[k - 2])
        exp.set_coef(g, "v1", f"v{k}", value=2 * lk / Dk**2)
        num = c * lk * Dk + 4 * a * c * (mu - 1) + 2 * a * lk * mu
        exp.set_coef(g, "eps", f"v{k}", value=2 * num / Dk**3)
        for i in range(2, k0 + 1):
            for j in range(i, k0 + 1):
                al = table[i, j, k]
                if al == 0.0:
                    continue
                if i == j:
                    val = SQRT2 * al * (1 - L[i - 2] ** 2) / Dk
                else:
                    val = 2 * SQRT2 * al * (1 - L[i - 2] * L[j - 2]) / Dk
                exp.set_coef(g, f"v{i}", f"v{j}", value=val)
    return exp


def cm_closed_form_K1(k0, a1_star, mu):
    """Quadratic center manifold of chart K1 at p^-(a1_star), exact at second order.

    With s = A^(3/2), D_k = b_k - 2s and g_k = -2s / D_k the slaved modes start
    as u_k = g_k v_k. At A = 0 all u_k coefficients vanish and the v11 graph
    reduces to (1 - mu) (a1 - A) eps1 + sum v_k^2 / 2.
    """
    A = float(a1_star)
    if A < 0:
        raise DomainError("a1_star must be nonnegative")
    exp = _empty("K1", k1_base(k0, A), k1_layout(k0), k0, {"a1_star": A, "mu": mu})
    b = spectral.b_vector(k0)
    s = A**1.5
    D = b - 2 * s
    if np.any(np.abs(D) < RESONANCE_REL * np.abs(b)):
        raise ResonanceError("b_k - 2 a1^(3/2) vanishes for some mode")
    gam = -2 * s / D

    exp.set_coef("v1", "eps", value=A * (1 - mu))
    exp.set_coef("v1", "eps", "a", value=1 - mu)
    exp.set_coef("v1", "eps", "eps", value=A**2 * (mu**2 - 1) / 2)
    for j in range(2, k0 + 1):
        exp.set_coef("v1", f"v{j}", f"v{j}", value=(1 - gam[j - 2] ** 2) / 2)

    if A == 0.0:
        return exp
    table = spectral.CouplingTable(k0)
    for k in range(2, k0 + 1):
        bk, Dk = b[k - 2], D[k - 2]
        g = f"u{k}"
        exp.set_coef(g, f"v{k}", value=gam[k - 2])
        # a-derivative of the linear slaving coefficient
        exp.set_coef(g, "a", f"v{k}", value=-3 * math.sqrt(A) * bk / Dk**2)
        exp.set_coef(g, "eps", f"v{k}", value=2 * A * s * (4 * s**2 + 2 * s * Dk + (1 - mu) * Dk**2) / Dk**3)
        for i in range(2, k0 + 1):
            for j in range(i, k0 + 1):
                al = table[i, j, k]
                if al == 0.0:
                    continue
                if i == j:
                    val = SQRT2 * al * (1 - gam[i - 2] ** 2) * s / Dk
                else:
                    val = 2 * SQRT2 * al * (1 - gam[i - 2] * gam[j - 2]) * s / Dk
                exp.set_coef(g, f"v{i}", f"v{j}", value=val)
    return exp


def k1_standard_coeffs(c, mu):
    """First-mode coefficients in the variables x1 = v1 - c, x2 = 2 a eps.

    Returns b11, b12, b22 of the quadratic graph correction
    b11 x1^2 + b12 x1 x2 + b22 x2^2.
    """
    return {"b11": 0.0, "b12": (mu - 1) / (2 * c**2), "b22": -(mu - 3) * (mu - 1) / (8 * c**3)}


def reduced_Hpm(sign, rho1, mu):
    """First-order slow manifold of the reduced K1 system, rho1 = a1 eps1.

    '-' gives the continuation of the attracting branch near v11 = -1,
    '+' the one near v11 = +1.
    """
    if sign == "-":
        return -1.0 + (1 - mu) * rho1
    if sign == "+":
        return 1.0 + (1 + mu) * rho1
    raise DomainError("sign must be '-' or '+'")


def F1_reduced(v11, rho1, mu):
    """Common factor F1 of the K1 field with all higher modes zero."""
    return 1 - v11**2 + 2 * rho1 * mu
