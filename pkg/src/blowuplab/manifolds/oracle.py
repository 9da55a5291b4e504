"""Order-2 invariance solver used as an independent check on the closed forms.

Pipeline: exact 2-jet of the field by jet arithmetic, ordered real Schur form
with the center block first, Sylvester decoupling to a block-diagonal linear
part, a Kronecker-structured homological solve for the quadratic graph, and a
second-order change back to a graph over the chosen original center variables.
"""
from __future__ import annotations

import numpy as np
from scipy import linalg

from .. import charts, model
from ..errors import DomainError, ResonanceError
from .closed_form import k1_base, k1_layout, orig_base, orig_layout
from .expansion import ManifoldExpansion
from .jets import jet_of

CENTER_TOL = 1e-9


def solve_invariance_order2(f, z0, center_idx, graph_idx, center_vars=None, graph_vars=None, chart="ORIG",
                            k0=None, gap=1e-8, cond_max=1e12, eq_tol=1e-12, meta=None):
    """Quadratic center manifold of ``f`` at the equilibrium ``z0``.

    Only the coordinates listed in ``center_idx`` and ``graph_idx`` are treated
    as variables; every other coordinate of ``z0`` stays fixed as a parameter.
    Raises ResonanceError if a stable eigenvalue is closer than ``gap`` to the
    imaginary axis or the homological operator is too ill-conditioned.
    """
    z0 = np.asarray(z0, dtype=float)
    free = list(center_idx) + list(graph_idx)
    nc, ng = len(center_idx), len(graph_idx)
    n = nc + ng

    def f_free(w):
        z = np.array(z0, dtype=object)
        for pos, idx in enumerate(free):
            z[idx] = w[pos]
        return f(z)[free]

    f0, J, H = jet_of(f_free, z0[free])
    if np.max(np.abs(f0), initial=0.0) > eq_tol:
        raise DomainError(f"not an equilibrium: |f| = {np.max(np.abs(f0)):.3e}")

    T, Q, sdim = linalg.schur(J, output="real", sort=lambda x, y: abs(x) + abs(y) < CENTER_TOL)
    if sdim != nc:
        raise ResonanceError(f"found {sdim} center eigenvalues, expected {nc}")
    T11, T12, T22 = T[:nc, :nc], T[:nc, nc:], T[nc:, nc:]
    stable = linalg.eigvals(T22)
    if np.min(np.abs(stable.real), initial=np.inf) < gap:
        raise ResonanceError("stable eigenvalue too close to the imaginary axis")
    X = linalg.solve_sylvester(T11, -T22, -T12) if ng else np.zeros((nc, 0))
    P = Q @ np.block([[np.eye(nc), X], [np.zeros((ng, nc)), np.eye(ng)]])
    Pinv = linalg.inv(P)

    # quadratic part in the decoupled coordinates, restricted to center-center
    Pc = P[:, :nc]
    G = np.einsum("ij,jab,ak,bl->ikl", Pinv[nc:], H, Pc, Pc)

    # S_m T11 + T11^T S_m - sum_l T22[m, l] S_l = G_m  (row-major vec)
    Ic = np.eye(nc)
    Lc = np.kron(Ic, T11.T) + np.kron(T11.T, Ic)
    Lop = np.kron(np.eye(ng), Lc) - np.kron(T22, np.eye(nc * nc))
    if ng and np.linalg.cond(Lop) > cond_max:
        raise ResonanceError("homological operator is near-singular")
    S = np.linalg.solve(Lop, G.reshape(-1)).reshape(ng, nc, nc) if ng else np.zeros((0, nc, nc))

    # back to a graph over the original center coordinates
    ic = list(range(nc))
    ig = list(range(nc, n))
    Pcc, Pcs = P[np.ix_(ic, range(nc))], P[np.ix_(ic, range(nc, n))]
    Psc, Pss = P[np.ix_(ig, range(nc))], P[np.ix_(ig, range(nc, n))]
    M = linalg.inv(Pcc)
    lin = Psc @ M
    K = Pss - Psc @ M @ Pcs
    quad = np.einsum("gm,mij,ia,jb->gab", K, S, M, M)

    cv = center_vars or [f"x{i}" for i in center_idx]
    gv = graph_vars or [f"y{i}" for i in graph_idx]
    return ManifoldExpansion(chart, z0, cv, gv, list(center_idx), list(graph_idx), lin, quad,
                             k0 if k0 is not None else n, dict(meta or {}))


def oracle_orig(k0, c, mu, a):
    """Oracle expansion in original coordinates, laid out like cm_closed_form."""
    ci, cv, gi, gv = orig_layout(k0)
    f = lambda y: model.orig_rhs(y, mu, k0)
    return solve_invariance_order2(f, orig_base(k0, c, a), ci, gi, cv, gv, "ORIG", k0, meta={"c": c, "mu": mu, "a": a})


def k1_singular_limit_rhs(y, mu, k0):
    """K1 field in the limit where the slaved modes u_k are pinned at zero.

    The u_k rows return zero (u_k = 0 is invariant in the limit) and the
    r^8-weighted diffusion term of v_k, of order at least ten, is dropped.
    """
    n = k0 - 1
    r, e, a, w = y[0], y[1], y[2], y[3]
    v = y[4 + n : 4 + 2 * n]
    F = 1 - w * w + 2 * a * e * mu - np.sum(v * v)
    out = np.empty_like(y)
    out[0] = -r * F / 3.0
    out[1] = 8.0 * e * F / 3.0
    out[2] = -2.0 * a * F / 3.0
    out[3] = 2 * a * e + w * F
    out[4 : 4 + n] = y[4 : 4 + n] * 0.0
    out[4 + n :] = v * F
    return out


def oracle_K1(k0, a1_star, mu):
    """Oracle expansion in chart K1 at p^-(a1_star).

    For a1_star > 0 the full chart field is used. At a1_star = 0 the slaved
    eigenvalues diverge, so the solve runs on the singular-limit field over
    the variables (r, eps1, a1, v11, v_k) and the u_k graphs are zero.
    """
    ci, cv, gi, gv = k1_layout(k0)
    base = k1_base(k0, a1_star)
    meta = {"a1_star": a1_star, "mu": mu}
    if a1_star > 0:
        f = charts.chart_rhs("K1", mu, k0)
        return solve_invariance_order2(f, base, ci, gi, cv, gv, "K1", k0, meta=meta)
    red = solve_invariance_order2(lambda y: k1_singular_limit_rhs(y, mu, k0), base, ci, [3], cv, ["v1"], "K1", k0)
    lin = np.zeros((len(gv), len(cv)))
    quad = np.zeros((len(gv), len(cv), len(cv)))
    lin[0], quad[0] = red.lin[0], red.quad[0]
    return ManifoldExpansion("K1", base, cv, gv, ci, gi, lin, quad, k0, meta)
