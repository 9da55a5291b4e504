"""Residuals, tail bounds and convergence of the manifold expansions."""
from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .. import charts, model, spectral
from ..errors import DomainError
from .closed_form import cm_closed_form
from .oracle import k1_singular_limit_rhs


def field_for(expansion):
    """Flat field matching the expansion's chart and parameters."""
    m = expansion.meta
    k0 = expansion.k0
    if expansion.chart == "ORIG":
        return lambda y: model.orig_rhs(y, m["mu"], k0)
    if expansion.chart == "K1":
        if m.get("a1_star", 1.0) == 0.0:
            return lambda y: k1_singular_limit_rhs(y, m["mu"], k0)
        return charts.chart_rhs("K1", m["mu"], k0)
    raise DomainError(f"no field registered for chart {expansion.chart}")


def invariance_residual(expansion, field, sample):
    """Max-norm defect of the invariance identity at a center-variable point."""
    x = np.asarray(sample, dtype=float)
    y = expansion.full_point(x)
    f = field(y)
    lhs = expansion.graph_jacobian(x) @ f[expansion.center_idx]
    return float(np.max(np.abs(f[expansion.graph_idx] - lhs), initial=0.0))


def default_direction(expansion, seed=3):
    """Fixed ray direction; radial and eps-type coordinates point inward (>= 0)."""
    rng = np.random.default_rng(seed)
    d = rng.uniform(-1, 1, len(expansion.center_vars))
    for i, name in enumerate(expansion.center_vars):
        if name in ("r", "eps"):
            d[i] = abs(d[i]) + 0.1
    return d / np.linalg.norm(d)


def ray_slope(expansion, field=None, direction=None, scales=None):
    """Least-squares slope of log residual against log s along s * direction."""
    field = field or field_for(expansion)
    direction = default_direction(expansion) if direction is None else np.asarray(direction, dtype=float)
    scales = np.logspace(-4, -2, 9) if scales is None else np.asarray(scales)
    res = np.array([invariance_residual(expansion, field, s * direction) for s in scales])
    res = np.maximum(res, 1e-300)
    slope = np.polyfit(np.log(scales), np.log(res), 1)[0]
    return float(slope), res


def tail_bound_check(expansion, samples, lam=None):
    """Smallest C_k with |h_k| <= C_k / |lambda_k| (|v|^2 + 1 + eps) on the samples.

    ``samples`` are center-variable points of an original-coordinate expansion.
    Returns a dict with per-mode constants and their maximum.
    """
    if expansion.chart != "ORIG":
        raise DomainError("tail bound is stated in original coordinates")
    k0 = expansion.k0
    a = expansion.meta["a"]
    lam = np.array([spectral.scaled_eigenvalue(k, a) for k in range(2, k0 + 1)]) if lam is None else lam
    ie = expansion.center_vars.index("eps")
    iv = [i for i, nm in enumerate(expansion.center_vars) if nm.startswith("v")]
    C = np.zeros(k0 - 1)
    for x in np.atleast_2d(samples):
        h = expansion.graph(x)[1:]
        w = float(x[iv] @ x[iv]) + 1 + x[ie]
        C = np.maximum(C, np.abs(h) * np.abs(lam) / w)
    return {"C_k": C, "C": float(C.max(initial=0.0))}


def hausdorff_distance(A, B):
    """Symmetric Hausdorff distance between two finite point clouds (l2 metric)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.size == 0 or B.size == 0:
        raise DomainError("point clouds must be nonempty")
    dab = cKDTree(B).query(A)[0].max()
    dba = cKDTree(A).query(B)[0].max()
    return float(max(dab, dba))


def sample_grid(kref, n=64, vmax=0.1, eps_max=0.01, decay=2.0, seed=0):
    """Sampled (v1 - c, eps, v_2..v_kref) points with a k^-decay mode profile.

    Each point has l2 norm of the v part at most vmax.
    """
    rng = np.random.default_rng(seed)
    k = np.arange(1, kref + 1, dtype=float)
    prof = k**-decay
    prof /= np.linalg.norm(prof)
    pts = np.zeros((n, kref + 1))
    for m in range(n):
        v = vmax * prof * rng.uniform(-1, 1, kref)
        pts[m, 0] = v[0]
        pts[m, 1] = eps_max * rng.uniform(0, 1)
        pts[m, 2:] = v[1:]
    return pts


def _evaluate_truncated(expansion, pts):
    """Graph values of a k0 expansion on kref-dimensional samples (extra modes ignored)."""
    nc = len(expansion.center_vars)
    return np.array([expansion.graph(p[:nc]) for p in pts])


def manifold_cloud(expansion, pts, kref):
    """Embed sampled manifold points in the (u, v, eps) space of dimension 2 kref + 1."""
    k0 = expansion.k0
    nc = len(expansion.center_vars)
    c = expansion.meta["c"]
    out = np.zeros((len(pts), 2 * kref + 1))
    for m, p in enumerate(pts):
        h = expansion.graph(p[:nc])
        out[m, :k0] = h
        out[m, 0] += c
        out[m, kref] = c + p[0]
        out[m, kref + 1 : kref + k0] = p[2:nc]
        out[m, 2 * kref] = p[1]
    return out


def convergence_report(k0_list, c, mu, a, kref=64, n=64, vmax=0.1, eps_max=0.01, seed=0):
    """Sup-grid and Hausdorff distances of h^k0 to h^kref with a fitted decay exponent."""
    ref = cm_closed_form(kref, c, mu, a)
    pts = sample_grid(kref, n, vmax, eps_max, seed=seed)
    # sort to make the result independent of the sampling order
    pts = pts[np.lexsort(pts.T[::-1])]
    href = _evaluate_truncated(ref, pts)
    cloud_ref = manifold_cloud(ref, pts, kref)
    rows = []
    for k0 in k0_list:
        e = cm_closed_form(k0, c, mu, a)
        h = np.zeros_like(href)
        h[:, :k0] = _evaluate_truncated(e, pts)
        sup = float(np.max(np.linalg.norm(h - href, axis=1)))
        trunc = pts.copy()
        trunc[:, 2 + k0 - 1 :] = 0.0
        dh = hausdorff_distance(manifold_cloud(e, trunc, kref), cloud_ref)
        rows.append({"k0": k0, "sup_distance": sup, "hausdorff": dh})
    ks = np.array([r["k0"] for r in rows], dtype=float)
    d = np.array([r["sup_distance"] for r in rows])
    ok = d > 0
    exponent = float(-np.polyfit(np.log(ks[ok]), np.log(d[ok]), 1)[0]) if ok.sum() >= 2 else float("nan")
    return {"rows": rows, "decay_exponent": exponent}
