"""Chart-switching passage through the transcritical point.

A run starts in original coordinates near the constant pair (-rho, -rho),
enters the entry chart at r1 = rho_r, follows the attracting slow manifold to
eps1 = delta, crosses the scaling chart and then either turns back into the
entry chart along the other attracting branch (EXCHANGE, mu < 1) or leaves
through the exit chart (JUMP, mu > 1).
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .. import charts, model, spectral
from ..charts import ChartPoint
from ..errors import ConfigError, DomainError, StiffnessError
from .integrate import Box, SectionSpec, integrate_to_section

OUTCOMES = ("EXCHANGE", "JUMP", "ESCAPED_BOX", "MAX_TIME")
NU_MAX = math.pi**2 / math.sqrt(2.0)


@dataclass
class SectionParams:
    """Section geometry. ``rho`` is the level of the constant functions at entry and exit."""

    rho: float = 0.25
    delta: Optional[float] = None
    beta: float = 0.5
    nu: float = 1.0
    Cu: float = 1.0
    Cv: float = 1.0
    omega: Optional[float] = None
    entry_perturbation: float = 1e-3

    def K(self, k0):
        """max(Cu, Cv) times the full series of 1/|b_k|, k >= 2 (independent of k0)."""
        cap = spectral.KMAX_CAP
        return max(self.Cu, self.Cv) * (spectral.inverse_b_sum(cap) + spectral.inverse_b_tail(cap))

    def delta_bound(self, mu, k0):
        return 4 * self.nu**2 * (mu - 1) ** 2 / self.K(k0) ** 2

    def resolve(self, mu, k0):
        """Fill defaults and enforce the admissibility inequalities."""
        if mu == 1:
            raise ConfigError("mu = 1 (canard case) is excluded")
        if not 0 < self.rho < 1:
            raise ConfigError(f"rho must lie in (0, 1), got {self.rho}")
        if not 0 < self.nu < NU_MAX:
            raise ConfigError(f"violated: nu < pi^2/sqrt(2) = {NU_MAX:.6g} (nu = {self.nu})")
        bound = self.delta_bound(mu, k0)
        delta = min(0.1, 0.5 * bound) if self.delta is None else self.delta
        if not 0 < delta < bound:
            raise ConfigError(f"violated: delta < 4 nu^2 (mu-1)^2 / K^2 = {bound:.6g} (delta = {delta})")
        if self.beta <= 0 or self.Cu <= 0 or self.Cv <= 0:
            raise ConfigError("beta, Cu and Cv must be positive")
        omega = 2.0 * math.sqrt(max(mu - 1.0, 0.0) + 1.0) if self.omega is None else self.omega
        d = asdict(self)
        d.update(delta=float(delta), omega=float(omega))
        return SectionParams(**d)


@dataclass
class ItineraryEntry:
    chart: str
    section: str
    point: ChartPoint
    time: float
    segment_time: float

    def to_dict(self):
        return {"chart": self.chart, "section": self.section, "time": self.time,
                "segment_time": self.segment_time, "point": json.loads(self.point.to_json())}


@dataclass
class PassageReport:
    itinerary: list
    outcome: str
    exit_v: Optional[float]
    diagnostics: dict = field(default_factory=dict)
    final_state: Optional[model.GalerkinState] = None
    path: list = field(default_factory=list)

    @property
    def n_sections(self):
        return len(self.itinerary)

    def to_json(self):
        rec = {"outcome": self.outcome, "exit_v": self.exit_v, "diagnostics": _jsonable(self.diagnostics),
               "itinerary": [e.to_dict() for e in self.itinerary]}
        if self.final_state is not None:
            rec["final_state"] = {"u": self.final_state.u.tolist(), "v": self.final_state.v.tolist()}
        return json.dumps(rec, sort_keys=True)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return x


# ---------------------------------------------------------------- geometry helpers


def entry_radius(rho, a):
    """Radial coordinate of the entry section: |u1| = rho sqrt(2a) = r^3."""
    return (rho * math.sqrt(2.0 * a)) ** (1.0 / 3.0)


def default_entry(params: model.ModelParams, sp: SectionParams, seed=0):
    """Constant pair (-rho, -rho) plus a small decaying perturbation of the higher modes."""
    c = -sp.rho * math.sqrt(2.0 * params.a)
    return model.initial_condition(c, sp.entry_perturbation, params.k0, params.a, seed=seed)


def _mode_boxes(k0, cap_u, cap_v, off, scale=1.0):
    """Caps u_k^2 <= cap_u / |b_k| (and same for v) on the flat K-layout."""
    boxes = []
    if k0 < 2:
        return boxes
    b = np.abs(spectral.b_vector(k0))
    n = k0 - 1
    for j in range(n):
        k = j + 2
        boxes.append(Box(f"u_{k}^2", lambda y, i=off + j: (scale * y[i]) ** 2, hi=cap_u / b[j]))
        boxes.append(Box(f"v_{k}^2", lambda y, i=off + n + j: (scale * y[i]) ** 2, hi=cap_v / b[j]))
    return boxes


def k1_domain(y):
    if not np.all(np.isfinite(y)):
        return "non-finite state"
    if y[0] <= 0:
        return f"left the chart wedge: r = {y[0]:.3g}"
    if y[2] <= charts.A_FLOOR:
        return f"left the chart wedge: a_i = {y[2]:.3g}"
    return None


def k2_domain_factory(k0):
    def dom(y):
        if not np.all(np.isfinite(y)):
            return "non-finite state"
        if k0 > 1 and y[2] >= charts.k2_stability_bound(y[1]):
            return "u1_2 beyond the slaved-mode stability bound"
        return None

    return dom


def sections(mu, k0, a, sp: SectionParams):
    """All sections of the passage for resolved section parameters."""
    d = sp.delta
    m = d ** -0.375
    rho_r = entry_radius(sp.rho, a)
    ntail = 4
    out = {}
    out["S1_out"] = SectionSpec(
        "S1_out", "K1", lambda y: y[1] - d,
        boxes=[Box("a_1", lambda y: y[2], hi=sp.nu),
               Box("v_12", lambda y: m * y[3], -m - sp.beta, -m + sp.beta)]
        + _mode_boxes(k0, sp.Cu * d**0.75, sp.Cv * d**0.75, ntail, scale=m),
        direction=+1,
    )
    out["S2a_out"] = SectionSpec(
        "S2a_out", "K2", lambda y: y[2] + m,
        boxes=[Box("v_12", lambda y: y[3], m - sp.beta, m + sp.beta)]
        + _mode_boxes(k0, sp.Cu * d**0.75, sp.Cv * d**0.75, ntail),
        direction=-1, guard=lambda y: y[3] > 0,
    )
    out["S2e_out"] = SectionSpec(
        "S2e_out", "K2", lambda y: y[2] - m,
        boxes=[Box("v_12", lambda y: y[3], hi=sp.omega * d ** -0.125)]
        + _mode_boxes(k0, sp.Cu * d**0.75, sp.Cv * d**0.75, ntail),
        direction=+1,
    )
    out["D_a_out"] = SectionSpec("D_a_out", "K1", lambda y: y[0] - rho_r, direction=+1)
    out["S3_out"] = SectionSpec("S3_out", "K3", lambda y: y[0] - rho_r, direction=+1)
    return out


# ---------------------------------------------------------------- tracker


@dataclass
class _Segment:
    chart: str
    traj: object
    t0: float


def _conserved(chart, y, a):
    """Relative defects of r^8 eps_i and r^-2 a_i against their original values."""
    if chart == "K2":
        return None
    r, e, ai = y[..., 0], y[..., 1], y[..., 2]
    return r**8 * e, ai / r**2


def passage(params: model.ModelParams, entry: Optional[model.GalerkinState] = None,
            section_params: Optional[SectionParams] = None, rtol=1e-9, atol=1e-12, max_time=1e6,
            method="Radau", seed=0):
    """Track one trajectory through the blown-up transcritical point.

    ``params`` carries mu, a, eps and k0 (hooks are not supported here).
    """
    if params.has_hooks:
        raise DomainError("passage tracks the polynomial system; hooks must be zero")
    if not params.eps > 0:
        raise ConfigError("passage needs eps > 0")
    mu, a, eps, k0 = params.mu, params.a, params.eps, params.k0
    sp = (section_params or SectionParams()).resolve(mu, k0)
    state = default_entry(params, sp, seed) if entry is None else entry
    if state.k0 != k0:
        raise DomainError("entry state has the wrong mode count")
    secs = sections(mu, k0, a, sp)
    rho_r = entry_radius(sp.rho, a)

    itinerary = []
    segments = []
    clock = 0.0

    def record(chart, name, y, dt):
        nonlocal clock
        clock += dt
        itinerary.append(ItineraryEntry(chart, name, ChartPoint.from_flat(chart, y), clock, dt))

    def finish(outcome, y_last, chart, exit_v=None, why=""):
        diag = _diagnostics(segments, a, eps, k0, sp)
        if why:
            diag["reason"] = why
        final = None
        try:
            final, _, _ = charts.blowdown(ChartPoint.from_flat(chart, y_last))
        except DomainError:
            pass
        if final is not None:
            diag["distance_to_target"] = _target_distance(outcome, final, sp, a, k0)
        return PassageReport(itinerary, outcome, exit_v, diag, final, _path(segments, a))

    def run(chart, y0, targets, allow_start=True):
        f = charts.chart_rhs(chart, mu, k0)
        J = charts.chart_jacobian(chart, mu, k0)
        dom = k1_domain if chart in ("K1", "K3") else k2_domain_factory(k0)
        try:
            res = integrate_to_section(f, y0, targets, max_time, rtol, atol, method, J, allow_start, dom)
        except StiffnessError as exc:
            return None, str(exc)
        if res.trajectory is not None:
            segments.append(_Segment(chart, res.trajectory, clock))
        return res, ""

    # entry chart, from Sigma_1^in
    p1 = charts.lift(state, eps, a, "K1")
    y = p1.to_flat()
    if abs(y[0] - rho_r) > 1e-9 * rho_r:
        raise DomainError("entry state is not on the entry section r1 = rho_r")
    record("K1", "S1_in", y, 0.0)
    if y[1] >= sp.delta:
        raise ConfigError(f"eps too large for the sections: eps_1 = {y[1]:.3g} >= delta = {sp.delta:.3g}")
    res, why = run("K1", y, secs["S1_out"])
    if res is None:
        return finish("MAX_TIME", y, "K1", why=why)
    if res.status == "MISS":
        return finish("MAX_TIME" if "no crossing" in res.diagnostic else "ESCAPED_BOX", res.y, "K1", why=res.diagnostic)
    record("K1", "S1_out", res.y, res.t)
    if res.status == "BOX_VIOLATION":
        return finish("ESCAPED_BOX", res.y, "K1", why=res.diagnostic)

    # scaling chart
    p2 = charts.kappa12(ChartPoint.from_flat("K1", res.y))
    y2 = p2.to_flat()
    record("K2", "S2_in", y2, 0.0)
    res, why = run("K2", y2, [secs["S2a_out"], secs["S2e_out"]], allow_start=False)
    if res is None:
        return finish("MAX_TIME", y2, "K2", why=why)
    if res.status == "MISS":
        return finish("MAX_TIME" if "no crossing" in res.diagnostic else "ESCAPED_BOX", res.y, "K2", why=res.diagnostic)
    record("K2", res.section.name, res.y, res.t)
    if res.status == "BOX_VIOLATION":
        return finish("ESCAPED_BOX", res.y, "K2", why=res.diagnostic)

    if res.section.name == "S2a_out":
        p = charts.kappa21(ChartPoint.from_flat("K2", res.y))
        y1 = p.to_flat()
        record("K1", "S1_back", y1, 0.0)
        res, why = run("K1", y1, secs["D_a_out"])
        if res is None:
            return finish("MAX_TIME", y1, "K1", why=why)
        if not res.hit:
            return finish("MAX_TIME" if "no crossing" in res.diagnostic else "ESCAPED_BOX", res.y, "K1",
                          why=res.diagnostic)
        record("K1", "D_a_out", res.y, res.t)
        rep = finish("EXCHANGE", res.y, "K1")
        rep.exit_v = float(rep.final_state.v[0] / math.sqrt(2 * a))
        return rep

    p = charts.kappa23(ChartPoint.from_flat("K2", res.y))
    y3 = p.to_flat()
    record("K3", "S3_in", y3, 0.0)
    res, why = run("K3", y3, secs["S3_out"])
    if res is None:
        return finish("MAX_TIME", y3, "K3", why=why)
    if not res.hit:
        return finish("MAX_TIME" if "no crossing" in res.diagnostic else "ESCAPED_BOX", res.y, "K3", why=res.diagnostic)
    record("K3", "S3_out", res.y, res.t)
    rep = finish("JUMP", res.y, "K3")
    rep.exit_v = float(rep.final_state.v[0] / math.sqrt(2 * a))
    rep.diagnostics["v13_exit"] = float(res.y[3])
    return rep


def _path(segments, a, per_segment=200):
    """Blown-down first-mode mean values (chart, u, v) along the run."""
    out = []
    s = math.sqrt(2.0 * a)
    for seg in segments:
        Y = seg.traj.y
        idx = np.unique(np.linspace(0, len(Y) - 1, min(per_segment, len(Y))).astype(int))
        for y in Y[idx]:
            try:
                st, _, _ = charts.blowdown(ChartPoint.from_flat(seg.chart, y), recover_a=False)
            except DomainError:
                continue
            out.append((seg.chart, float(st.u[0] / s), float(st.v[0] / s)))
    return out


def _target_distance(outcome, final, sp, a, k0):
    if outcome == "EXCHANGE":
        target = model.constant_pair(-sp.rho, sp.rho, k0, a)
    elif outcome == "JUMP":
        target = model.constant_pair(sp.rho, 0.0, k0, a)
    else:
        return None
    return model.rms_distance(final, target, a)


def _diagnostics(segments, a, eps, k0, sp):
    drift = 0.0
    env_u = np.zeros(max(k0 - 1, 0))
    env_v = np.zeros(max(k0 - 1, 0))
    n = k0 - 1
    for seg in segments:
        Y = seg.traj.y
        T = max(seg.traj.t_end, 1e-300)
        cons = _conserved(seg.chart, Y, a)
        if cons is not None:
            q_eps, q_a = cons
            d_eps = np.max(np.abs(q_eps - q_eps[0])) / abs(q_eps[0]) if q_eps[0] != 0 else 0.0
            d_a = np.max(np.abs(q_a - q_a[0])) / abs(q_a[0])
            drift = max(drift, d_eps / T, d_a / T)
        else:
            drift = max(drift, float(np.max(np.abs(Y[:, :2] - Y[0, :2]))) / T)
        if n:
            env_u = np.maximum(env_u, np.max(np.abs(Y[:, 4 : 4 + n]), axis=0))
            env_v = np.maximum(env_v, np.max(np.abs(Y[:, 4 + n :]), axis=0))
    return {"drift_max": float(drift), "mode_env_u": env_u.tolist(), "mode_env_v": env_v.tolist(),
            "mode_env_max": float(max(env_u.max(initial=0.0), env_v.max(initial=0.0))),
            "delta": sp.delta, "rho": sp.rho, "beta": sp.beta, "nu": sp.nu, "omega": sp.omega}


def mode_envelope(report: PassageReport, section_params: Optional[SectionParams] = None):
    """Per-mode maxima over the itinerary next to the scaling-chart caps sqrt(C delta^(3/4) / |b_k|)."""
    env_u = np.asarray(report.diagnostics["mode_env_u"])
    env_v = np.asarray(report.diagnostics["mode_env_v"])
    k0 = env_u.size + 1
    d = report.diagnostics["delta"]
    sp = section_params or SectionParams()
    b = np.abs(spectral.b_vector(k0))
    return {"k": list(range(2, k0 + 1)), "u": env_u, "v": env_v,
            "cap_u": np.sqrt(sp.Cu * d**0.75 / b), "cap_v": np.sqrt(sp.Cv * d**0.75 / b)}


def exit_scaling_fit(params: model.ModelParams, eps_list, section_params=None, **kw):
    """Least-squares slope of log|exit_v| against log eps over JUMP passages."""
    if not params.mu > 1:
        raise ConfigError("exit scaling is defined for mu > 1")
    eps_list = sorted(float(e) for e in eps_list)
    if math.log10(eps_list[-1] / eps_list[0]) < 1.5:
        raise ConfigError("eps list must span at least 1.5 decades")
    vals = []
    bad = []
    for e in eps_list:
        rep = passage(params.with_(eps=e), section_params=section_params, **kw)
        if rep.outcome != "JUMP":
            bad.append((e, rep.outcome))
        vals.append(rep.exit_v)
    if bad:
        raise DomainError("passages not ending in JUMP: " + ", ".join(f"eps={e:g}: {o}" for e, o in bad))
    slope = np.polyfit(np.log(eps_list), np.log(np.abs(vals)), 1)[0]
    return float(slope), vals
