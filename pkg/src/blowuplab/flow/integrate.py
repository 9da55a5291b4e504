"""Adaptive integration with dense output and section-event location."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate as _si
from scipy.optimize import brentq

from ..errors import StiffnessError

EVENT_TOL = 1e-10
MAX_STEPS = 200_000

_METHODS = {"RK45": _si.RK45, "DOP853": _si.DOP853, "Radau": _si.Radau, "BDF": _si.BDF}
_IMPLICIT = {"Radau", "BDF"}


@dataclass
class Trajectory:
    """Accepted steps of one run plus piecewise dense output."""

    t: np.ndarray
    y: np.ndarray
    _dense: list = field(default_factory=list, repr=False)

    def __call__(self, tq):
        """Dense output at time(s) ``tq``; a scalar time gives one state vector."""
        scalar = np.ndim(tq) == 0
        tq = np.atleast_1d(np.asarray(tq, dtype=float))
        out = np.empty((tq.size, self.y.shape[1]))
        ends = self.t[1:]
        for m, s in enumerate(tq):
            if s <= self.t[0]:
                out[m] = self.y[0]
                continue
            if s >= self.t[-1]:
                out[m] = self.y[-1]
                continue
            i = int(np.searchsorted(ends, s))
            out[m] = self._dense[i](s)
        return out[0] if scalar else out

    @property
    def t_end(self):
        return float(self.t[-1])

    def truncate(self, t_stop, y_stop):
        """Cut the record at an interior time (used after an event)."""
        i = int(np.searchsorted(self.t, t_stop, side="left"))
        t = np.append(self.t[:i], t_stop)
        y = np.vstack([self.y[:i], y_stop])
        return Trajectory(t, y, self._dense[: i])


def _make_solver(fun, y0, t_end, rtol, atol, method, jac, first_step=None):
    if method not in _METHODS:
        raise ValueError(f"unknown method {method!r}")
    kw = dict(rtol=rtol, atol=atol)
    if first_step is not None:
        kw["first_step"] = first_step
    if method in _IMPLICIT and jac is not None:
        kw["jac"] = jac
    return _METHODS[method](fun, 0.0, np.asarray(y0, dtype=float), t_end, **kw)


def integrate(fun, y0, t_end, rtol=1e-9, atol=1e-12, method="DOP853", jac=None, max_steps=MAX_STEPS,
              observer: Optional[Callable] = None):
    """Integrate ``y' = fun(y)`` from time 0 to ``t_end``.

    Explicit embedded pairs (RK45, DOP853) and the implicit Radau IIA method
    are available; ``jac`` is used by the implicit methods. ``observer`` is
    called after every accepted step as ``observer(t_prev, t, solver)`` and may
    return True to stop early. Raises StiffnessError if the step size
    collapses or the step budget is exhausted.
    """
    f = lambda t, y: fun(y)
    J = None if jac is None else (lambda t, y: jac(y))
    solver = _make_solver(f, y0, t_end, rtol, atol, method, J)
    ts = [0.0]
    ys = [np.array(y0, dtype=float)]
    dense = []
    steps = 0
    while solver.status == "running":
        t_prev = solver.t
        msg = solver.step()
        if solver.status == "failed":
            raise StiffnessError(f"{method} failed at t={solver.t:.6g}: {msg}")
        steps += 1
        if steps > max_steps:
            raise StiffnessError(f"{method} exceeded {max_steps} steps at t={solver.t:.6g} (h={solver.step_size:.3g})")
        if not np.all(np.isfinite(solver.y)):
            raise StiffnessError(f"non-finite state at t={solver.t:.6g}")
        ts.append(solver.t)
        ys.append(solver.y.copy())
        dense.append(solver.dense_output())
        if observer is not None and observer(t_prev, solver.t, solver):
            break
    return Trajectory(np.array(ts), np.array(ys), dense)


# ---------------------------------------------------------------- sections


@dataclass
class Box:
    """Interval constraint ``lo <= fn(y) <= hi`` checked at a section hit."""

    label: str
    fn: Callable
    lo: float = -np.inf
    hi: float = np.inf

    def violation(self, y):
        x = float(self.fn(y))
        if self.lo <= x <= self.hi:
            return None
        return f"{self.label}={x:.6g} outside [{self.lo:.6g}, {self.hi:.6g}]"


@dataclass
class SectionSpec:
    """Zero set of ``condition`` on a chart's flat layout, with box constraints.

    ``direction`` restricts crossings to increasing (+1) or decreasing (-1)
    condition values. Crossings where ``guard`` is False are ignored; a
    guarded crossing that fails a box is reported as a box violation.
    """

    name: str
    chart: str
    condition: Callable
    boxes: Sequence[Box] = ()
    direction: int = 0
    guard: Optional[Callable] = None

    def check_boxes(self, y):
        for b in self.boxes:
            msg = b.violation(y)
            if msg is not None:
                return msg
        return None


@dataclass
class SectionResult:
    status: str  # HIT, MISS or BOX_VIOLATION
    section: Optional[SectionSpec]
    y: np.ndarray
    t: float
    trajectory: Optional[Trajectory] = None
    diagnostic: str = ""

    @property
    def hit(self):
        return self.status == "HIT"


def _crosses(g0, g1, direction):
    if direction > 0:
        return g0 < 0 <= g1
    if direction < 0:
        return g0 > 0 >= g1
    return (g0 < 0 <= g1) or (g0 > 0 >= g1)


def _locate(g, sol, t0, t1):
    """Root of g(sol(t)) on [t0, t1], refined until |g| <= EVENT_TOL when possible."""
    h = lambda t: g(sol(t))
    ga, gb = h(t0), h(t1)
    if ga == 0.0:
        return t0
    if gb == 0.0:
        return t1
    t = brentq(h, t0, t1, xtol=1e-15 * max(1.0, abs(t1)), rtol=4 * np.finfo(float).eps, maxiter=200)
    if abs(h(t)) > EVENT_TOL:
        # fall back to plain bisection on the bracket
        a, b = t0, t1
        for _ in range(200):
            m = 0.5 * (a + b)
            if np.sign(h(m)) == np.sign(ga):
                a = m
            else:
                b = m
            if abs(h(m)) <= EVENT_TOL or b - a <= 1e-16 * max(1.0, abs(b)):
                break
        t = m
    return t


def integrate_to_section(fun, y0, sections, max_time, rtol=1e-9, atol=1e-12, method="DOP853", jac=None,
                         allow_start=True, domain: Optional[Callable] = None, max_steps=MAX_STEPS):
    """Integrate until the first transversal crossing of any of ``sections``.

    ``domain(y)`` may return a message string when the state leaves the
    chart's admissible region; the run then ends with a MISS carrying that
    diagnostic. A section already satisfied at the start counts as a hit at
    time 0 unless ``allow_start`` is False.
    """
    secs = [sections] if isinstance(sections, SectionSpec) else list(sections)
    y0 = np.asarray(y0, dtype=float)
    if allow_start:
        for s in secs:
            if abs(s.condition(y0)) <= EVENT_TOL and (s.guard is None or s.guard(y0)):
                msg = s.check_boxes(y0)
                status = "HIT" if msg is None else "BOX_VIOLATION"
                return SectionResult(status, s, y0.copy(), 0.0, None, msg or "")
    state = {"found": None, "why": ""}
    last_g = [s.condition(y0) for s in secs]

    def observer(t_prev, t, solver):
        y = solver.y
        if domain is not None:
            why = domain(y)
            if why:
                state["why"] = why
                return True
        sol = None
        best = None
        for i, s in enumerate(secs):
            g1 = s.condition(y)
            g0 = last_g[i]
            last_g[i] = g1
            if not _crosses(g0, g1, s.direction):
                continue
            if sol is None:
                sol = solver.dense_output()
            tc = _locate(s.condition, sol, t_prev, t)
            yc = sol(tc)
            if s.guard is not None and not s.guard(yc):
                continue
            if best is None or tc < best[0]:
                best = (tc, yc, s)
        if best is not None:
            state["found"] = best
            return True
        return False

    traj = integrate(fun, y0, max_time, rtol, atol, method, jac, max_steps, observer)
    if state["found"] is not None:
        tc, yc, s = state["found"]
        traj = traj.truncate(tc, yc)
        msg = s.check_boxes(yc)
        status = "HIT" if msg is None else "BOX_VIOLATION"
        return SectionResult(status, s, yc, float(tc), traj, msg or "")
    why = state["why"] or f"no crossing before t={max_time:g}"
    return SectionResult("MISS", None, traj.y[-1].copy(), traj.t_end, traj, why)


def with_clock(fun, jac=None, radial_index=0):
    """Append the original time t, with dt/dtau = r^-3, to a desingularized flat field."""
    def f(z):
        y = z[:-1]
        return np.append(fun(y), y[radial_index] ** -3.0)

    if jac is None:
        return f, None

    def J(z):
        y = z[:-1]
        n = y.size
        out = np.zeros((n + 1, n + 1))
        out[:n, :n] = jac(y)
        out[n, radial_index] = -3.0 * y[radial_index] ** -4.0
        return out

    return f, J
