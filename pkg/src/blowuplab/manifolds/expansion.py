"""Quadratic graph parametrizations of center/slow manifolds."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass
class ManifoldExpansion:
    """Graph ``z_graph = base_graph + lin @ x + 0.5 * x^T quad x`` over center deviations x.

    ``base`` is the full flat expansion point in the chart's layout; ``center_idx``
    and ``graph_idx`` locate the center and graph variables in that layout.
    """

    chart: str
    base: np.ndarray
    center_vars: list
    graph_vars: list
    center_idx: list
    graph_idx: list
    lin: np.ndarray
    quad: np.ndarray
    k0: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.base = np.asarray(self.base, dtype=float)
        self.lin = np.asarray(self.lin, dtype=float)
        self.quad = np.asarray(self.quad, dtype=float)
        ng, nc = len(self.graph_vars), len(self.center_vars)
        if self.lin.shape != (ng, nc) or self.quad.shape != (ng, nc, nc):
            raise ValueError("coefficient array shapes do not match variable lists")
        # store a symmetric quadratic form
        self.quad = 0.5 * (self.quad + self.quad.transpose(0, 2, 1))

    # -- evaluation
    def graph(self, x):
        x = np.asarray(x, dtype=float)
        return self.lin @ x + 0.5 * np.einsum("gij,i,j->g", self.quad, x, x)

    def graph_jacobian(self, x):
        return self.lin + self.quad @ np.asarray(x, dtype=float)

    def full_point(self, x):
        y = self.base.copy()
        y[self.center_idx] += x
        y[self.graph_idx] += self.graph(x)
        return y

    # -- monomial view
    @property
    def coeffs(self):
        """Map (graph_var, monomial) -> value; monomial is a tuple of (var, power)."""
        out = {}
        cv = self.center_vars
        for g, name in enumerate(self.graph_vars):
            for i, vi in enumerate(cv):
                if self.lin[g, i] != 0.0:
                    out[(name, ((vi, 1),))] = float(self.lin[g, i])
            for i, vi in enumerate(cv):
                if self.quad[g, i, i] != 0.0:
                    out[(name, ((vi, 2),))] = float(0.5 * self.quad[g, i, i])
                for j in range(i + 1, len(cv)):
                    if self.quad[g, i, j] != 0.0:
                        out[(name, ((vi, 1), (cv[j], 1)))] = float(self.quad[g, i, j])
        return out

    def coef(self, graph_var, *vars_):
        """Coefficient of the monomial given as variable names (repeat for powers)."""
        g = self.graph_vars.index(graph_var)
        idx = [self.center_vars.index(v) for v in vars_]
        if len(idx) == 1:
            return float(self.lin[g, idx[0]])
        i, j = idx
        return float(0.5 * self.quad[g, i, i]) if i == j else float(self.quad[g, i, j])

    def set_coef(self, graph_var, *vars_, value):
        g = self.graph_vars.index(graph_var)
        idx = [self.center_vars.index(v) for v in vars_]
        if len(idx) == 1:
            self.lin[g, idx[0]] = value
        else:
            i, j = idx
            if i == j:
                self.quad[g, i, i] = 2.0 * value
            else:
                self.quad[g, i, j] = self.quad[g, j, i] = value

    def copy(self):
        return ManifoldExpansion(
            self.chart, self.base.copy(), list(self.center_vars), list(self.graph_vars), list(self.center_idx),
            list(self.graph_idx), self.lin.copy(), self.quad.copy(), self.k0, dict(self.meta),
        )

    # -- serialization
    def to_json(self):
        coeffs = [
            {"graph_var": g, "monomial": [[v, p] for v, p in mono], "value": val}
            for (g, mono), val in sorted(self.coeffs.items())
        ]
        base = {"values": [float(x) for x in self.base], "center_idx": list(map(int, self.center_idx)),
                "graph_idx": list(map(int, self.graph_idx))}
        rec = {"chart": self.chart, "base_point": base, "k0": self.k0, "center_vars": self.center_vars,
               "graph_vars": self.graph_vars, "meta": self.meta, "coeffs": coeffs}
        return json.dumps(rec, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        cv, gv = d["center_vars"], d["graph_vars"]
        exp = cls(d["chart"], d["base_point"]["values"], cv, gv, d["base_point"]["center_idx"],
                  d["base_point"]["graph_idx"], np.zeros((len(gv), len(cv))), np.zeros((len(gv), len(cv), len(cv))),
                  d["k0"], d.get("meta", {}))
        for c in d["coeffs"]:
            names = [v for v, p in c["monomial"] for _ in range(p)]
            exp.set_coef(c["graph_var"], *names, value=c["value"])
        return exp


def compare(e1, e2, floor=1e-11):
    """Largest relative coefficient deviation between two expansions.

    Pairs where both sides are below ``floor`` times the largest coefficient
    magnitude count as numerical zeros and are skipped.
    """
    if e1.center_vars != e2.center_vars or e1.graph_vars != e2.graph_vars:
        raise ValueError("expansions use different variables")
    a = np.concatenate([e1.lin.ravel(), e1.quad.ravel()])
    b = np.concatenate([e2.lin.ravel(), e2.quad.ravel()])
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300)
    den = np.maximum(np.abs(a), np.abs(b))
    live = den >= floor * scale
    if not np.any(live):
        return 0.0
    return float(np.max(np.abs(a - b)[live] / den[live]))
