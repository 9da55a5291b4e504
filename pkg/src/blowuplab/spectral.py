"""Neumann cosine eigenbasis on [-a, a] and the Galerkin coupling table.

Modes are indexed from 1. Mode 1 is the constant 1/sqrt(2a), mode k >= 2 is
cos(pi (k-1) (x+a) / (2a)) / sqrt(a). Products of two cosines project onto a
third with weight 1/2 per resonance, which gives the coupling coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import simpson

from .errors import DomainError

KMAX_CAP = 128
QUAD_POINTS = 2048


def _check_mode(k, lowest=1):
    if int(k) != k or k < lowest:
        raise DomainError(f"mode index must be an integer >= {lowest}, got {k}")


def _check_a(a):
    if not a > 0:
        raise DomainError(f"half-length a must be positive, got {a}")


def eigenvalue(k, a):
    """Neumann Laplacian eigenvalue -(pi (k-1) / (2a))**2."""
    _check_mode(k)
    _check_a(a)
    return -(np.pi * (k - 1) / (2.0 * a)) ** 2


def b_coefficient(k):
    """a-independent factor b_k = -pi^2 (k-1)^2 2^(-3/2) of the scaled eigenvalue."""
    _check_mode(k)
    return -np.pi**2 * (k - 1) ** 2 * 2.0**-1.5


def b_vector(k0):
    """Array (b_2, ..., b_k0); empty for k0 = 1."""
    m = np.arange(1, k0, dtype=float)
    return -np.pi**2 * m**2 * 2.0**-1.5


def scaled_eigenvalue(k, a):
    """Eigenvalue after the time change, b_k a^(-3/2) = sqrt(2a) * eigenvalue(k, a)."""
    _check_a(a)
    return b_coefficient(k) * a**-1.5


def inverse_b_sum(kmax):
    """Partial sum of 1/|b_k| over 2 <= k <= kmax."""
    b = b_vector(kmax)
    return float(np.sum(1.0 / np.abs(b))) if b.size else 0.0


def inverse_b_tail(kmax):
    """Integral bound for the tail of sum 1/|b_k| beyond kmax."""
    return 2.0**1.5 / (np.pi**2 * (kmax - 1))


def eigenfunction(k, a, x):
    """Value of the k-th normalized eigenfunction at x (scalar or array)."""
    _check_mode(k)
    _check_a(a)
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > a * (1 + 1e-12)):
        raise DomainError("x outside [-a, a]")
    if k == 1:
        out = np.full_like(x, 1.0 / np.sqrt(2.0 * a))
    else:
        out = np.cos(np.pi * (k - 1) * (x + a) / (2.0 * a)) / np.sqrt(a)
    return out if out.ndim else float(out)


def eigenfunction_derivative(k, a, x):
    """Exact x-derivative of eigenfunction; vanishes at x = +-a."""
    _check_mode(k)
    x = np.asarray(x, dtype=float)
    if k == 1:
        return np.zeros_like(x) if x.ndim else 0.0
    w = np.pi * (k - 1) / (2.0 * a)
    out = -w * np.sin(w * (x + a)) / np.sqrt(a)
    return out if out.ndim else float(out)


def alpha(i, j, k):
    """Coupling coefficient: sqrt(a) <e_i e_j, e_k> for modes i, j, k >= 2.

    Each of the resonances i + j - k = 1 and k - |i - j| = 1 contributes 1/2.
    """
    for n in (i, j, k):
        _check_mode(n, lowest=2)
    val = 0.0
    if i + j - k == 1:
        val += 0.5
    if k - abs(i - j) == 1:
        val += 0.5
    return val


def triple_product(i, j, k, a):
    """L2 inner product <e_i e_j, e_k> on [-a, a] for any modes >= 1."""
    for n in (i, j, k):
        _check_mode(n)
    _check_a(a)
    idx = sorted((i, j, k))
    if idx[0] == 1:
        # multiplying by the constant mode just rescales
        return 1.0 / np.sqrt(2.0 * a) if idx[1] == idx[2] else 0.0
    return alpha(i, j, k) / np.sqrt(a)


def quadrature_grid(a, n=QUAD_POINTS):
    return np.linspace(-a, a, n + 1)


def inner(f_vals, g_vals, x):
    """Composite Simpson approximation of the L2 inner product on the grid x."""
    return float(simpson(np.asarray(f_vals) * np.asarray(g_vals), x=x))


def alpha_by_quadrature(i, j, k, a=1.0, n=QUAD_POINTS):
    """Cross-check of alpha through sqrt(a) <e_i e_j, e_k> by quadrature."""
    x = quadrature_grid(a, n)
    prod = eigenfunction(i, a, x) * eigenfunction(j, a, x)
    return np.sqrt(a) * inner(prod, eigenfunction(k, a, x), x)


@dataclass
class ProjectionResult:
    value: float
    resolved: bool


def project(f_vals, k, a, x=None):
    """Coefficient <f, e_k> of samples f on a uniform grid over [-a, a].

    The flag ``resolved`` is False when the grid has fewer than 8 points per
    oscillation of mode k.
    """
    f_vals = np.asarray(f_vals, dtype=float)
    if x is None:
        x = np.linspace(-a, a, f_vals.size)
    # mode k has (k-1)/2 periods on the interval
    periods = max((k - 1) / 2.0, 1.0)
    resolved = (f_vals.size - 1) >= 8 * periods
    return ProjectionResult(inner(f_vals, eigenfunction(k, a, x), x), bool(resolved))


def synthesize(coeffs, a, x):
    """Evaluate sum_k c_k e_k(x)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for k, c in enumerate(coeffs, start=1):
        if c != 0.0:
            out = out + c * eigenfunction(k, a, x)
    return out if out.ndim else float(out)


@dataclass
class Basis:
    """Eigenbasis on [-a, a] with cached eigenvalues up to kmax."""

    a: float
    kmax: int = 16

    def __post_init__(self):
        _check_a(self.a)
        if self.kmax > KMAX_CAP:
            raise DomainError(f"kmax capped at {KMAX_CAP}")
        self.eigenvalues = np.array([eigenvalue(k, self.a) for k in range(1, self.kmax + 1)])
        self.scaled = np.sqrt(2.0 * self.a) * self.eigenvalues

    def __call__(self, k, x):
        return eigenfunction(k, self.a, x)

    def gram(self, n=QUAD_POINTS):
        x = quadrature_grid(self.a, n)
        E = np.array([eigenfunction(k, self.a, x) for k in range(1, self.kmax + 1)])
        return np.array([[inner(E[i], E[j], x) for j in range(self.kmax)] for i in range(self.kmax)])


@dataclass
class CouplingTable:
    """Dense table alpha[k-2, i-2, j-2] for 2 <= i, j, k <= kmax, filled lazily."""

    kmax: int
    _table: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kmax > KMAX_CAP:
            raise DomainError(f"kmax capped at {KMAX_CAP}")

    @property
    def alpha(self):
        if self._table is None:
            self._table = _alpha_table(self.kmax)
        return self._table

    def __getitem__(self, ijk):
        i, j, k = ijk
        return self.alpha[k - 2, i - 2, j - 2]


@lru_cache(maxsize=None)
def _alpha_table(kmax):
    n = max(kmax - 1, 0)
    m = np.arange(2, kmax + 1)
    I, J = np.meshgrid(m, m, indexing="ij")
    table = np.zeros((n, n, n))
    for kk, k in enumerate(m):
        table[kk] = 0.5 * (I + J - k == 1) + 0.5 * (k - np.abs(I - J) == 1)
    table.setflags(write=False)
    return table


def coupling_matrix(k0):
    """Alpha table flattened to shape (k0-1, (k0-1)**2) for the quadratic term."""
    n = max(k0 - 1, 0)
    return _alpha_table(k0).reshape(n, n * n)
