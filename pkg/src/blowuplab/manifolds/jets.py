"""Second-order multivariate Taylor jets.

A ``Jet2`` carries a value, gradient and Hessian with respect to a fixed set of
n seed variables and truncates products beyond degree two. Evaluating a vector
field on an object array of jets yields its exact 2-jet at the seed point.
"""
from __future__ import annotations

import numbers

import numpy as np


class Jet2:
    __slots__ = ("val", "grad", "hess")
    __array_ufunc__ = None  # make numpy defer to the reflected operators

    def __init__(self, val, grad, hess):
        self.val = float(val)
        self.grad = grad
        self.hess = hess

    @classmethod
    def constant(cls, val, n):
        return cls(val, np.zeros(n), np.zeros((n, n)))

    @classmethod
    def seed(cls, val, i, n):
        g = np.zeros(n)
        g[i] = 1.0
        return cls(val, g, np.zeros((n, n)))

    # -- helpers
    def _lift(self, other):
        if isinstance(other, Jet2):
            return other
        return Jet2(other, np.zeros_like(self.grad), np.zeros_like(self.hess))

    @staticmethod
    def _elementwise(op, other):
        out = np.empty(other.shape, dtype=object)
        for idx, x in np.ndenumerate(other):
            out[idx] = op(x)
        return out

    # -- arithmetic
    def __add__(self, other):
        if isinstance(other, np.ndarray):
            return self._elementwise(lambda x: self + x, other)
        if isinstance(other, Jet2):
            return Jet2(self.val + other.val, self.grad + other.grad, self.hess + other.hess)
        if isinstance(other, numbers.Real):
            return Jet2(self.val + other, self.grad, self.hess)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.val, -self.grad, -self.hess)

    def __sub__(self, other):
        if isinstance(other, np.ndarray):
            return self._elementwise(lambda x: self - x, other)
        return self + (-other)

    def __rsub__(self, other):
        if isinstance(other, np.ndarray):
            return self._elementwise(lambda x: x - self, other)
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, np.ndarray):
            return self._elementwise(lambda x: self * x, other)
        if isinstance(other, Jet2):
            ga, gb = self.grad, other.grad
            hess = self.val * other.hess + other.val * self.hess + np.outer(ga, gb) + np.outer(gb, ga)
            return Jet2(self.val * other.val, self.val * gb + other.val * ga, hess)
        if isinstance(other, numbers.Real):
            return Jet2(self.val * other, self.grad * other, self.hess * other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, numbers.Real):
            return self * (1.0 / other)
        return self * other**-1

    def __rtruediv__(self, other):
        return other * self**-1

    def __pow__(self, p):
        if not isinstance(p, numbers.Real):
            return NotImplemented
        x = self.val
        if x == 0.0 and (p < 2 or p != int(p)):
            if p == 1:
                return self
            if p == 0:
                return Jet2.constant(1.0, self.grad.size)
            raise ZeroDivisionError("jet power of zero value with exponent < 2")
        f0 = x**p
        f1 = p * x ** (p - 1) if p != 0 else 0.0
        f2 = p * (p - 1) * x ** (p - 2) if p not in (0, 1) else 0.0
        g = self.grad
        return Jet2(f0, f1 * g, f1 * self.hess + f2 * np.outer(g, g))

    def __repr__(self):
        return f"Jet2({self.val!r}, ...)"


def seed_array(z0):
    """Object array of jets seeded on each coordinate of z0."""
    z0 = np.asarray(z0, dtype=float)
    n = z0.size
    out = np.empty(n, dtype=object)
    for i, x in enumerate(z0):
        out[i] = Jet2.seed(x, i, n)
    return out


def jet_of(f, z0):
    """Value, Jacobian and Hessian stack of f at z0.

    Returns ``(f0, J, H)`` with ``H[i]`` the Hessian of component i.
    """
    z0 = np.asarray(z0, dtype=float)
    n = z0.size
    fz = f(seed_array(z0))
    f0 = np.zeros(len(fz))
    J = np.zeros((len(fz), n))
    H = np.zeros((len(fz), n, n))
    for i, comp in enumerate(fz):
        if isinstance(comp, Jet2):
            f0[i], J[i], H[i] = comp.val, comp.grad, comp.hess
        else:
            f0[i] = float(comp)
    return f0, J, H
