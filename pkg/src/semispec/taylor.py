"""Forward Taylor-mode arithmetic on numpy arrays.

A :class:`Taylor` holds normalized coefficients ``c[k] = u^(k)(x0) / k!`` of
a function of one variable at every point of an array.  Arithmetic and the
elementary functions below propagate all coefficients exactly up to
roundoff, so derivatives of order 12 and beyond come out as cheaply as
values.

>>> x = Taylor.variable(np.array([0.5]), order=3)
>>> exp(-x * x).derivatives()[:, 0].round(6)
array([ 0.778801, -0.778801, -0.778801,  3.894004])
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["Taylor", "exp", "log", "sqrt", "power", "smooth_step", "bump", "where",
           "factorials"]


def factorials(order: int) -> np.ndarray:
    return np.array([math.factorial(k) for k in range(order + 1)], dtype=float)


class Taylor:
    """Truncated Taylor series, coefficient axis first."""

    __array_priority__ = 100

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs, dtype=float)

    @classmethod
    def variable(cls, x, order: int) -> "Taylor":
        x = np.asarray(x, dtype=float)
        c = np.zeros((order + 1,) + x.shape)
        c[0] = x
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, value, order: int, shape=()) -> "Taylor":
        c = np.zeros((order + 1,) + tuple(shape))
        c[0] = value
        return cls(c)

    @property
    def order(self) -> int:
        return self.c.shape[0] - 1

    @property
    def shape(self):
        return self.c.shape[1:]

    @property
    def value(self) -> np.ndarray:
        return self.c[0]

    def derivatives(self) -> np.ndarray:
        """Return ``u^(k)`` for k = 0..order (coefficient axis first)."""
        fac = factorials(self.order).reshape((-1,) + (1,) * (self.c.ndim - 1))
        return self.c * fac

    def __add__(self, other):
        if isinstance(other, Taylor):
            return Taylor(self.c + other.c)
        c = self.c.copy()
        c[0] = c[0] + other
        return Taylor(c)

    __radd__ = __add__

    def __neg__(self):
        return Taylor(-self.c)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Taylor):
            return Taylor(self.c * other)
        a, b = np.broadcast_arrays(self.c, other.c)
        out = np.zeros(a.shape)
        for k in range(a.shape[0]):
            out[k] = np.einsum("j...,j...->...", a[:k + 1], b[k::-1])
        return Taylor(out)

    __rmul__ = __mul__

    def reciprocal(self) -> "Taylor":
        a = self.c
        r = np.zeros_like(a)
        r[0] = 1.0 / a[0]
        for k in range(1, a.shape[0]):
            r[k] = -r[0] * np.einsum("j...,j...->...", a[1:k + 1], r[k - 1::-1])
        return Taylor(r)

    def __truediv__(self, other):
        if isinstance(other, Taylor):
            return self * other.reciprocal()
        return Taylor(self.c / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, n):
        if isinstance(n, int) and n >= 0:
            out = Taylor.constant(1.0, self.order, self.shape)
            base = self
            while n:
                if n & 1:
                    out = out * base
                base = base * base
                n >>= 1
            return out
        return power(self, n)


def exp(u: Taylor) -> Taylor:
    a = u.c
    e = np.zeros_like(a)
    e[0] = np.exp(a[0])
    for k in range(1, a.shape[0]):
        j = np.arange(1, k + 1).reshape((-1,) + (1,) * (a.ndim - 1))
        e[k] = np.sum(j * a[1:k + 1] * e[k - 1::-1], axis=0) / k
    return Taylor(e)


def log(u: Taylor) -> Taylor:
    a = u.c
    out = np.zeros_like(a)
    out[0] = np.log(a[0])
    for k in range(1, a.shape[0]):
        acc = a[k].copy()
        for j in range(1, k):
            acc -= j * out[j] * a[k - j] / k
        out[k] = acc / a[0]
    return Taylor(out)


def power(u: Taylor, r: float) -> Taylor:
    """``u**r`` for real r; requires u > 0 at every point."""
    a = u.c
    y = np.zeros_like(a)
    y[0] = a[0] ** r
    for k in range(1, a.shape[0]):
        acc = np.zeros_like(a[0])
        for j in range(1, k + 1):
            acc += ((r + 1) * j - k) * a[j] * y[k - j]
        y[k] = acc / (k * a[0])
    return Taylor(y)


def sqrt(u: Taylor) -> Taylor:
    return power(u, 0.5)


def where(mask, u: Taylor, v: Taylor) -> Taylor:
    return Taylor(np.where(mask, u.c, v.c))


# exp(-1/u) and its first dozens of derivatives are below 1e-200 for
# u < 1/600, while the Taylor coefficients of 1/u would overflow near 0.
_FLAT = 1.0 / 600


def smooth_step(u: Taylor) -> Taylor:
    """C-infinity step: 0 for u <= 0, 1 for u >= 1, built from exp(-1/u)."""
    out = np.zeros_like(u.c)
    x = u.c[0]
    out[0][x >= 1 - _FLAT] = 1.0
    inside = (x > _FLAT) & (x < 1 - _FLAT)
    if np.any(inside):
        sub = Taylor(u.c[:, inside])
        left = exp(-sub.reciprocal())
        right = exp(-(1.0 - sub).reciprocal())
        out[:, inside] = (left / (left + right)).c
    return Taylor(out)


def bump(u: Taylor) -> Taylor:
    """C-infinity bump on (0, 1) with peak value 1 at u = 1/2."""
    out = np.zeros_like(u.c)
    inside = (u.c[0] > _FLAT) & (u.c[0] < 1 - _FLAT)
    if np.any(inside):
        sub = Taylor(u.c[:, inside])
        out[:, inside] = (exp(-(sub * (1.0 - sub)).reciprocal()) * np.exp(4.0)).c
    return Taylor(out)
