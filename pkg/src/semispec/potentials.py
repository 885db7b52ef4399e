"""Closed-form potentials with derivatives of any order.

A :class:`PotentialSpec` wraps an expression in Taylor arithmetic together
with the box half-width ``L`` used by the eigensolver and the energy cap
``a`` below which the sublevel sets are compact.  Radial profiles (used for
the 2-D magnetic problem) use the same class with ``variable="s"`` where
``s = |x|^2``.

:class:`PlanarField` carries polynomial ``V(x, y)`` and vector potential
``a(x, y)`` for the 2-D phase-space quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import brentq, minimize_scalar

from . import taylor as tm
from .errors import ConfigError, HypothesisViolation
from .polycas import JetSymbol
from .taylor import Taylor

__all__ = [
    "PotentialSpec", "PlanarField", "harmonic", "quartic", "cubic",
    "double_well", "polynomial", "gaussian_sum", "zoll", "isospectral_base",
    "radial_polynomial", "radial_field", "from_config", "PRESETS",
]


@dataclass(frozen=True)
class PotentialSpec:
    """Closed-form 1-D potential (or radial profile).

    Parameters
    ----------
    name : str
    expr : callable
        Taylor -> Taylor expression of the potential.
    L : float
        Half-width of the computational box; the domain is ``(-L, L)``
        (``(0, L)`` for radial profiles).
    a : float
        Energy cap.
    params : dict
        Constructor arguments, kept for provenance.
    variable : {"x", "s"}
    """

    name: str
    expr: Callable[[Taylor], Taylor] = field(repr=False)
    L: float
    a: float
    params: dict = field(default_factory=dict)
    variable: str = "x"
    reflected: bool = False

    @property
    def domain(self) -> tuple:
        return (0.0, self.L) if self.variable == "s" else (-self.L, self.L)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.expr(Taylor.variable(x, 0)).c[0]

    def derivatives(self, x, order: int) -> np.ndarray:
        """Array of ``V^(k)(x)`` for k = 0..order, derivative axis first."""
        return self.expr(Taylor.variable(np.asarray(x, dtype=float), order)).derivatives()

    def jets(self, x, order: int) -> dict:
        """Map ``JetSymbol.V(k)`` to arrays of ``V^(k)(x)``."""
        d = self.derivatives(x, order)
        return {JetSymbol.V(k): d[k] for k in range(order + 1)}

    def reflect(self) -> "PotentialSpec":
        """The mirror potential ``x -> V(-x)``."""
        inner = self.expr
        return PotentialSpec(self.name + "(-x)", lambda e: inner(-e), self.L,
                             self.a, dict(self.params), self.variable,
                             not self.reflected)

    def with_cap(self, a: float) -> "PotentialSpec":
        return PotentialSpec(self.name, self.expr, self.L, a, dict(self.params),
                             self.variable, self.reflected)

    def sublevel_intervals(self, lam: float, n_scan: int = 4001,
                           lo: float | None = None, hi: float | None = None) -> list:
        """Maximal intervals of ``{V < lam}`` inside the domain.

        Sign changes are bracketed on a uniform scan and polished by
        ``brentq`` to 1e-14.
        """
        lo = self.domain[0] if lo is None else lo
        hi = self.domain[1] if hi is None else hi
        xs = np.linspace(lo, hi, n_scan)
        g = self(xs) - lam
        below = g < 0
        out = []
        fn = lambda x: float(self(np.array([x]))[0] - lam)
        i = 0
        while i < n_scan:
            if not below[i]:
                i += 1
                continue
            j = i
            while j + 1 < n_scan and below[j + 1]:
                j += 1
            left = xs[i] if i == 0 else brentq(fn, xs[i - 1], xs[i], xtol=1e-14, rtol=1e-15)
            right = xs[j] if j == n_scan - 1 else brentq(fn, xs[j], xs[j + 1], xtol=1e-14, rtol=1e-15)
            out.append((left, right))
            i = j + 1
        return out

    def turning_points(self, lam: float) -> tuple:
        """Endpoints of the single well ``{V < lam}``; raises if not one interval."""
        iv = self.sublevel_intervals(lam)
        if len(iv) != 1:
            raise HypothesisViolation(
                f"{self.name}: sublevel set at {lam} has {len(iv)} components")
        return iv[0]

    def check(self, n: int = 4001) -> None:
        """Sample-check nonnegativity and compactness of ``V^{-1}([0, a])``."""
        lo, hi = self.domain
        xs = np.linspace(lo, hi, n)
        v = self(xs)
        if not np.all(np.isfinite(v)):
            raise ConfigError(f"{self.name}: non-finite values on the domain")
        if np.min(v) < -1e-12:
            raise HypothesisViolation(f"{self.name}: V < 0 on the domain")
        edges = [hi] if self.variable == "s" else [lo, hi]
        for e in edges:
            if self(np.array([e]))[0] <= self.a:
                raise HypothesisViolation(
                    f"{self.name}: V^-1([0, a]) reaches the box edge {e}")

    def describe(self) -> dict:
        return {"name": self.name, "L": self.L, "a": self.a,
                "variable": self.variable, "params": self.params}


def polynomial(coeffs, L: float, a: float, name: str = "polynomial") -> PotentialSpec:
    """``V(x) = sum_k coeffs[k] x^k``."""
    c = [float(v) for v in coeffs]

    def expr(x):
        out = Taylor.constant(0.0, x.order, x.shape)
        for ck in reversed(c):
            out = out * x + ck
        return out

    return PotentialSpec(name, expr, L, a, {"coeffs": c})


def harmonic(L: float = 3.0, a: float = 1.0) -> PotentialSpec:
    return polynomial([0, 0, 0.5], L, a, "harmonic")


def quartic(L: float = 2.0, a: float = 1.0) -> PotentialSpec:
    return polynomial([0, 0, 0.5, 0, 0.25], L, a, "quartic")


def cubic(L: float = 3.0, a: float = 0.8) -> PotentialSpec:
    """Asymmetric well ``x^2 - x^3/5`` (soft side at x > 0)."""
    return polynomial([0, 0, 1.0, -0.2], L, a, "cubic")


def double_well(L: float = 2.5, a: float = 1.0) -> PotentialSpec:
    """Symmetric double well ``(x^2 - 1)^2 / 4`` with barrier 1/4 at 0."""
    return polynomial([0.25, 0, -0.5, 0, 0.25], L, a, "double_well")


def gaussian_sum(amps, centers, widths, quad: float = 0.5, L: float = 3.0,
                 a: float = 1.0) -> PotentialSpec:
    """``quad x^2 + sum_i A_i (1 - exp(-(x - c_i)^2 / (2 w_i^2)))`` shifted to min 0.

    Nonnegative amplitudes keep V bounded below; the constant shift is
    found numerically so that min V = 0.
    """
    amps = [float(v) for v in amps]
    centers = [float(v) for v in centers]
    widths = [float(v) for v in widths]

    def raw(x):
        out = x * x * quad
        for A, c, w in zip(amps, centers, widths):
            d = x - c
            out = out + (1.0 - tm.exp(d * d * (-0.5 / w ** 2))) * A
        return out

    xs = np.linspace(-L, L, 20001)
    vals = raw(Taylor.variable(xs, 0)).c[0]
    i = int(np.argmin(vals))
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, xs.size - 1)]
    res = minimize_scalar(lambda x: raw(Taylor.variable(x, 0)).c[0],
                          bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    shift = float(min(res.fun, vals[i]))
    return PotentialSpec("gaussian_sum", lambda x: raw(x) - shift, L, a,
                         {"amps": amps, "centers": centers, "widths": widths,
                          "quad": quad, "shift": shift})


def zoll(eps: float = 0.1, L: float = 4.0, a: float = 1.0) -> PotentialSpec:
    """Asymmetric well with period 2 pi at every energy.

    Built from inverse branches ``f_1(s) = sqrt(2s) + eps s`` (right) and
    ``f_2(s) = sqrt(2s) - eps s`` (left), whose sum is that of the
    harmonic well ``x^2/2``.  Solving for V gives
    ``V(x) = ((sqrt(2 + 4 eps x) - sqrt 2) / (2 eps))^2``.
    """
    if not (0 < eps < 1 / (2 * L)):
        raise ConfigError("zoll needs 0 < eps < 1/(2L)")
    r2 = np.sqrt(2.0)

    def expr(x):
        u = (tm.sqrt(x * (4 * eps) + 2.0) - r2) / (2 * eps)
        return u * u

    return PotentialSpec("zoll", expr, L, a, {"eps": eps})


def isospectral_base(amp: float = 0.5, cells: int = 4, L: float = 12.0,
                     a: float = 40.0, bits: str | None = None) -> PotentialSpec:
    """``x^2/2`` plus bumps on the asymmetric cells ``(2k+1, 2k+2)``.

    With ``bits`` given, bump k sits on ``-(2k+2, 2k+1)`` instead when
    ``bits[k] == "1"``.  The base (all zeros) is even on every ``[2k, 2k+1]``
    and satisfies ``V(-x) < V(x)`` on ``(2k+1, 2k+2)``.
    """
    bits = bits or "0" * cells
    if len(bits) != cells or set(bits) - {"0", "1"}:
        raise ConfigError("bits must be a 0/1 string with one entry per cell")
    signs = [(-1.0 if b == "1" else 1.0) for b in bits]

    def expr(x):
        out = x * x * 0.5
        for k, sg in enumerate(signs):
            out = out + tm.bump(x * sg - (2 * k + 1)) * amp
        return out

    return PotentialSpec("isospectral", expr, L, a,
                         {"amp": amp, "cells": cells, "bits": bits})


def radial_polynomial(coeffs, L: float = 4.0, a: float = 1.0,
                      name: str = "radial") -> PotentialSpec:
    """Radial profile ``sum_k c_k s^k`` in the variable ``s = |x|^2``."""
    spec = polynomial(coeffs, L, a, name)
    return PotentialSpec(name, spec.expr, L, a, spec.params, "s")


def radial_field(V_coeffs=(0, 0.5, 0.1), B_coeffs=(1.0, 0.5), L: float = 4.0,
                 a: float = 1.0) -> tuple:
    """Pair (V(s), B(s)) of polynomial radial profiles."""
    return (radial_polynomial(V_coeffs, L, a, "V_radial"),
            radial_polynomial(B_coeffs, L, np.inf, "B_radial"))


class PlanarField:
    """Polynomial scalar and vector potentials on the plane.

    ``V`` and ``a = (a1, a2)`` are 2-D coefficient arrays in the
    ``numpy.polynomial.polynomial.polyval2d`` convention (``c[i, j]``
    multiplies ``x^i y^j``).
    """

    def __init__(self, V, a1=None, a2=None, name: str = "planar"):
        self.V = np.atleast_2d(np.asarray(V, dtype=float))
        self.a = [None if c is None else np.atleast_2d(np.asarray(c, dtype=float))
                  for c in (a1, a2)]
        self.name = name

    @property
    def magnetic(self) -> bool:
        return any(c is not None for c in self.a)

    @staticmethod
    def _deriv(c, alpha):
        out = c
        if alpha[0]:
            out = P.polyder(out, alpha[0], axis=0)
        if alpha[1]:
            out = P.polyder(out, alpha[1], axis=1)
        return out

    def jet_value(self, jet: JetSymbol, x, y):
        if jet.target == "V":
            c = self.V
        else:
            c = self.a[jet.comp]
            if c is None:
                return np.zeros(np.broadcast(x, y).shape)
        d = self._deriv(c, jet.alpha)
        return P.polyval2d(x, y, d) * np.ones(np.broadcast(x, y).shape)

    def potential(self, x, y):
        return P.polyval2d(x, y, self.V)

    def vector(self, x, y):
        return [np.zeros(np.broadcast(x, y).shape) if c is None
                else P.polyval2d(x, y, c) for c in self.a]

    def divergence(self, x, y):
        out = 0.0
        for k, c in enumerate(self.a):
            if c is not None:
                alpha = (1, 0) if k == 0 else (0, 1)
                out = out + P.polyval2d(x, y, self._deriv(c, alpha))
        return out

    def field_strength(self, x, y):
        """Scalar magnetic field ``B = d1 a2 - d2 a1``."""
        out = 0.0
        if self.a[1] is not None:
            out = out + P.polyval2d(x, y, self._deriv(self.a[1], (1, 0)))
        if self.a[0] is not None:
            out = out - P.polyval2d(x, y, self._deriv(self.a[0], (0, 1)))
        return out

    @classmethod
    def radial(cls, V_coeffs, h_coeffs=None, name="planar_radial"):
        """``V = sum v_k r^{2k}`` and ``a = h(r^2) (-y, x)`` (Coulomb gauge)."""

        def r2_poly(coeffs):
            deg = 2 * (len(coeffs) - 1)
            out = np.zeros((deg + 1, deg + 1))
            for k, ck in enumerate(coeffs):
                for i in range(k + 1):
                    out[2 * i, 2 * (k - i)] += ck * comb(k, i)
            return out

        V = r2_poly(V_coeffs)
        if h_coeffs is None:
            return cls(V, name=name)
        h = r2_poly(h_coeffs)
        return cls(V, -_shift(h, (0, 1)), _shift(h, (1, 0)), name=name)


def _shift(c, by):
    """Multiply a 2-D coefficient array by ``x^by[0] y^by[1]``."""
    out = np.zeros((c.shape[0] + by[0], c.shape[1] + by[1]))
    out[by[0]:, by[1]:] = c
    return out


PRESETS = {
    "harmonic": harmonic,
    "quartic": quartic,
    "cubic": cubic,
    "double_well": double_well,
    "polynomial": polynomial,
    "gaussian_sum": gaussian_sum,
    "zoll": zoll,
    "isospectral": isospectral_base,
}


def from_config(cfg) -> PotentialSpec:
    """Build a preset from ``"name"`` or ``{"preset": name, **kwargs}``."""
    if isinstance(cfg, str):
        cfg = {"preset": cfg}
    cfg = dict(cfg)
    name = cfg.pop("preset", None)
    if name not in PRESETS:
        raise ConfigError(f"unknown potential preset {name!r}")
    try:
        return PRESETS[name](**cfg)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for preset {name!r}: {exc}") from exc
