"""Smooth compactly supported test functions with high-order derivatives.

Every function is an expression in Taylor arithmetic, so ``derivatives``
returns f, f', ..., f^(order) at once with roundoff-level accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import taylor as tm
from .taylor import Taylor

__all__ = ["TestFunction", "plateau", "weighted_plateau", "exponential_weight",
           "fd_check", "from_config"]


@dataclass(frozen=True)
class TestFunction:
    """A C-infinity function of energy supported in ``support``.

    Parameters
    ----------
    expr : callable
        Maps a :class:`~semispec.taylor.Taylor` energy variable to a Taylor
        value.  Must vanish identically outside ``support``.
    support : (float, float)
        Closed interval containing the support.
    label : str
        Human-readable description, echoed into CLI metadata.
    """

    __test__ = False  # keep pytest from collecting this class

    expr: Callable[[Taylor], Taylor]
    support: tuple
    label: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, E):
        return self.derivatives(E, 0)[0]

    def derivatives(self, E, order: int) -> np.ndarray:
        E = np.asarray(E, dtype=float)
        return self.expr(Taylor.variable(E, order)).derivatives()

    def __add__(self, other: "TestFunction") -> "TestFunction":
        lo = min(self.support[0], other.support[0])
        hi = max(self.support[1], other.support[1])
        return TestFunction(lambda e: self.expr(e) + other.expr(e), (lo, hi),
                            f"({self.label})+({other.label})")

    def scale(self, c: float) -> "TestFunction":
        return TestFunction(lambda e: self.expr(e) * c, self.support,
                            f"{c}*({self.label})")


def plateau(lo: float, hi: float, ramp: float) -> TestFunction:
    """Smooth indicator: 1 on [lo, hi], supported on [lo - ramp, hi + ramp].

    Both shoulders are ``exp(-1/u)`` steps of width ``ramp``.
    """
    if not (hi >= lo and ramp > 0):
        raise ValueError("need hi >= lo and ramp > 0")

    def expr(e):
        return (tm.smooth_step((e - lo + ramp) / ramp)
                * tm.smooth_step((hi + ramp - e) / ramp))

    return TestFunction(expr, (lo - ramp, hi + ramp), f"plateau[{lo},{hi};{ramp}]",
                        {"kind": "plateau", "lo": lo, "hi": hi, "ramp": ramp})


def weighted_plateau(lo, hi, ramp, poly=(1.0,), rate=0.0, shift=None):
    """Plateau times ``poly(E) * exp(-rate E) / (1 + (E - shift)^2)``.

    ``shift=None`` drops the rational factor.
    """
    base = plateau(lo, hi, ramp)
    poly = tuple(float(c) for c in poly)

    def expr(e):
        p = Taylor.constant(0.0, e.order, e.shape)
        for c in reversed(poly):
            p = p * e + c
        out = base.expr(e) * p
        if rate:
            out = out * tm.exp(e * (-rate))
        if shift is not None:
            d = e - shift
            out = out / (d * d + 1.0)
        return out

    return TestFunction(expr, base.support,
                        f"{base.label}*poly{poly}*exp(-{rate}E)"
                        + ("" if shift is None else f"/(1+(E-{shift})^2)"),
                        {"kind": "weighted_plateau", "lo": lo, "hi": hi,
                         "ramp": ramp, "poly": list(poly), "rate": rate,
                         "shift": shift})


def exponential_weight(beta: float, poly=(1.0,), floor: float = 1e-26,
                       lo: float = -1.0) -> TestFunction:
    """Analytic weight ``poly(E) exp(-beta E)`` truncated where it drops below ``floor``.

    The truncation point is ``E_top = log(1/floor) / beta`` (plus a margin
    for the polynomial), so its effect on any quadrature is at the level
    of ``floor``.  Entire integrands let Gauss-Legendre converge
    exponentially, which the phase-space oracles rely on.
    """
    poly = tuple(float(c) for c in poly)
    top = (np.log(1.0 / floor) + np.log(1.0 + sum(abs(c) for c in poly)) * 2) / beta

    def expr(e):
        p = Taylor.constant(0.0, e.order, e.shape)
        for c in reversed(poly):
            p = p * e + c
        return p * tm.exp(e * (-beta))

    return TestFunction(expr, (lo, float(top)), f"poly{poly}*exp(-{beta}E)",
                        {"kind": "exponential_weight", "beta": beta,
                         "poly": list(poly), "floor": floor})


def fd_check(f: TestFunction, points, order: int = 3, h: float = 1e-4) -> float:
    """Worst relative mismatch between Taylor and central-difference derivatives.

    Compares ``f^(k+1)`` with the centered difference of ``f^(k)``.
    """
    pts = np.asarray(points, dtype=float)
    d0 = f.derivatives(pts, order + 1)
    dp = f.derivatives(pts + h, order)
    dm = f.derivatives(pts - h, order)
    fd = (dp - dm) / (2 * h)
    exact = d0[1:order + 1]
    scale = np.maximum(np.abs(exact), np.max(np.abs(exact), axis=1, keepdims=True))
    scale = np.where(scale > 0, scale, 1.0)
    return float(np.max(np.abs(fd - exact) / scale))


_KINDS = {"plateau": plateau, "weighted_plateau": weighted_plateau,
          "exponential_weight": exponential_weight}


def from_config(cfg: dict) -> TestFunction:
    """Build ``{"kind": name, **kwargs}`` with kind one of plateau,
    weighted_plateau or exponential_weight."""
    from .errors import ConfigError

    cfg = dict(cfg)
    kind = cfg.pop("kind", None)
    if kind not in _KINDS:
        raise ConfigError(f"unknown test function kind {kind!r}")
    try:
        return _KINDS[kind](**cfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad parameters for {kind!r}: {exc}") from exc
