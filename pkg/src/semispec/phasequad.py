"""Phase-space quadrature: trace invariants, areas, periods, invariant curves.

The classical Hamiltonian is ``xi^2/2 + V`` unless a ``convention="full"``
flag selects ``xi^2 + V``.  Sublevel-set integrals substitute
``x = x_turn -+ u^2`` at each turning point, which turns the square-root
endpoint behaviour into a smooth integrand for Gauss-Legendre.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.optimize import brentq, minimize_scalar

from .errors import ConfigError, ConvergenceError, HypothesisViolation
from .invariants import IntegrandForm
from .polycas import JetSymbol, eval_numeric
from .potentials import PlanarField, PotentialSpec
from .testfunctions import TestFunction

__all__ = [
    "SampledCurve", "gauss_legendre", "nu_quad", "area", "area_curve",
    "period", "period_curve", "invariant_curves", "zoll_defect",
    "sublevel_integral",
]


@dataclass
class SampledCurve:
    """Values on a strictly increasing abscissa grid.

    At least four points, or none at all (the empty curve stands for an
    empty energy range).
    """

    abscissae: np.ndarray
    values: np.ndarray
    meaning: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.abscissae = np.asarray(self.abscissae, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.abscissae.shape != self.values.shape or self.abscissae.ndim != 1:
            raise ConfigError("abscissae and values must be 1-D of equal length")
        if 0 < self.abscissae.size < 4:
            raise ConfigError("a sampled curve needs at least 4 points")
        if np.any(np.diff(self.abscissae) <= 0):
            raise ConfigError("abscissae must be strictly increasing")
        if np.any(np.isnan(self.values)) or np.any(np.isnan(self.abscissae)):
            raise ConfigError("sampled curve contains NaN")

    def __len__(self):
        return self.abscissae.size

    def scaled(self, c: float, meaning: str | None = None) -> "SampledCurve":
        return SampledCurve(self.abscissae, self.values * c,
                            meaning or self.meaning, dict(self.meta))

    def to_csv(self, header=("x", "value")) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for a, v in zip(self.abscissae, self.values):
            w.writerow([repr(float(a)), repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, meaning: str = "") -> "SampledCurve":
        # "#" lines carry provenance metadata
        rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
        try:
            data = np.array([[float(a), float(b)] for a, b in rows[1:]])
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"malformed curve CSV: {exc}") from exc
        if data.ndim != 2 or data.shape[0] == 0:
            raise ConfigError("empty curve CSV")
        return cls(data[:, 0], data[:, 1], meaning)


@lru_cache(maxsize=None)
def _gl(q: int):
    return np.polynomial.legendre.leggauss(q)


def gauss_legendre(a: float, b: float, panels: int = 1, q: int = 16):
    """Composite Gauss-Legendre nodes and weights on [a, b]."""
    x, w = _gl(q)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _check_single_dims(g: IntegrandForm):
    if g.dims != 1:
        raise ConfigError("1-D quadrature needs a dims=1 integrand")


def _max_jet_order(g: IntegrandForm) -> int:
    orders = [j.order for p in g.by_order.values() for j in p.jets()]
    return max(orders, default=0)


def _eval_even(poly, xi, jets):
    """Evaluate the even-xi part of ``poly`` (odd parts integrate to zero)."""
    total = 0.0
    for mono, c in poly.items():
        if mono.xi[0] % 2:
            continue
        cz = complex(c)
        if abs(cz.imag) > 1e-300:
            raise ConfigError("integrand has non-real even-parity coefficients")
        val = cz.real * xi ** mono.xi[0] if mono.xi[0] else cz.real
        for j in mono.jets:
            val = val * jets[j]
        total = total + val
    return total


_CHUNK = 1 << 20  # quadrature nodes evaluated per batch


def _strip_1d(g, V, f, xs, wx, tau, wt, hi_e, lmax, jord):
    vx = V.derivatives(xs, jord)
    jets = {JetSymbol.V(k): vx[k][:, None] for k in range(jord + 1)}
    xmax = np.sqrt(np.maximum(2.0 * (hi_e - vx[0]), 0.0))
    xi = xmax[:, None] * tau[None, :]
    wts = wx[:, None] * xmax[:, None] * wt[None, :] * 2.0
    fd = f.derivatives(0.5 * xi ** 2 + vx[0][:, None], lmax)
    dens = 0.0
    for l, poly in g.by_order.items():
        dens = dens + fd[l] * _eval_even(poly, xi, jets)
    return float(np.sum(wts * dens)), float(np.sum(wts * np.abs(dens)))


def _nu_quad_1d(g, V, f, panels, q):
    lo_e, hi_e = f.support
    lmax = max(g.by_order, default=0)
    jord = _max_jet_order(g)
    total = 0.0
    absum = 0.0
    lo_d, hi_d = V.domain
    for xl, xr in V.sublevel_intervals(hi_e):
        if xl <= lo_d or xr >= hi_d:
            raise ConfigError(f"{V.name}: sublevel set at {hi_e} reaches the box edge")
        xs, wx = gauss_legendre(xl, xr, panels, q)
        # plateau shoulders are only C-infinity, so xi refines together with x
        tau, wt = gauss_legendre(0.0, 1.0, min(panels, 256), q)
        step = max(1, _CHUNK // tau.size)
        for i in range(0, xs.size, step):
            t, a = _strip_1d(g, V, f, xs[i:i + step], wx[i:i + step], tau, wt,
                             hi_e, lmax, jord)
            total += t
            absum += a
    return total, absum


def _nu_quad_planar(g, field_, f, panels, q):
    lo_e, hi_e = f.support
    lmax = max(g.by_order, default=0)
    jord = _max_jet_order(g)
    nphi = 8 * panels
    # the integrand is a trigonometric polynomial in the momentum angle, so a
    # trapezoid rule with more points than its degree is exact
    xideg = max((sum(m.xi) for p in g.by_order.values() for m, _ in p.items()),
                default=0)
    nth = xideg + 3
    phis = 2 * np.pi * np.arange(nphi) / nphi
    ths = 2 * np.pi * np.arange(nth) / nth
    tau, wt = gauss_legendre(0.0, 1.0, panels, q)
    total = 0.0
    absum = 0.0
    all_jets = set()
    for poly in g.by_order.values():
        all_jets |= poly.jets()
    for phi in phis:
        c, s = np.cos(phi), np.sin(phi)
        fn = lambda r: float(field_.potential(r * c, r * s)) - hi_e
        rmax = _bracket_root(fn)
        r = rmax * tau
        wr = rmax * wt * r * (2 * np.pi / nphi)
        x, y = r * c, r * s
        v = field_.potential(x, y)
        a1, a2 = field_.vector(x, y)
        rho_max = np.sqrt(np.maximum(2.0 * (hi_e - v), 0.0))
        # grids: (r, rho, theta)
        rho = rho_max[:, None, None] * tau[None, :, None]
        th = ths[None, None, :]
        eta1 = rho * np.cos(th)
        eta2 = rho * np.sin(th)
        xi1 = eta1 - a1[:, None, None]
        xi2 = eta2 - a2[:, None, None]
        w = (wr[:, None, None] * (rho_max[:, None, None] * wt[None, :, None])
             * rho * (2 * np.pi / nth))
        E = 0.5 * rho ** 2 + v[:, None, None]
        fd = f.derivatives(E, lmax)
        jets = {j: field_.jet_value(j, x, y)[:, None, None] for j in all_jets}
        dens = 0.0
        for l, poly in g.by_order.items():
            val = eval_numeric(poly, [xi1, xi2], 0.0, jets)
            dens = dens + fd[l] * np.real(val)
        dens = np.broadcast_to(dens, rho.shape[:2] + (nth,))
        total += float(np.sum(w * dens))
        absum += float(np.sum(w * np.abs(dens)))
    return total, absum


def _bracket_root(fn, start: float = 0.0, step: float = 0.25, limit: float = 1e3):
    lo = start
    hi = start + step
    while fn(hi) < 0:
        lo, hi = hi, hi + step
        if hi > limit:
            raise ConvergenceError("could not bracket sublevel boundary")
    return brentq(fn, lo, hi, xtol=1e-14)


def _well_bottom(V: PotentialSpec) -> float:
    """Minimum of V, never below the true minimum (it is a value of V)."""
    lo, hi = V.domain
    xs = np.linspace(lo, hi, 4001)
    i = int(np.argmin(V(xs)))
    a, b = xs[max(i - 1, 0)], xs[min(i + 1, xs.size - 1)]
    res = minimize_scalar(lambda x: float(V(np.array([x]))[0]), bounds=(a, b),
                          method="bounded", options={"xatol": 1e-13})
    return min(float(res.fun), float(V(xs[i:i + 1])[0]))


def _shell_densities(g: IntegrandForm, V: PotentialSpec, E: float, jord: int) -> dict:
    """``G_l(E) = int int g_l delta(H - E) dx dxi`` for each f-order l."""
    iv = V.sublevel_intervals(E)
    if len(iv) != 1:
        raise HypothesisViolation(f"energy shell at {E} is not a single well")
    out = dict.fromkeys(g.by_order, 0.0)
    for x0, span, sign in _half_intervals(V, E):
        u, w = gauss_legendre(0.0, np.sqrt(span), 2, 48)
        x = x0 + sign * u * u
        vx = V.derivatives(x, jord)
        jets = {JetSymbol.V(k): vx[k] for k in range(jord + 1)}
        xi = np.sqrt(2.0 * np.maximum(E - vx[0], 1e-300))
        # both momentum signs, each with Jacobian 1/|xi|; dx = 2u du
        wts = w * 2 * u * 2.0 / xi
        for l, poly in g.by_order.items():
            out[l] += float(np.sum(wts * _eval_even(poly, xi, jets)))
    return out


def _nu_shell(g, V, f, tol, max_degree=256):
    lo_e, hi_e = f.support
    lo = max(lo_e, _well_bottom(V))
    if hi_e <= lo:
        return 0.0
    edges = V(np.array(V.domain))
    if np.any(edges <= hi_e):
        raise ConfigError(f"{V.name}: sublevel set at {hi_e} reaches the box edge")
    jord = _max_jet_order(g)
    lmax = max(g.by_order)
    orders = sorted(g.by_order)

    def outer(coeffs, panels):
        E, w = gauss_legendre(lo, hi_e, panels, 16)
        fd = f.derivatives(E, lmax)
        t = (2 * E - lo - hi_e) / (hi_e - lo)
        terms = [fd[l] * C.chebval(t, coeffs[i]) for i, l in enumerate(orders)]
        dens = np.sum(terms, axis=0)
        return float(w @ dens), float(w @ np.abs(dens))

    prev = None
    deg = 32
    while deg <= max_degree:
        t = C.chebpts1(deg)
        E = lo + 0.5 * (t + 1) * (hi_e - lo)
        vals = [_shell_densities(g, V, e, jord) for e in E]
        coeffs = [C.chebfit(t, [v[l] for v in vals], deg - 1) for l in orders]
        panels = 64
        cur, absum = outer(coeffs, panels)
        while True:
            panels *= 2
            nxt, absum = outer(coeffs, panels)
            if abs(nxt - cur) <= 0.1 * tol * max(abs(nxt), 1e-3 * absum, 1e-300):
                cur = nxt
                break
            if panels >= 1 << 14:
                raise ConvergenceError("energy quadrature did not converge")
            cur = nxt
        # shell densities carry ~1e-12 relative noise, which cancellation in
        # int f^(l) G_l amplifies by absum / |value|
        floor = 1e-11 * absum
        if prev is not None and abs(cur - prev) <= tol * max(abs(cur), 1e-3 * absum) + floor:
            return cur
        prev = cur
        deg *= 2
    raise ConvergenceError("shell densities are not resolved by Chebyshev interpolation")


def nu_quad(g: IntegrandForm, V, f: TestFunction, tol: float = 1e-10,
            panels: int | None = None, q: int = 16, max_doublings: int = 8,
            method: str = "auto") -> float:
    """Phase-space integral ``sum_l int f^(l)(H) g_l dx dxi``.

    ``V`` is a :class:`PotentialSpec` (1-D) or a :class:`PlanarField` (2-D,
    magnetic allowed).

    ``method="grid"`` integrates on a tensor grid over the sublevel set of
    ``supp f`` and doubles the panels until successive values agree to
    ``tol``.  ``method="shell"`` (1-D single wells only) first tabulates the
    smooth shell densities ``G_l(E)`` by Chebyshev interpolation and then
    integrates ``f^(l)(E) G_l(E)`` in energy; it is the robust choice for
    test functions with flat plateaus, but needs analytic shell densities.
    ``"auto"`` tries the shell method in 1-D and falls back to the grid.
    """
    if method not in ("auto", "grid", "shell"):
        raise ConfigError(f"unknown method {method!r}")
    if isinstance(V, PlanarField):
        if g.dims != 2:
            raise ConfigError("planar quadrature needs a dims=2 integrand")
        if method == "shell":
            raise ConfigError("shell quadrature is 1-D only")
        kernel = _nu_quad_planar
        panels = panels or 1
    else:
        _check_single_dims(g)
        kernel = _nu_quad_1d
        panels = panels or 4
    if g.is_zero():
        return 0.0
    if kernel is _nu_quad_1d and method != "grid":
        try:
            return _nu_shell(g, V, f, tol)
        except (HypothesisViolation, ConvergenceError):
            # multi-well shells or non-analytic potentials: fall back to the grid
            if method == "shell":
                raise
    prev, _ = kernel(g, V, f, panels, q)
    for _ in range(max_doublings):
        panels *= 2
        cur, absum = kernel(g, V, f, panels, q)
        change = abs(cur - prev)
        if change <= tol * max(abs(cur), 1e-3 * absum, 1e-300):
            return cur
        prev = cur
    raise ConvergenceError(f"nu_quad did not converge: last change {change:.3e}")


# -- sublevel-set integrals ------------------------------------------------

def _half_intervals(V: PotentialSpec, lam: float):
    """Yield (x0, span, sign) pieces; ``x = x0 + sign * u^2`` for u in [0, sqrt(span)]."""
    lo_d, hi_d = V.domain
    for xl, xr in V.sublevel_intervals(lam):
        if xl <= lo_d or xr >= hi_d:
            raise ConfigError(f"{V.name}: sublevel set at {lam} reaches the box edge")
        mid = 0.5 * (xl + xr)
        yield xl, mid - xl, 1.0
        yield xr, xr - mid, -1.0


def sublevel_integral(V: PotentialSpec, lam: float, weight, q: int = 48,
                      panels: int = 2) -> float:
    """``int_{V < lam} weight(x, lam - V(x), V-jets) dx`` with endpoint substitution.

    ``weight(x, gap, d)`` receives the points, ``lam - V`` and the array of
    derivatives ``d[k] = V^(k)(x)`` (k <= 1).
    """
    total = 0.0
    for x0, span, sign in _half_intervals(V, lam):
        u, w = gauss_legendre(0.0, np.sqrt(span), panels, q)
        x = x0 + sign * u * u
        d = V.derivatives(x, 1)
        gap = np.maximum(lam - d[0], 0.0)
        total += float(np.sum(w * 2 * u * weight(x, gap, d)))
    return total


def _check_cap(V: PotentialSpec, lam: float):
    if not (lam < V.a):
        raise ConfigError(f"lambda={lam} is not below the energy cap {V.a}")


def area(V: PotentialSpec, lam: float, convention: str = "half") -> float:
    """Area of ``{H < lam}``; ``convention`` is "half" (xi^2/2+V) or "full" (xi^2+V)."""
    _check_cap(V, lam)
    if lam <= 0:
        return 0.0
    c = _momentum_factor(convention)
    return sublevel_integral(V, lam, lambda x, gap, d: 2.0 * np.sqrt(c * gap))


def _momentum_factor(convention: str) -> float:
    if convention == "half":
        return 2.0
    if convention == "full":
        return 1.0
    raise ConfigError(f"unknown convention {convention!r}")


def area_curve(V: PotentialSpec, grid, convention: str = "half") -> SampledCurve:
    grid = np.asarray(grid, dtype=float)
    vals = np.array([area(V, l, convention) for l in grid])
    return SampledCurve(grid, vals, f"area[{convention}]", {"potential": V.describe()})


def period(V: PotentialSpec, lam: float) -> float:
    """Orbit period ``2 int dx / sqrt(2 (lam - V))`` for ``xi^2/2 + V``."""
    _check_cap(V, lam)
    if lam <= 0:
        raise ConfigError("period needs lambda > 0")
    iv = V.sublevel_intervals(lam)
    if len(iv) != 1:
        raise HypothesisViolation(f"period needs a single well, got {len(iv)} components")
    total = 0.0
    for x0, span, sign in _half_intervals(V, lam):
        u, w = gauss_legendre(0.0, np.sqrt(span), 2, 48)
        x = x0 + sign * u * u
        # gap ~ |V'| u^2 near the turning point, so the ratio stays bounded
        gap = lam - V(x)
        total += float(np.sum(w * 2 * u / np.sqrt(2 * gap)))
    return 2.0 * total


def period_curve(V: PotentialSpec, grid) -> SampledCurve:
    grid = np.asarray(grid, dtype=float)
    return SampledCurve(grid, np.array([period(V, l) for l in grid]), "period")


def _radial_level(V: PotentialSpec, lam: float) -> float:
    lo, hi = V.domain
    fn = lambda s: float(V(np.array([s]))[0] - lam)
    if fn(hi) <= 0:
        raise ConfigError(f"radial profile stays below {lam} on its domain")
    return brentq(fn, lo, hi, xtol=1e-14, rtol=1e-15)


def _radial_curve(V: PotentialSpec, lam: float, H=None, q: int = 48) -> float:
    if lam <= 0:
        return 0.0
    smax = _radial_level(V, lam)
    s, w = gauss_legendre(0.0, smax, 2, q)
    d = V.derivatives(s, 2)
    integrand = lam - d[0]
    if H is not None:
        integrand = integrand * H(s, d)
    return float(np.pi ** 2 * np.sum(w * integrand))


def invariant_curves(V: PotentialSpec, grid, which: str, B: PotentialSpec | None = None,
                     convention: str | None = None) -> SampledCurve:
    """Tabulate one of the spectrally determined curves.

    ``which`` is one of ``"area"``, ``"gradientsq"`` (1-D, default
    convention ``xi^2/2 + V``), ``"magnetic_I"`` or ``"magnetic_II"``
    (radial 2-D, default convention ``xi^2 + V``; ``V`` and ``B`` are
    profiles in ``s = |x|^2``).  For the magnetic curves the "half"
    convention doubles the momentum-disc area.
    """
    grid = np.asarray(grid, dtype=float)
    if which in ("area", "gradientsq"):
        convention = convention or "half"
        if V.variable != "x":
            raise ConfigError("area/gradientsq need a 1-D potential")
        c = _momentum_factor(convention)
        if which == "area":
            vals = [area(V, l, convention) for l in grid]
        else:
            vals = []
            for l in grid:
                _check_cap(V, l)
                vals.append(0.0 if l <= 0 else sublevel_integral(
                    V, l, lambda x, gap, d: d[1] ** 2 * 2.0 * np.sqrt(c * gap)))
        return SampledCurve(grid, np.array(vals), f"{which}[{convention}]",
                            {"potential": V.describe()})
    if which in ("magnetic_I", "magnetic_II"):
        convention = convention or "full"
        scale = {"full": 1.0, "half": 2.0}.get(convention)
        if scale is None:
            raise ConfigError(f"unknown convention {convention!r}")
        if V.variable != "s":
            raise ConfigError("magnetic curves need a radial profile in s")
        _check_mono_radial(V, grid)
        H = None
        if which == "magnetic_II":
            if B is None:
                raise ConfigError("magnetic_II needs a B profile")
            H = lambda s, d: B(s) ** 2 - 4 * s * d[2] - 2 * d[1]
        vals = np.array([_radial_curve(V, l, H) for l in grid]) * scale
        return SampledCurve(grid, vals, f"{which}[{convention}]",
                            {"potential": V.describe()})
    raise ConfigError(f"unknown invariant curve {which!r}")


def _check_mono_radial(V: PotentialSpec, grid):
    top = float(np.max(grid))
    if top <= 0:
        return
    smax = _radial_level(V, top)
    s = np.linspace(0, smax, 2001)
    if np.any(V.derivatives(s, 1)[1][1:] <= 0):
        raise HypothesisViolation("radial profile is not increasing (not a well)")


def zoll_defect(V: PotentialSpec, lambda_grid) -> float:
    """``max |T(lam) - 2 pi|`` over the grid."""
    return float(max(abs(period(V, l) - 2 * np.pi) for l in lambda_grid))
