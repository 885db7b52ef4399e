"""Abel fractional integration and inverse spectral reconstructions.

Curves such as the area ``A(lam)`` behave like powers of ``sqrt(lam)`` at
the bottom of a well, so every curve here is interpolated in ``u = sqrt(lam)``
where it is smooth.  The fractional integral

    (J^a g)(lam) = 1/Gamma(a) int_0^lam (lam - t)^(a-1) g(t) dt

is evaluated by product integration on that interpolant: the last panel, which carries the
kernel singularity, uses Gauss-Jacobi nodes exact for ``(lam - t)^(a-1)``
times polynomials, the others Gauss-Legendre.

Reconstruction conventions: the single-well curves are

    A(lam) = int_{H < lam} dx dxi,   G(lam) = int_{H < lam} V'(x)^2 dx dxi,

with ``H = xi^2/2 + V`` ("half") or ``xi^2 + V`` ("full").  Writing the
right and left inverse branches as ``x = f_1(s)`` and ``x = -f_2(s)``,
``A = 2 sqrt(c) int_0^lam sqrt(lam - s) (f_1' + f_2') ds`` with ``c = 2``
(half) or ``1`` (full), and the same with ``1/f_1' + 1/f_2'`` for ``G``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import gamma

import numpy as np
from scipy.interpolate import CubicSpline, make_interp_spline, make_smoothing_spline
from scipy.special import roots_jacobi

from . import taylor as tm
from .errors import ConfigError, ConvergenceError, HypothesisViolation
from .phasequad import SampledCurve, _gl
from .potentials import PotentialSpec

__all__ = [
    "abel_J", "abel_invert_halfstep", "WellProfilePair", "recover_well",
    "recover_double_well", "MagneticProfile", "recover_magnetic_radial",
    "make_isospectral_family", "sqrt_grid",
]


def sqrt_grid(lam_max: float, n: int, lam_min: float = 0.0) -> np.ndarray:
    """Energy grid uniform in ``sqrt(lam)`` (dense near the well bottom)."""
    u = np.linspace(np.sqrt(lam_min), np.sqrt(lam_max), n)
    return u * u


@lru_cache(maxsize=None)
def _gj(q: int, alpha: float):
    return roots_jacobi(q, alpha, 0.0)


def _u_spline(curve: SampledCurve):
    """Quintic interpolant of the curve values as a function of ``u = sqrt(lam)``.

    Curves from wells start as polynomials in u (``A ~ u^2``, gradient
    squared ``~ u^4``); degree five reproduces those leading terms exactly.
    """
    t = curve.abscissae
    if t[0] < 0:
        raise ConfigError("curves must live on lam >= 0")
    u = np.sqrt(t)
    k = 5 if u.size >= 6 else 3
    spl = make_interp_spline(u, curve.values, k=k)
    if u[0] > 0:
        # the first piece is extended down to u = 0
        return spl, np.concatenate([[0.0], u])
    return spl, u


def abel_J(a: float, g: SampledCurve, q: int = 16) -> SampledCurve:
    """Riemann-Liouville integral ``J^a g`` at the abscissae of ``g``.

    Parameters
    ----------
    a : float
        Order, ``a > 0``.
    g : SampledCurve
        Samples on ``[0, lam_max]``; if the grid starts above 0 the first
        interpolation piece is extended to 0.
    q : int
        Nodes per panel.

    Examples
    --------
    >>> lam = np.linspace(0, 1, 41)
    >>> one = SampledCurve(lam, np.ones_like(lam))
    >>> float(abel_J(1.0, one).values[-1])
    1.0
    """
    if not a > 0:
        raise ConfigError("Abel order must be positive")
    spl, edges = _u_spline(g)
    xg, wg = _gl(q)
    xj, wj = _gj(q, a - 1.0)
    # Gauss-Legendre nodes on every u-panel; dt = 2u du
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    v = mid[:, None] + half[:, None] * xg[None, :]
    gv = spl(v) * 2 * v * half[:, None] * wg[None, :]
    out = np.zeros(g.abscissae.size)
    offset = edges.size - g.abscissae.size
    for i, lam in enumerate(g.abscissae):
        k = i + offset
        if k == 0 or lam == 0:
            continue
        U = edges[k]
        # panels strictly below the last one
        if k > 1:
            kern = (lam - v[:k - 1] ** 2) ** (a - 1.0)
            out[i] = np.sum(kern * gv[:k - 1])
        # last panel: (U - v)^(a-1) is the Jacobi weight, the rest is smooth
        h = half[k - 1]
        vv = mid[k - 1] + h * xj
        smooth = (U + vv) ** (a - 1.0) * spl(vv) * 2 * vv
        out[i] += h ** a * np.sum(wj * smooth)
    return SampledCurve(g.abscissae, out / gamma(a), f"J^{a}[{g.meaning}]",
                        dict(g.meta))


def _derivative_spline(x, y, method: str, k: int = 5):
    """Spline of y(x) for differentiation; returns (spline, noise estimate)."""
    if method == "interp":
        return make_interp_spline(x, y, k=k), 0.0
    if method == "gcv":
        spl = make_smoothing_spline(x, y)
        return spl, float(np.sqrt(np.mean((spl(x) - y) ** 2)))
    raise ConfigError(f"unknown differentiation method {method!r}")


def abel_invert_halfstep(curve: SampledCurve, method: str = "interp",
                         max_noise: float = 1e-3) -> SampledCurve:
    """Recover ``h`` from ``curve(lam) = int_0^lam sqrt(lam - s) h(s) ds``.

    Applies ``J^{1/2}`` (giving ``Gamma(3/2) J^2 h``) and differentiates
    twice with a spline: ``method="interp"`` (quintic interpolant, for
    clean data) or ``"gcv"`` (cubic smoothing spline with generalized
    cross-validation; biased, but stable on noisy data).

    Noise amplification is estimated as the largest disagreement between
    quintic and cubic interpolant second derivatives on the interior,
    relative to ``max |h|``, and stored in ``meta["noise"]``.  Values above
    ``max_noise`` raise :class:`ConvergenceError` instead of being smoothed
    away silently.
    """
    P = abel_J(0.5, curve)
    lam = curve.abscissae
    spl, resid = _derivative_spline(lam, P.values, method)
    h = spl.derivative(2)(lam) / gamma(1.5)
    h5 = make_interp_spline(lam, P.values, k=5).derivative(2)(lam)
    h3 = make_interp_spline(lam, P.values, k=3).derivative(2)(lam)
    n = lam.size
    inner = slice(n // 20, n - n // 20)
    spread = float(np.max(np.abs(h5 - h3)[inner])) / gamma(1.5)
    noise = spread / max(float(np.max(np.abs(h))), 1e-300)
    if not np.any(h):
        noise = spread
    if noise > max_noise:
        raise ConvergenceError(
            f"second derivative noise {noise:.2e} exceeds {max_noise:.1e}")
    meta = dict(curve.meta, noise=noise, residual=resid, method=method)
    return SampledCurve(lam, h, f"halfstep[{curve.meaning}]", meta)


# -- single well -----------------------------------------------------------

@dataclass
class WellProfilePair:
    """Inverse branches of a well: ``x = f_1(s)`` (gentler) and ``x = -f_2(s)``.

    All curves share the abscissae ``s``; ``f1 >= f2`` since ``f_1' > f_2'``.
    """

    f1_prime: SampledCurve
    f2_prime: SampledCurve
    f1: SampledCurve
    f2: SampledCurve
    meta: dict = field(default_factory=dict)

    @property
    def s(self) -> np.ndarray:
        return self.f1.abscissae

    def _sides(self, center: float, gentle: str):
        if gentle == "right":
            return center + self.f1.values, center - self.f2.values
        if gentle == "left":
            return center + self.f2.values, center - self.f1.values
        raise ConfigError("gentle must be 'right' or 'left'")

    def potential(self, center: float = 0.0, gentle: str = "right") -> SampledCurve:
        """V on both branches as a curve in x.

        ``gentle`` says on which side of ``center`` the branch ``f_1`` lies.
        """
        s = self.s
        right, left = self._sides(center, gentle)
        x = np.concatenate([left[::-1], right])
        v = np.concatenate([s[::-1], s])
        keep = np.concatenate([[True], np.diff(x) > 0])
        return SampledCurve(x[keep], v[keep], "V(x)", dict(self.meta))

    def error(self, V, frac: float = 0.8, center: float = 0.0,
              gentle: str = "right") -> float:
        """``sup |V(x_rec(s)) - s|`` over the inner ``frac`` of the energy range."""
        s = self.s
        lo = 0.5 * (1 - frac) * s[-1]
        sel = (s >= lo) & (s <= s[-1] - lo)
        right, left = self._sides(center, gentle)
        return float(max(np.max(np.abs(V(right[sel]) - s[sel])),
                         np.max(np.abs(V(left[sel]) - s[sel]))))

    def to_csv(self) -> str:
        rows = ["s,f1,f2,f1_prime,f2_prime"]
        for r in zip(self.s, self.f1.values, self.f2.values,
                     self.f1_prime.values, self.f2_prime.values):
            rows.append(",".join(f"{v:.17g}" for v in r))
        return "\n".join(rows) + "\n"


def _abel_prefactor(convention: str) -> float:
    # A = 2 sqrt(c) Gamma(3/2) J^{3/2} S, so J^{1/2} A = sqrt(c pi) J^2 S
    c = {"half": 2.0, "full": 1.0}.get(convention)
    if c is None:
        raise ConfigError(f"unknown convention {convention!r}")
    return np.sqrt(c * np.pi)


def _scaled_rates(curve: SampledCurve, convention: str, method: str, power: int):
    """Spline derivatives of ``r(u) = J^2 h(u^2) / u^power``, ``u > 0``.

    ``J^2 h`` vanishes like ``u^power`` at the well bottom; dividing it out
    avoids the cancellation of differentiating and then dividing by u.
    """
    p = abel_J(0.5, curve).values / _abel_prefactor(convention)
    u = np.sqrt(curve.abscissae)[1:]
    r = p[1:] / u ** power
    spl, _ = _derivative_spline(u, r, method)
    return u, spl(u), spl.derivative(1)(u), spl.derivative(2)(u)


def _check_pair(area_curve: SampledCurve, gradsq_curve: SampledCurve):
    if (area_curve.abscissae.shape != gradsq_curve.abscissae.shape
            or not np.allclose(area_curve.abscissae, gradsq_curve.abscissae,
                               rtol=0, atol=1e-14)):
        raise ConfigError("area and gradsq curves must share one energy grid")
    if area_curve.abscissae[0] != 0.0:
        raise ConfigError("curves must start at lam = 0 (where both vanish)")


def recover_well(area_curve: SampledCurve, gradsq_curve: SampledCurve,
                 convention: str = "half", method: str = "interp",
                 disc_tol: float = 1e-4) -> WellProfilePair:
    """Reconstruct both inverse branches of a single well from two curves.

    With ``psi_i = d f_i(u^2)/du = 2u f_i'(u^2)``, the area curve gives
    ``sigma = psi_1 + psi_2`` and the gradient-squared curve gives
    ``rho = 1/psi_1 + 1/psi_2``; the pair solves
    ``z^2 - sigma z + sigma/rho = 0`` and is ordered ``psi_1 >= psi_2``.

    Parameters
    ----------
    area_curve, gradsq_curve : SampledCurve
        On a common grid starting at 0 (``sqrt_grid`` is a good choice).
    convention : {"half", "full"}
    method : {"interp", "gcv"}
        Spline used for the derivatives.
    disc_tol : float
        Relative size below which a negative discriminant is treated as
        noise and clamped to zero (the symmetric case).

    Raises
    ------
    HypothesisViolation
        Negative discriminant beyond tolerance or a non-positive branch
        derivative (the data do not come from a single well).
    """
    _check_pair(area_curve, gradsq_curve)
    # J^2 S ~ u^3 and J^2 R ~ u^5 at the bottom of the well
    u, r, r1, r2 = _scaled_rates(area_curve, convention, method, 3)
    _, g, g1, g2 = _scaled_rates(gradsq_curve, convention, method, 5)
    # f1 + f2 = p'/(2u) with p = u^3 r; sigma is its u-derivative
    phi = (3 * u * r + u * u * r1) / 2
    sigma = (3 * r + 5 * u * r1 + u * u * r2) / 2
    # int_0^s R = q'/(2u) with q = u^5 g; rho = its u-derivative / (4u^2)
    rho = (15 * g + 9 * u * g1 + u * u * g2) / 8
    disc = sigma * sigma - 4 * sigma / rho
    small = np.abs(disc) <= disc_tol * sigma * sigma
    if np.any(~small & (disc < 0)):
        i = int(np.argmax(~small & (disc < 0)))
        raise HypothesisViolation(
            f"negative discriminant {disc[i]:.3e} at s = {u[i] ** 2:.4g}")
    root = np.sqrt(np.where(small, 0.0, disc))
    psi1 = 0.5 * (sigma + root)
    psi2 = 0.5 * (sigma - root)
    if np.any(psi2 <= 0):
        raise HypothesisViolation("a branch derivative is not positive")
    # f1 - f2 = int_0^u (psi1 - psi2) du; the difference vanishes at u = 0
    diff = CubicSpline(np.concatenate([[0.0], u]),
                       np.concatenate([[0.0], root]))
    D = diff.antiderivative()(u)
    s = u * u
    f1 = 0.5 * (phi + D)
    f2 = 0.5 * (phi - D)
    meta = {"convention": convention, "method": method,
            "merged_points": int(np.sum(small))}
    return WellProfilePair(
        SampledCurve(s, psi1 / (2 * u), "f1'"), SampledCurve(s, psi2 / (2 * u), "f2'"),
        SampledCurve(s, f1, "f1"), SampledCurve(s, f2, "f2"), meta)


def recover_double_well(area_curve: SampledCurve, gradsq_curve: SampledCurve,
                        separation: float, convention: str = "half",
                        method: str = "interp",
                        disc_tol: float = 1e-4) -> WellProfilePair:
    """Branches of one well of a symmetric double well ``V(x) = V(-x)``.

    Below the barrier the sublevel set is two mirror-image intervals, so
    halving both curves gives the data of the right well, centred at
    ``separation``.  ``f1`` is the gentler branch, which faces the barrier:
    read the result with ``potential(separation, gentle="left")``.  ``separation = 0`` is the
    single-well limit and returns :func:`recover_well` unchanged.

    Raises
    ------
    HypothesisViolation
        If the inner branch reaches the origin inside the energy range,
        i.e. the range crosses the barrier and the wells have merged.
    """
    if separation < 0:
        raise ConfigError("separation must be non-negative")
    if separation == 0:
        return recover_well(area_curve, gradsq_curve, convention, method, disc_tol)
    pair = recover_well(area_curve.scaled(0.5), gradsq_curve.scaled(0.5),
                        convention, method, disc_tol)
    if np.any(pair.f1.values >= separation):
        i = int(np.argmax(pair.f1.values >= separation))
        raise HypothesisViolation(
            f"inner branch reaches the origin at s = {pair.s[i]:.4g}: "
            "energy range crosses the barrier")
    pair.meta.update(separation=separation, inner="f1", outer="f2")
    return pair


# -- radial magnetic -------------------------------------------------------

@dataclass
class MagneticProfile:
    """Radial ``V(s)`` and ``|B|(s)`` with ``s = |x|^2``."""

    V: SampledCurve
    B: SampledCurve
    meta: dict = field(default_factory=dict)

    def errors(self, V_true, B_true, frac: float = 0.8) -> tuple:
        s = self.V.abscissae
        lo = 0.5 * (1 - frac) * s[-1]
        sel = (s >= lo) & (s <= s[-1] - lo)
        ev = np.max(np.abs(self.V.values[sel] - V_true(s[sel])))
        eb = np.max(np.abs(self.B.values[sel] - np.abs(B_true(s[sel]))))
        return float(ev), float(eb)

    def to_csv(self) -> str:
        rows = ["s,V,B"]
        rows += [f"{a:.17g},{b:.17g},{c:.17g}"
                 for a, b, c in zip(self.V.abscissae, self.V.values, self.B.values)]
        return "\n".join(rows) + "\n"


def recover_magnetic_radial(I_curve: SampledCurve, II_curve: SampledCurve,
                            convention: str = "full", method: str = "interp",
                            radicand_tol: float = 1e-8) -> MagneticProfile:
    """Recover radial ``V`` and ``|B|`` from the curves I and II.

    With ``f = V^{-1}``, ``I'' = pi^2 f'`` and ``II'' = pi^2 H(f) f'`` where
    ``H = B^2 - 4 s V'' - 2 V'``; then ``B^2 = H + 4 s V'' + 2 V'`` with
    ``V' = 1/f'`` and ``V'' = -f''/f'^3``.  Curves in the "half"
    convention are twice the "full" ones and are rescaled first.

    Raises
    ------
    HypothesisViolation
        ``f'`` not positive (V not increasing) or a negative radicand
        beyond ``radicand_tol`` (relative).
    """
    if I_curve.abscissae.shape != II_curve.abscissae.shape or not np.allclose(
            I_curve.abscissae, II_curve.abscissae, rtol=0, atol=1e-14):
        raise ConfigError("I and II curves must share one energy grid")
    scale = {"full": 1.0, "half": 0.5}.get(convention)
    if scale is None:
        raise ConfigError(f"unknown convention {convention!r}")
    lam = I_curve.abscissae
    sI, _ = _derivative_spline(lam, I_curve.values * scale / np.pi ** 2, method)
    sII, _ = _derivative_spline(lam, II_curve.values * scale / np.pi ** 2, method)
    fp = sI.derivative(2)(lam)
    fpp = sI.derivative(3)(lam)
    if np.any(fp <= 0):
        raise HypothesisViolation("recovered f' is not positive: V is not a well")
    f = sI.derivative(2).antiderivative()(lam)
    f = f - f[0]
    H = sII.derivative(2)(lam) / fp
    Vp = 1.0 / fp
    Vpp = -fpp / fp ** 3
    rad = H + 4 * f * Vpp + 2 * Vp
    bad = rad < -radicand_tol * np.maximum(np.abs(H) + 2 * Vp, 1.0)
    if np.any(bad):
        raise HypothesisViolation(
            f"negative radicand {rad[np.argmax(bad)]:.3e}: no real field")
    B = np.sqrt(np.maximum(rad, 0.0))
    if np.any(np.diff(f) <= 0):
        raise HypothesisViolation("recovered f is not increasing")
    V = SampledCurve(f, lam, "V(s)")
    return MagneticProfile(V, SampledCurve(f, B, "|B|(s)"),
                           {"convention": convention, "method": method})


# -- isospectral family ----------------------------------------------------

def _check_cells(base: PotentialSpec, n: int, samples: int = 401):
    for k in range(n):
        x = np.linspace(2 * k, 2 * k + 1, samples)
        d = base(x) - base(-x)
        scale = 1.0 + np.max(np.abs(base(x)))
        if np.max(np.abs(d)) > 1e-12 * scale:
            raise HypothesisViolation(f"base is not even on [{2 * k}, {2 * k + 1}]")
        x = np.linspace(2 * k + 1.05, 2 * k + 1.95, samples)
        if np.any(base(-x) >= base(x)):
            raise HypothesisViolation(
                f"base fails V(-x) < V(x) on ({2 * k + 1}, {2 * k + 2})")


def make_isospectral_family(base: PotentialSpec, bits: str) -> PotentialSpec:
    """Swap ``V(x) <-> V(-x)`` on the cells ``+-(2k+1, 2k+2)`` with ``bits[k] == "1"``.

    The base must be even on every ``[2k, 2k+1]`` and satisfy
    ``V(-x) < V(x)`` on ``(2k+1, 2k+2)``; then ``V - V(-.)`` vanishes to
    all orders at the cell edges and the spliced potential is smooth.
    Members of the family share all trace invariants.
    """
    if not bits or set(bits) - {"0", "1"}:
        raise ConfigError("bits must be a non-empty 0/1 string")
    if 2 * len(bits) + 1 > base.L:
        raise ConfigError("more cells than fit in the box")
    _check_cells(base, len(bits))
    swapped = [k for k, b in enumerate(bits) if b == "1"]
    inner = base.expr

    def expr(e):
        v = inner(e)
        if not swapped:
            return v
        ax = np.abs(e.value)
        mask = np.zeros(ax.shape, dtype=bool)
        for k in swapped:
            mask |= (ax > 2 * k + 1) & (ax < 2 * k + 2)
        return tm.where(mask, inner(-e), v)

    params = dict(base.params, family_bits=bits, base=base.name)
    return PotentialSpec(f"{base.name}[{bits}]", expr, base.L, base.a, params,
                         base.variable)
