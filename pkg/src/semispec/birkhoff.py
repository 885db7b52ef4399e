"""Quantum Birkhoff canonical form from areas and spectra.

For a single well the leading canonical form ``H0`` is defined by
``H0(A(lam) / 2 pi) = lam``.  The full form ``H(s, hbar^2)`` reproduces the
eigenvalues as ``lam_n = H(hbar (n + 1/2), hbar^2)``, so its inverse ``K``
is sampled from a spectrum as ``K(lam_n) = hbar (n + 1/2)``.  The spectral
measure then satisfies

    hbar * sum_n f(lam_n) = int f(t) K'(t) dt + O(hbar^inf),

equivalently ``trace_f = 2 pi int f K' dt`` in the ``2 pi hbar``
normalization of :func:`semispec.schrod1d.trace_f`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from .errors import ConfigError, ConvergenceError, HypothesisViolation
from .phasequad import SampledCurve, area, gauss_legendre, period
from .potentials import PotentialSpec
from .schrod1d import Spectrum, trace_f
from .testfunctions import TestFunction

__all__ = ["CanonicalForm", "hqb0_from_area", "k_from_spectrum",
           "verify_measure_identity", "MeasureCheck", "canonical_form"]


def _check_convex(V: PotentialSpec, n: int = 4001):
    lo, hi = V.turning_points(V.a)
    x = np.linspace(lo, hi, n)
    if np.any(V.derivatives(x, 2)[2] <= 0):
        raise HypothesisViolation(f"{V.name}: V'' is not positive on V^-1([0, a])")


def hqb0_from_area(V: PotentialSpec, s_grid, n_table: int = 64,
                   newton_tol: float = 1e-13) -> SampledCurve:
    """Leading canonical form ``H0(s)``, the inverse of ``lam -> A(lam)/2pi``.

    A table of ``A/2pi`` on a square-root energy grid is inverted by
    monotone (PCHIP) interpolation; each value is then polished by Newton
    steps using ``dA/dlam = T(lam)``.

    Raises
    ------
    HypothesisViolation
        ``V''`` not positive on the well.
    ConfigError
        ``s`` outside ``[0, A(a)/2pi)``.
    """
    _check_convex(V)
    s_grid = np.asarray(s_grid, dtype=float)
    top = V.a * (1 - 1e-9)
    lam = top * np.linspace(0.0, 1.0, n_table) ** 2
    table = np.array([area(V, l) for l in lam]) / (2 * np.pi)
    if np.any(np.diff(table) <= 0):
        raise HypothesisViolation("area curve is not increasing")
    if np.any(s_grid < 0) or np.any(s_grid >= table[-1]):
        raise ConfigError(f"s must lie in [0, {table[-1]:.6g})")
    guess = PchipInterpolator(table, lam)(s_grid)
    out = np.empty_like(s_grid)
    for i, (s, l) in enumerate(zip(s_grid, guess)):
        if s == 0:
            out[i] = 0.0
            continue
        for _ in range(20):
            step = (area(V, l) / (2 * np.pi) - s) * 2 * np.pi / period(V, l)
            l = min(max(l - step, 0.5 * l), 0.5 * (l + top))
            if abs(step) <= newton_tol * max(l, 1e-300):
                break
        else:
            raise ConvergenceError(f"Newton inversion stalled at s = {s}")
        out[i] = l
    return SampledCurve(s_grid, out, "H0(s)", {"potential": V.describe()})


def k_from_spectrum(s: Spectrum) -> SampledCurve:
    """Empirical ``K(lam_n) = hbar (n + 1/2)`` on the eigenvalues.

    An empty spectrum gives the empty curve.  Raises
    :class:`ConvergenceError` if any eigenvalue is unconverged.
    """
    if not np.all(s.converged):
        raise ConvergenceError("spectrum has unconverged eigenvalues")
    n = np.arange(len(s.eigenvalues))
    if 0 < n.size < 4:
        raise ConfigError("need at least four eigenvalues (or none) to sample K")
    return SampledCurve(s.eigenvalues, s.hbar * (n + 0.5), "K(t)",
                        {"hbar": s.hbar})


def _bottom(K: SampledCurve) -> float:
    """Energy where the cubic through the first four samples of K vanishes."""
    t, k = K.abscissae[:4], K.values[:4]
    c = np.polyfit(k, t, 3)
    return float(np.polyval(c, 0.0))


@dataclass
class MeasureCheck:
    """Both sides of the measure identity and their mismatch."""

    trace: float
    integral: float
    residual: float
    relative: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def verify_measure_identity(s: Spectrum, f: TestFunction, K: SampledCurve,
                            panels: int = 4) -> MeasureCheck:
    """Compare ``trace_f(s)`` with ``2 pi int f(t) K'(t) dt``.

    ``K`` is splined (not-a-knot cubic) through its samples and the point
    ``(t0, 0)`` where it extrapolates to zero at the well bottom; the
    integral runs over ``[t0, t_last]``.  Nothing is raised on mismatch;
    the residual is reported.
    """
    tr = trace_f(s, f)
    if len(K) == 0:
        return MeasureCheck(tr, 0.0, abs(tr), 0.0 if tr == 0 else 1.0)
    if np.any(np.diff(K.values) <= 0):
        raise HypothesisViolation("K is not increasing")
    t0 = min(_bottom(K), K.abscissae[0])
    if t0 < K.abscissae[0]:
        t = np.concatenate([[t0], K.abscissae])
        k = np.concatenate([[0.0], K.values])
    else:
        t, k = K.abscissae, K.values
    dK = CubicSpline(t, k).derivative()
    total = 0.0
    lo, hi = max(t[0], f.support[0]), min(t[-1], f.support[1])
    if hi > lo:
        edges = t[(t > lo) & (t < hi)]
        edges = np.concatenate([[lo], edges, [hi]])
        for a, b in zip(edges[:-1], edges[1:]):
            x, w = gauss_legendre(a, b, panels, 8)
            total += float(np.sum(w * f(x) * dK(x)))
    integral = 2 * np.pi * total
    res = abs(tr - integral)
    scale = max(abs(tr), abs(integral))
    return MeasureCheck(tr, integral, res, res / scale if scale > 0 else 0.0)


@dataclass
class CanonicalForm:
    """Leading form ``H0`` and empirical ``K`` per hbar."""

    H0: SampledCurve
    K: dict = field(default_factory=dict)

    def composition_defect(self) -> dict:
        """``max |K(H0(s)) - s|`` per hbar over the overlapping range.

        ``K`` inverts the full form, so the defect is ``O(hbar^2)``.
        """
        out = {}
        for hbar, K in self.K.items():
            if len(K) == 0:
                continue
            spl = CubicSpline(K.abscissae, K.values)
            lam = self.H0.values
            sel = (lam >= K.abscissae[0]) & (lam <= K.abscissae[-1])
            if np.any(sel):
                out[hbar] = float(np.max(np.abs(spl(lam[sel]) - self.H0.abscissae[sel])))
        return out


def canonical_form(V: PotentialSpec, spectra, s_grid) -> CanonicalForm:
    """Bundle ``H0`` on ``s_grid`` with ``K`` from each spectrum."""
    H0 = hqb0_from_area(V, s_grid)
    return CanonicalForm(H0, {sp.hbar: k_from_spectrum(sp) for sp in spectra})
