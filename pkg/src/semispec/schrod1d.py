"""Eigenvalues of the 1-D semiclassical Schrodinger operator.

The operator ``-(hbar^2/2) d^2/dx^2 + V`` on ``(-L, L)`` with Dirichlet
walls is discretized in the sine basis

    phi_n(x) = sin(n pi (x + L) / 2L) / sqrt(L),   n = 1..N,

where the kinetic part is diagonal and the potential matrix is Toeplitz
minus Hankel in the cosine moments of ``V``.  The moments come from
composite Gauss-Legendre quadrature fine enough to resolve the fastest
cosine, so the only discretization error is the spectral truncation,
which is checked by re-solving with ``2N`` functions.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh, hankel, toeplitz

from .errors import ConfigError, ConvergenceError, HypothesisViolation
from .phasequad import gauss_legendre
from .potentials import PotentialSpec
from .testfunctions import TestFunction

__all__ = ["Spectrum", "FitResult", "eigen", "trace_f", "fit_expansion",
           "hamiltonian"]

# fraction of the box, at each wall, where eigenfunctions must be negligible
_EDGE = 0.1
_MASS_TOL = 1e-8


@dataclass
class Spectrum:
    """Eigenvalues below ``E_max`` with solver provenance.

    Attributes
    ----------
    hbar : float
    eigenvalues : ndarray
        Sorted eigenvalues ``<= E_max`` from the ``basis_size`` solve.
    basis_size : int
    converged : ndarray of bool
        Agreement with the ``2 * basis_size`` solve within ``tol``.
    E_max : float
    boundary_mass : ndarray
        Probability of each eigenfunction in the outer tenth of the box.
    tol : float
    meta : dict
    """

    hbar: float
    eigenvalues: np.ndarray
    basis_size: int
    converged: np.ndarray
    E_max: float
    boundary_mass: np.ndarray = field(default_factory=lambda: np.zeros(0))
    tol: float = 0.0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.eigenvalues)

    def count_below(self, lam: float) -> int:
        if lam > self.E_max:
            raise ConfigError(f"count requested at {lam} above E_max = {self.E_max}")
        return int(np.searchsorted(self.eigenvalues, lam, side="right"))

    def to_csv(self) -> str:
        rows = ["index,eigenvalue,converged"]
        rows += [f"{i},{lam:.17g},{int(ok)}"
                 for i, (lam, ok) in enumerate(zip(self.eigenvalues, self.converged))]
        return "\n".join(rows) + "\n"


def _cos_moments(V: PotentialSpec, kmax: int) -> np.ndarray:
    """``c_k = (1/L) int V(x) cos(k theta) dx`` for k = 0..kmax."""
    L = V.L
    # one cosine period per 16-point panel at the top frequency
    x, w = gauss_legendre(-L, L, kmax // 2 + 16, 16)
    wv = w * V(x) / L
    theta = np.pi * (x + L) / (2 * L)
    # cos((k0 + j) theta) = Re(exp(i j theta) exp(i k0 theta)) in blocks of 256
    block = np.exp(1j * np.outer(np.arange(256), theta))
    c = np.empty(kmax + 256)
    for k0 in range(0, kmax + 1, 256):
        c[k0:k0 + 256] = (block @ (np.exp(1j * k0 * theta) * wv)).real
    c = c[:kmax + 1]
    return c


def hamiltonian(V: PotentialSpec, hbar: float, N: int,
                moments: np.ndarray | None = None) -> np.ndarray:
    """Dense Galerkin matrix of the operator in the first ``N`` sine modes."""
    c = _cos_moments(V, 2 * N) if moments is None else moments
    n = np.arange(1, N + 1)
    H = 0.5 * (toeplitz(c[:N]) - hankel(c[2:N + 2], c[N + 1:2 * N + 1]))
    H[n - 1, n - 1] += 0.5 * hbar ** 2 * (n * np.pi / (2 * V.L)) ** 2
    return H


def _edge_mass(V: PotentialSpec, vectors: np.ndarray) -> np.ndarray:
    L, N = V.L, vectors.shape[0]
    n = np.arange(1, N + 1)
    mass = np.zeros(vectors.shape[1])
    for a, b in ((-L, -L + 2 * _EDGE * L), (L - 2 * _EDGE * L, L)):
        x, w = gauss_legendre(a, b, max(4, N // 16), 16)
        basis = np.sin(np.outer(x + L, n) * np.pi / (2 * L)) / np.sqrt(L)
        psi = basis @ vectors
        mass += w @ psi ** 2
    return mass


def eigen(V: PotentialSpec, hbar: float, E_max: float, N: int = 1024,
          tol: float | None = None, strict: bool = True) -> Spectrum:
    """Eigenvalues of the semiclassical operator up to ``E_max``.

    Parameters
    ----------
    V : PotentialSpec
    hbar : float
    E_max : float
        Must not exceed the energy cap ``V.a``.
    N : int
        Basis size; a second solve with ``2N`` modes certifies each value.
    tol : float, optional
        Convergence tolerance, default ``1e-10 * max(1, E_max)``.
    strict : bool
        Raise on unconverged eigenvalues instead of only flagging them.

    Raises
    ------
    ConfigError
        Bad ``hbar``, ``N`` or ``E_max > a``.
    ConvergenceError
        Some eigenvalue below ``E_max`` moves by more than ``tol``.
    HypothesisViolation
        An eigenfunction below ``E_max`` carries more than 1e-8 of its mass
        near the walls, so the box is too small for this energy.

    Examples
    --------
    >>> from semispec.potentials import harmonic
    >>> eigen(harmonic(), 0.1, 0.5, N=128).eigenvalues.round(10)
    array([0.05, 0.15, 0.25, 0.35, 0.45])
    """
    if not hbar > 0:
        raise ConfigError("hbar must be positive")
    if N < 64:
        raise ConfigError("basis size N must be at least 64")
    if E_max > V.a + 1e-12:
        raise ConfigError(f"E_max = {E_max} exceeds the energy cap a = {V.a}")
    tol = 1e-10 * max(1.0, abs(E_max)) if tol is None else tol

    c = _cos_moments(V, 4 * N)
    H = hamiltonian(V, hbar, N, c)
    w = eigh(H, eigvals_only=True, driver="ev")
    w2 = eigh(hamiltonian(V, hbar, 2 * N, c), eigvals_only=True, driver="ev")

    m = int(np.searchsorted(w, E_max, side="right"))
    lam = w[:m]
    converged = np.abs(lam - w2[:m]) <= tol
    if m < len(w2) and w2[m] <= E_max - tol:
        # the larger basis finds an extra level below E_max
        raise ConvergenceError(
            f"basis N={N} misses a level at {w2[m]:.12g} below E_max")
    # eigenvectors only feed the confinement diagnostic
    _, vec = eigh(H, driver="evr", subset_by_index=(0, max(m, 1) - 1))
    mass = _edge_mass(V, vec[:, :m])
    if strict and not np.all(converged):
        bad = lam[~converged]
        raise ConvergenceError(
            f"{bad.size} eigenvalues unconverged at N={N}, first at {bad[0]:.12g}")
    if np.any(mass > _MASS_TOL):
        i = int(np.argmax(mass > _MASS_TOL))
        raise HypothesisViolation(
            f"eigenfunction at {lam[i]:.6g} has boundary mass {mass[i]:.2e}; "
            "E_max is above the confinement of the box")
    return Spectrum(hbar=float(hbar), eigenvalues=lam, basis_size=N,
                    converged=converged, E_max=float(E_max),
                    boundary_mass=mass, tol=tol,
                    meta={"potential": V.describe(), "basis": "sine",
                          "driver": "lapack syev"})


def trace_f(s: Spectrum, f: TestFunction) -> float:
    """``2 pi hbar * sum_i f(lambda_i)`` over the computed spectrum.

    Raises :class:`ConfigError` if ``supp(f)`` reaches above ``s.E_max``
    (the spectrum would be truncated) and :class:`ConvergenceError` if an
    unconverged eigenvalue lies in ``supp(f)``.
    """
    lo, hi = f.support
    if hi > s.E_max + 1e-12:
        raise ConfigError(
            f"supp(f) reaches {hi}, above the spectrum cutoff {s.E_max}")
    lam = s.eigenvalues
    inside = (lam >= lo) & (lam <= hi)
    if np.any(inside & ~s.converged):
        raise ConvergenceError("unconverged eigenvalue inside supp(f)")
    if not np.any(inside):
        return 0.0
    return float(2 * np.pi * s.hbar * np.sum(f(lam[inside])))


@dataclass
class FitResult:
    """Least-squares fit of traces against even powers of hbar."""

    nu0_hat: float
    nu1_hat: float
    coefficients: dict
    residuals: np.ndarray
    hbar: np.ndarray
    traces: np.ndarray

    def to_dict(self) -> dict:
        return {"nu0_hat": self.nu0_hat, "nu1_hat": self.nu1_hat,
                "coefficients": {str(k): v for k, v in self.coefficients.items()},
                "residuals": self.residuals.tolist(),
                "hbar": self.hbar.tolist(), "traces": self.traces.tolist()}


def fit_expansion(V: PotentialSpec, f: TestFunction, hbar_list, N: int = 1024,
                  orders=(0, 2, 4), rtol: float = 1e-6,
                  workers: int = 1) -> FitResult:
    """Fit ``trace_f(hbar) ~ sum_j c_j hbar^j`` over an hbar sweep.

    With as many hbar values as model terms the fit interpolates and the
    residuals vanish; with more, a residual above ``rtol * max|trace|``
    raises :class:`ConvergenceError` (an under-resolved eigensolve or a
    truncated expansion).

    Returns
    -------
    FitResult
        ``nu0_hat = c_0`` and ``nu1_hat = c_2``.
    """
    h = np.asarray(hbar_list, dtype=float)
    orders = tuple(int(o) for o in orders)
    if h.size < 3 or np.any(np.diff(h) >= 0):
        raise ConfigError("need at least three strictly decreasing hbar values")
    if h.size < len(orders):
        raise ConfigError(f"{len(orders)} model terms need as many hbar values")
    if 0 not in orders or 2 not in orders:
        raise ConfigError("model must contain the hbar^0 and hbar^2 terms")
    E_max = f.support[1]
    if E_max > V.a:
        raise HypothesisViolation(f"supp(f) reaches {E_max}, above the cap a = {V.a}")

    def one(hb):
        return trace_f(eigen(V, hb, E_max, N=N), f)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            traces = np.array(list(pool.map(one, h)))
    else:
        traces = np.array([one(hb) for hb in h])

    A = h[:, None] ** np.array(orders)[None, :]
    coef, *_ = np.linalg.lstsq(A, traces, rcond=None)
    resid = traces - A @ coef
    scale = np.max(np.abs(traces))
    if h.size > len(orders) and np.max(np.abs(resid)) > rtol * scale + 1e-14:
        raise ConvergenceError(
            f"fit residual {np.max(np.abs(resid)):.3e} exceeds {rtol:g} relative")
    cdict = dict(zip(orders, coef.tolist()))
    return FitResult(nu0_hat=cdict[0], nu1_hat=cdict[2], coefficients=cdict,
                     residuals=resid, hbar=h, traces=traces)
