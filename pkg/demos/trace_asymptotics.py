"""Spectral traces against phase-space quadrature.

For V = x^2/2 + x^4/4 the sum (2 pi hbar) sum_n f(lambda_n) is computed from
the eigenvalues at three values of hbar and fitted by c_0 + c_2 hbar^2 +
c_4 hbar^4.  The fitted c_0 and c_2 are then compared with the phase-space
integrals of the hbar^0 and hbar^2 densities.  The harmonic oscillator is the
control: its hbar^2 coefficient vanishes.

Run with ``python3 demos/trace_asymptotics.py`` (about 15 s).
"""

from semispec.invariants import IntegrandForm, ModelSymbol, compute_b, ibp_normalize, to_integrand
from semispec.phasequad import nu_quad
from semispec.potentials import harmonic, quartic
from semispec.schrod1d import fit_expansion
from semispec.testfunctions import plateau

hbars = [0.04, 0.02, 0.01]
# wide shoulders keep the hbar = 0.04 sum close to its asymptotic value
f = plateau(0.0, 0.4, 0.9)
g0 = IntegrandForm(1, {0: "(1)"})
g1 = ibp_normalize(to_integrand(compute_b(ModelSymbol("scalar", 1), 2)))

for V in (quartic(L=2.5, a=1.5), harmonic(L=3.5, a=1.5)):
    fit = fit_expansion(V, f, hbars)
    nu0, nu1 = nu_quad(g0, V, f), nu_quad(g1, V, f)
    print(V.name)
    for h, tr in zip(fit.hbar, fit.traces):
        print(f"    hbar {h:<5} trace {tr:.12f}")
    print(f"    nu0: fitted {fit.nu0_hat:.10f}  quadrature {nu0:.10f}")
    print(f"    nu1: fitted {fit.nu1_hat:.6f}  quadrature {nu1:.6f}")
