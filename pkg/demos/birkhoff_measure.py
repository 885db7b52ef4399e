"""Birkhoff canonical form from the area function and from eigenvalues.

H0 inverts s = A(lam) / 2 pi.  Its quantum correction K is read off the
spectrum, K(lambda_n) = hbar (n + 1/2), and approaches A/2 pi at rate
hbar^2.  The spectral measure of a test function then equals the integral
of f against dK.

Run with ``python3 demos/birkhoff_measure.py`` (about 10 s).
"""

import numpy as np

from semispec.birkhoff import canonical_form, verify_measure_identity
from semispec.phasequad import area
from semispec.potentials import quartic
from semispec.schrod1d import eigen
from semispec.testfunctions import plateau

V = quartic()
top = area(V, 0.8) / (2 * np.pi)
spectra = [eigen(V, h, 0.8) for h in (0.02, 0.01)]
form = canonical_form(V, spectra, np.linspace(0.0, top, 32, endpoint=False))
print(f"H0 on [0, {top:.4f}]: H0(s) / s runs from {form.H0.values[1] / form.H0.abscissae[1]:.4f}"
      f" to {form.H0.values[-1] / form.H0.abscissae[-1]:.4f}")

errs = []
for sp in spectra:
    K = form.K[sp.hbar]
    gap = np.max(np.abs(K.values - np.array([area(V, t) for t in K.abscissae]) / (2 * np.pi)))
    errs.append(gap)
    print(f"hbar {sp.hbar}: {len(sp)} levels, max |K - A/2pi| = {gap:.2e}")
print(f"ratio when hbar halves: {errs[0] / errs[1]:.2f}")
print(f"composition defect: {form.composition_defect()}")

check = verify_measure_identity(spectra[0], plateau(0.0, 0.4, 0.3), form.K[0.02])
print(f"trace {check.trace:.10f} vs 2 pi int f dK {check.integral:.10f}"
      f" (relative {check.relative:.1e})")
