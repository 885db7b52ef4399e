"""Amplitudes of f(P) and their integration-by-parts normal forms.

The amplitudes b_m are polynomials in derivatives of V, in xi and in the
auxiliary variable t.  Replacing t^l by f^(l) turns each one into a phase
space integrand, and integration by parts reduces that integrand to a short
canonical density.  For the 1-D Schrodinger symbol this prints the
hbar^2, hbar^4 and hbar^6 densities.

Run with ``python3 demos/symbolic_invariants.py``.
"""

import time

from semispec.invariants import ModelSymbol, compute_b, ibp_normalize, to_integrand
from semispec.polycas import render

scalar = ModelSymbol("scalar", 1)

t0 = time.perf_counter()
amps = [compute_b(scalar, m) for m in range(7)]
print(f"b_0 .. b_6 in {time.perf_counter() - t0:.3f} s")
print(f"term counts: {[len(b) for b in amps]}")
print(f"b_2 = {render(amps[2])}\n")

for k in (1, 2, 3):
    raw = to_integrand(amps[2 * k])
    nf = ibp_normalize(raw)
    print(f"hbar^{2 * k}: {sum(len(p) for p in raw.by_order.values())} raw terms reduce to")
    for line in nf.render().splitlines():
        print(f"    {line}")

# the magnetic symbol adds the field strength to the hbar^2 density
magnetic = ModelSymbol("magnetic", 2)
print("\nmagnetic hbar^2:")
print("    " + ibp_normalize(to_integrand(compute_b(magnetic, 2)), magnetic).render())
