import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.special import gamma

from semispec.abelinv import (abel_J, abel_invert_halfstep, make_isospectral_family,
                              recover_double_well, recover_magnetic_radial, recover_well,
                              sqrt_grid)
from semispec.errors import ConfigError, ConvergenceError, HypothesisViolation
from semispec.invariants import IntegrandForm, ModelSymbol, compute_b, ibp_normalize, to_integrand
from semispec.phasequad import SampledCurve, invariant_curves, nu_quad
from semispec.potentials import (cubic, double_well, harmonic, isospectral_base, polynomial,
                                 radial_field, radial_polynomial)
from semispec.testfunctions import exponential_weight


def curve(fn, lam):
    return SampledCurve(lam, fn(lam))


def riemann_liouville(a, g, lam):
    """Direct QAWS quadrature of the defining integral."""
    if lam == 0:
        return 0.0
    val, _ = integrate.quad(g, 0, lam, weight="alg", wvar=(0, a - 1),
                            epsabs=1e-14, epsrel=1e-12, limit=200)
    return val / gamma(a)


# -- J^a -----------------------------------------------------------------------

def test_J1_is_running_integral():
    lam = np.linspace(0, 1, 41)
    got = abel_J(1.0, curve(np.cos, lam)).values
    assert np.allclose(got, np.sin(lam), atol=1e-10)


@pytest.mark.parametrize("a,b", [(0.5, 0.5), (0.5, 1.0), (1.0, 1.0), (0.5, 2.0), (1.5, 0.5)])
def test_monomial_law_against_quadrature(a, b):
    lam = sqrt_grid(1.0, 81)
    got = abel_J(a, curve(lambda t: t ** b, lam)).values
    closed = gamma(b + 1) / gamma(a + b + 1) * lam ** (a + b)
    oracle = np.array([riemann_liouville(a, lambda t: t ** b, l) for l in lam])
    assert np.allclose(oracle, closed, rtol=1e-11, atol=1e-15)
    assert np.max(np.abs(got - closed)[1:] / closed[1:]) < 1e-7


@pytest.mark.parametrize("a,b", [(0.5, 0.5), (0.5, 1.0), (1.0, 1.0)])
def test_semigroup(a, b):
    lam = sqrt_grid(1.0, 121)
    g = curve(lambda t: np.exp(-t) * (1 + t * t), lam)
    two = abel_J(a, abel_J(b, g)).values
    one = abel_J(a + b, g).values
    assert np.max(np.abs(two - one)[1:] / np.abs(one[1:])) < 1e-7


def test_J_smooth_input_against_quadrature():
    lam = sqrt_grid(1.0, 81)
    g = lambda t: np.cos(3 * t)
    got = abel_J(0.5, curve(g, lam)).values
    oracle = np.array([riemann_liouville(0.5, g, l) for l in lam])
    assert np.max(np.abs(got - oracle)) < 1e-8


@settings(max_examples=25)
@given(st.floats(0.1, 2.5), st.floats(-2, 2), st.floats(-2, 2))
def test_J_is_linear(a, c1, c2):
    lam = sqrt_grid(1.0, 41)
    g1, g2 = curve(np.exp, lam), curve(lambda t: t ** 2, lam)
    mix = SampledCurve(lam, c1 * g1.values + c2 * g2.values)
    lhs = abel_J(a, mix).values
    rhs = c1 * abel_J(a, g1).values + c2 * abel_J(a, g2).values
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_J_rejects_nonpositive_order():
    with pytest.raises(ConfigError):
        abel_J(0.0, curve(np.exp, np.linspace(0, 1, 11)))


# -- half-step inversion -------------------------------------------------------

@pytest.mark.parametrize("forward,h", [
    (lambda l: 2 / 3 * l ** 1.5, lambda s: np.ones_like(s)),
    (lambda l: 4 / 15 * l ** 2.5, lambda s: s),
])
def test_halfstep_examples(forward, h):
    lam = sqrt_grid(1.0, 121)
    out = abel_invert_halfstep(curve(forward, lam))
    sel = (lam >= 0.05) & (lam <= 0.95)
    assert np.max(np.abs(out.values - h(lam))[sel]) < 1e-4


def test_halfstep_zero_curve():
    lam = sqrt_grid(1.0, 41)
    out = abel_invert_halfstep(SampledCurve(lam, np.zeros_like(lam)))
    assert np.all(out.values == 0)


def test_halfstep_reports_noise():
    lam = sqrt_grid(1.0, 121)
    rng = np.random.default_rng(0)
    noisy = SampledCurve(lam, 2 / 3 * lam ** 1.5 * (1 + 1e-3 * rng.standard_normal(lam.size)))
    with pytest.raises(ConvergenceError):
        abel_invert_halfstep(noisy)
    smoothed = abel_invert_halfstep(noisy, method="gcv", max_noise=np.inf)
    assert smoothed.meta["method"] == "gcv" and smoothed.meta["noise"] > 1e-3


# -- single well ---------------------------------------------------------------

def well_curves(V, lam_max, n=121, convention="half"):
    lam = sqrt_grid(lam_max, n)
    return (invariant_curves(V, lam, "area", convention=convention),
            invariant_curves(V, lam, "gradientsq", convention=convention))


def test_recover_harmonic_is_symmetric():
    pair = recover_well(*well_curves(harmonic(), 0.8))
    s = pair.s
    assert np.allclose(pair.f1.values, pair.f2.values, atol=1e-6)
    assert np.allclose(pair.f1.values, np.sqrt(2 * s), atol=1e-6)
    assert pair.error(harmonic()) < 1e-6


def test_recover_cubic_round_trip():
    V = cubic()
    pair = recover_well(*well_curves(V, 0.6))
    assert pair.error(V) < 2e-3
    assert np.all(pair.f1_prime.values >= pair.f2_prime.values)


def test_recover_well_full_convention():
    V = cubic()
    pair = recover_well(*well_curves(V, 0.6, convention="full"), convention="full")
    assert pair.error(V) < 2e-3


@pytest.mark.parametrize("V", [cubic(), polynomial([0, 0, 0.5, 0.1, 0.25], 3.0, 1.0),
                               polynomial([0, 0, 0.5, -0.15], 2.2, 0.6)])
def test_round_trip_presets(V):
    lam_max = 0.5
    pair = recover_well(*well_curves(V, lam_max))
    gentle = "right" if V(np.array([0.5]))[0] < V(np.array([-0.5]))[0] else "left"
    assert pair.error(V, gentle=gentle) <= 5e-3


def test_reflection_ambiguity():
    V = cubic()
    a = recover_well(*well_curves(V, 0.6))
    b = recover_well(*well_curves(V.reflect(), 0.6))
    assert np.allclose(a.f1.values, b.f1.values, atol=1e-9)
    assert np.allclose(a.f2.values, b.f2.values, atol=1e-9)
    assert b.error(V.reflect(), gentle="left") < 2e-3


def test_recover_well_rejects_mismatched_grids():
    A, G = well_curves(cubic(), 0.6)
    with pytest.raises(ConfigError):
        recover_well(A, SampledCurve(G.abscissae * 0.9, G.values))
    lam = sqrt_grid(0.6, 41, 0.01)
    with pytest.raises(ConfigError):
        recover_well(invariant_curves(cubic(), lam, "area"),
                     invariant_curves(cubic(), lam, "gradientsq"))


def test_recover_well_rejects_inconsistent_data():
    # gradient data far too small for the area: no real branch pair exists
    A, G = well_curves(harmonic(), 0.8)
    with pytest.raises(HypothesisViolation):
        recover_well(A, G.scaled(0.2))


# -- double well ---------------------------------------------------------------

def test_double_well_branches():
    V = double_well()
    pair = recover_double_well(*well_curves(V, 0.2), separation=1.0)
    assert pair.error(V, center=1.0, gentle="left") < 5e-3
    assert pair.error(V, center=-1.0, gentle="right") < 5e-3


def test_double_well_separation_zero_is_single_well():
    A, G = well_curves(cubic(), 0.6)
    a = recover_double_well(A, G, separation=0.0)
    b = recover_well(A, G)
    assert np.array_equal(a.f1.values, b.f1.values)


def test_double_well_barrier_crossing_raises():
    with pytest.raises(HypothesisViolation):
        recover_double_well(*well_curves(double_well(), 0.3), separation=1.0)


def test_double_well_misstated_separation_raises():
    # the inner branch reaches about 0.675 by lam = 0.2
    with pytest.raises(HypothesisViolation):
        recover_double_well(*well_curves(double_well(), 0.2), separation=0.6)


def test_double_well_asymmetric_perturbation_raises():
    # a tilt lifts one bottom to 0.04; the halved curves then fit no single well
    c = [0.25, 0.02, -0.5, 0, 0.25]
    x = np.linspace(-1.5, -0.5, 20001)
    low = np.polynomial.Polynomial(c)(x).min()
    V = polynomial([c[0] - low] + c[1:], 2.5, 1.0)
    with pytest.raises(HypothesisViolation):
        recover_double_well(*well_curves(V, 0.15), separation=1.0)


# -- radial magnetic -----------------------------------------------------------

def magnetic_curves(V, B, n=121, lam_max=1.0):
    lam = np.linspace(0, lam_max, n)
    return (invariant_curves(V, lam, "magnetic_I"),
            invariant_curves(V, lam, "magnetic_II", B=B))


def test_magnetic_harmonic_example():
    lam = np.linspace(0, 1, 41)
    B0 = 1.5
    prof = recover_magnetic_radial(SampledCurve(lam, np.pi ** 2 * lam ** 2),
                                   SampledCurve(lam, np.pi ** 2 * (B0 ** 2 - 1) * lam ** 2))
    assert np.allclose(prof.V.abscissae, 2 * lam, atol=1e-10)
    assert np.allclose(prof.B.values, B0, atol=1e-8)


def test_magnetic_zero_II_gives_unit_field():
    lam = np.linspace(0, 1, 41)
    prof = recover_magnetic_radial(SampledCurve(lam, np.pi ** 2 * lam ** 2),
                                   SampledCurve(lam, np.zeros_like(lam)))
    assert np.allclose(prof.B.values, 1.0, atol=1e-8)


def test_magnetic_round_trip():
    V, B = radial_field()
    prof = recover_magnetic_radial(*magnetic_curves(V, B))
    ev, eb = prof.errors(V, B)
    assert ev < 5e-3 and eb < 5e-3


def test_magnetic_sign_of_B_is_invisible():
    V, B = radial_field()
    minus = radial_polynomial([-1.0, -0.5], a=np.inf)
    a = recover_magnetic_radial(*magnetic_curves(V, B))
    b = recover_magnetic_radial(*magnetic_curves(V, minus))
    assert np.array_equal(a.B.values, b.B.values)


def test_magnetic_half_convention():
    V, B = radial_field()
    lam = np.linspace(0, 1, 121)
    I = invariant_curves(V, lam, "magnetic_I", convention="half")
    II = invariant_curves(V, lam, "magnetic_II", B=B, convention="half")
    ev, eb = recover_magnetic_radial(I, II, convention="half").errors(V, B)
    assert ev < 5e-3 and eb < 5e-3


def test_magnetic_negative_radicand_raises():
    lam = np.linspace(0, 1, 41)
    with pytest.raises(HypothesisViolation):
        recover_magnetic_radial(SampledCurve(lam, np.pi ** 2 * lam ** 2),
                                SampledCurve(lam, -2 * np.pi ** 2 * lam ** 2))


def test_magnetic_nonmonotone_raises():
    lam = np.linspace(0, 1, 41)
    with pytest.raises(HypothesisViolation):
        recover_magnetic_radial(SampledCurve(lam, -lam ** 2), SampledCurve(lam, lam ** 2))


# -- isospectral family --------------------------------------------------------

def test_family_all_zero_is_base():
    base = isospectral_base(0.3)
    x = np.linspace(-9, 9, 1001)
    assert np.array_equal(make_isospectral_family(base, "0000")(x), base(x))


def test_family_all_one_reflects_swap_cells():
    base = isospectral_base(0.3)
    fam = make_isospectral_family(base, "1111")
    x = np.linspace(-9, 9, 1801)
    swap = np.zeros_like(x, dtype=bool)
    for k in range(4):
        swap |= (np.abs(x) > 2 * k + 1) & (np.abs(x) < 2 * k + 2)
    assert np.array_equal(fam(x)[swap], base(-x)[swap])
    assert np.array_equal(fam(x)[~swap], base(x)[~swap])


def test_family_is_smooth_at_cell_edges():
    # splicing is C-infinity when V(x) and V(-x) agree to all orders at each edge
    base = isospectral_base(0.3)
    edges = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0])
    sign = np.array([(-1.0) ** k for k in range(7)])[:, None]
    assert np.allclose(base.derivatives(edges, 6), sign * base.derivatives(-edges, 6),
                       atol=1e-10)


def test_family_rejects_bad_base():
    with pytest.raises(HypothesisViolation):
        make_isospectral_family(cubic(L=12.0, a=1.0), "10")
    with pytest.raises(ConfigError):
        make_isospectral_family(isospectral_base(0.3), "10a")


def test_family_shares_invariants():
    base = isospectral_base(0.3)
    Va, Vb = make_isospectral_family(base, "1010"), make_isospectral_family(base, "0110")
    x = np.linspace(-9, 9, 4001)
    assert np.max(np.abs(Va(x) - Vb(x))) > 0.01
    f = exponential_weight(2.0, (1, 0, 0.2), floor=1e-14)
    S1 = ModelSymbol("scalar", 1)
    for k in (0, 1):
        g = (IntegrandForm(1, {0: "(1)"}) if k == 0
             else ibp_normalize(to_integrand(compute_b(S1, 2 * k))))
        a, b = (nu_quad(g, V, f, method="grid") for V in (Va, Vb))
        assert abs(a - b) <= 1e-8 * abs(a)
