"""Amplitude recursion, integrands and integration-by-parts normal forms.

The symbol of ``f(P)`` is ``sum_k hbar^k sum_l b_{k,l} ((1/i) d/ds)^l f (p)``
where ``b_k(x, xi, t) = sum_l b_{k,l} t^l`` solves

    (1/i) d b_m / dt = sum_{|alpha| >= 1} (D_xi^alpha p) Q_alpha b_{m-|alpha|},
    Q_alpha = (1/alpha!) prod_k (d_k + i t dp/dx_k)^alpha_k,

with ``b_0 = 1`` and ``b_m(t=0) = 0``.  Two model symbols are supported:
``xi^2/2 + V`` and ``sum_j (xi_j + a_j)^2 / 2 + V`` in Coulomb gauge.

Normal forms are computed per graded class as the reduced row echelon
remainder modulo the span of all integration-by-parts relations of that
class, so two integrands are IBP-equivalent exactly when their normal
forms coincide.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .polycas import (GaussianRational, I, JetSymbol, SymMonomial, SymPoly,
                      double_factorial, formal_dx, formal_dxi, parse, render)

__all__ = [
    "ModelSymbol", "IntegrandForm", "StructureError", "NormalizationError",
    "q_alpha", "compute_b", "structure_check", "to_integrand",
    "ibp_normalize", "ibp_equivalent", "in_window", "f_order_window",
]


class StructureError(AssertionError):
    """An amplitude violates the shape the recursion must produce."""


class NormalizationError(RuntimeError):
    """The rewrite system could not reach the target normal form."""


@dataclass(frozen=True)
class ModelSymbol:
    kind: str = "scalar"
    dims: int = 1

    def __post_init__(self):
        if self.kind not in ("scalar", "magnetic"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.dims < 1:
            raise ValueError("dims must be >= 1")

    def symbol(self) -> SymPoly:
        """Principal symbol p(x, xi) as a jet polynomial."""
        n = self.dims
        p = SymPoly.jet(JetSymbol("V", 0, (0,) * n), n)
        for k in range(n):
            mom = SymPoly.xi(k, n)
            if self.kind == "magnetic":
                mom = mom + SymPoly.jet(JetSymbol("a", k, (0,) * n), n)
            p = p + mom * mom * Fraction(1, 2)
        return p

    def gauge_rules(self) -> bool:
        return self.kind == "magnetic"


@dataclass
class IntegrandForm:
    """Map from f-derivative order to a t-free jet polynomial.

    Represents ``int sum_l g_l(x, xi) f^(l)(p(x, xi)) dx dxi``.
    """

    dims: int
    by_order: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for l, poly in self.by_order.items():
            if isinstance(poly, str):
                poly = parse(poly, self.dims)
            if poly.dims != self.dims:
                raise ValueError("dimension mismatch in IntegrandForm")
            if poly.t_degree() > 0:
                raise ValueError("integrand polynomials must be t-free")
            if not poly.is_zero():
                clean[int(l)] = poly
        self.by_order = dict(sorted(clean.items()))

    def __eq__(self, other):
        if not isinstance(other, IntegrandForm):
            return NotImplemented
        return self.dims == other.dims and self.by_order == other.by_order

    def __add__(self, other):
        out = dict(self.by_order)
        for l, poly in other.by_order.items():
            out[l] = out[l] + poly if l in out else poly
        return IntegrandForm(self.dims, out)

    def __mul__(self, c):
        return IntegrandForm(self.dims, {l: p * c for l, p in self.by_order.items()})

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    def is_zero(self) -> bool:
        return not self.by_order

    def orders(self) -> list:
        return list(self.by_order)

    def is_real(self) -> bool:
        return all(c.is_real for p in self.by_order.values() for _, c in p.items())

    def render(self) -> str:
        if not self.by_order:
            return "0"
        return "\n".join(f"f^({l}): {render(p)}" for l, p in self.by_order.items())

    __str__ = render

    def to_dict(self) -> dict:
        return {str(l): render(p) for l, p in self.by_order.items()}

    @classmethod
    def from_dict(cls, dims: int, data: dict) -> "IntegrandForm":
        return cls(dims, {int(l): parse(s, dims) for l, s in data.items()})


# -- recursion ---------------------------------------------------------------

def _multiindices(n: int, total: int):
    if n == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _multiindices(n - 1, total - first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def _dp_dx(model: ModelSymbol) -> tuple:
    p = model.symbol()
    return tuple(formal_dx(p, k) for k in range(model.dims))


@lru_cache(maxsize=None)
def _d_xi_p(model: ModelSymbol, alpha: tuple) -> SymPoly:
    """(1/i)^|alpha| d_xi^alpha p."""
    p = model.symbol()
    for k, a in enumerate(alpha):
        for _ in range(a):
            p = formal_dxi(p, k)
    return p * (GaussianRational(1) / I) ** sum(alpha)


def q_alpha(model: ModelSymbol, alpha, b: SymPoly) -> SymPoly:
    """Apply ``(1/alpha!) prod_k (d_k + i t dp/dx_k)^alpha_k`` to ``b``."""
    alpha = tuple(alpha)
    if len(alpha) != model.dims or sum(alpha) < 1:
        raise ValueError("alpha must be a nonzero multiindex of length dims")
    dp = _dp_dx(model)
    it = SymPoly.t(model.dims) * I
    out = b
    for k, a in enumerate(alpha):
        for _ in range(a):
            out = formal_dx(out, k) + it * dp[k] * out
    denom = math.prod(math.factorial(a) for a in alpha)
    return out * Fraction(1, denom)


@lru_cache(maxsize=None)
def compute_b(model: ModelSymbol, m: int) -> SymPoly:
    """Amplitude ``b_m(x, xi, t)`` of the symbol expansion of ``f(P)``."""
    if m < 0:
        raise ValueError("order must be non-negative")
    n = model.dims
    if m == 0:
        return SymPoly.const(1, n)
    rhs = SymPoly.zero(n)
    p_xi_degree = 2
    for order in range(1, min(m, p_xi_degree) + 1):
        prev = compute_b(model, m - order)
        for alpha in _multiindices(n, order):
            coef = _d_xi_p(model, alpha)
            if coef.is_zero():
                continue
            rhs = rhs + coef * q_alpha(model, alpha, prev)
    b = (rhs * I).t_integrate()
    if model.kind == "scalar" and b.t_degree() > 2 * m:
        raise StructureError(f"b_{m} has t-degree {b.t_degree()} > {2 * m}")
    return b


def structure_check(b: SymPoly, m: int) -> dict:
    """Verify the monomial shape of a scalar amplitude ``b_m``.

    Returns a report dict; raises :class:`StructureError` on violation.
    """
    report = {"order": m, "terms": len(b), "t_min": b.t_min_degree(),
              "t_max": b.t_degree(), "passed": True}
    if m == 0:
        if b != SymPoly.const(1, b.dims):
            raise StructureError("b_0 must be 1")
        return report
    if b.is_zero():
        raise StructureError(f"b_{m} vanishes")
    half = (m + 1) // 2  # m = 2M or m = 2M - 1
    lo = half + 1
    hi = 4 * half if m % 2 == 0 else 4 * half - 2
    for mono, _ in b.items():
        if any(j.target != "V" or j.order < 1 for j in mono.jets):
            raise StructureError(f"unexpected jet in {mono}")
        deriv = sum(j.order for j in mono.jets)
        if deriv != m:
            raise StructureError(f"derivative count {deriv} != {m} in {mono}")
        xdeg = mono.xi_degree
        if xdeg % 2 != m % 2:
            raise StructureError(f"xi-degree parity wrong in {mono}")
        n_half = xdeg // 2
        if n_half > (half if m % 2 == 0 else half - 1):
            raise StructureError(f"xi-degree too large in {mono}")
        if n_half + len(mono.jets) != mono.t - half:
            raise StructureError(f"t-power / factor count mismatch in {mono}")
        if not lo <= mono.t <= hi:
            raise StructureError(f"t-power {mono.t} outside [{lo}, {hi}]")
        l = mono.t - m
        if m % 2 == 0 and l >= 0:
            first = sum(1 for j in mono.jets if j.order == 1)
            if xdeg + first < 2 * l - 1:
                raise StructureError(f"degree bound fails in {mono}")
    if m % 2 == 0 and b.t_min_degree() != m // 2 + 1:
        raise StructureError(f"lowest t-degree {b.t_min_degree()} != {m // 2 + 1}")
    return report


def to_integrand(b: SymPoly) -> IntegrandForm:
    """Replace ``t^l`` by ``(1/i)^l f^(l)``."""
    inv_i = GaussianRational(1) / I
    by_order = {}
    for l in range(b.t_degree() + 1):
        c = b.t_coeff(l)
        if not c.is_zero():
            by_order[l] = c * inv_i ** l
    return IntegrandForm(b.dims, by_order)


# -- normalization -----------------------------------------------------------

def f_order_window(k: int) -> tuple:
    """Admissible even f-orders for the hbar^(2k) density."""
    if k == 0:
        return (0,)
    return tuple(range(2 * (k // 2 + 1), 2 * k + 1, 2))


def in_window(g: IntegrandForm) -> bool:
    for l, poly in g.by_order.items():
        for mono, _ in poly.items():
            if mono.xi_degree:
                return False
            d = sum(j.order for j in mono.jets)
            if d % 2 or l not in f_order_window(d // 2):
                return False
    return True


def _shift_momenta(poly: SymPoly) -> SymPoly:
    """Rewrite in eta = xi + a; order-0 a-jets must cancel."""
    n = poly.dims
    out = SymPoly.zero(n)
    for mono, c in poly.items():
        term = SymPoly(n, {mono._replace(xi=(0,) * n): c})
        for k, e in enumerate(mono.xi):
            if e:
                shifted = SymPoly.xi(k, n) - SymPoly.jet(JetSymbol("a", k, (0,) * n), n)
                term = term * shifted ** e
        out = out + term
    for j in out.jets():
        if j.target == "a" and j.order == 0:
            raise NormalizationError("integrand is not a polynomial in xi + a")
    return out


def _gauge_reduce_jet(j: JetSymbol, n: int) -> SymPoly:
    """Coulomb gauge: d_n a_n = -sum_{j<n} d_j a_j, and its derivatives."""
    last = n - 1
    if j.target != "a" or j.comp != last or j.alpha[last] == 0:
        return SymPoly.jet(j, n)
    out = SymPoly.zero(n)
    for c in range(last):
        alpha = list(j.alpha)
        alpha[last] -= 1
        alpha[c] += 1
        out = out - _gauge_reduce_jet(JetSymbol("a", c, tuple(alpha)), n)
    return out


def _gauge_reduce(poly: SymPoly) -> SymPoly:
    n = poly.dims
    rules = {j: _gauge_reduce_jet(j, n) for j in poly.jets()
             if j.target == "a" and j.comp == n - 1 and j.alpha[n - 1] > 0}
    return poly.substitute_jets(rules) if rules else poly


def _eliminate_xi(g: IntegrandForm) -> dict:
    """Drop odd xi-parity and integrate out xi powers.

    Returns ``{(l, jets): coefficient}`` with xi removed.
    """
    acc: dict = {}
    for l, poly in g.by_order.items():
        for mono, c in poly.items():
            if any(e % 2 for e in mono.xi):
                continue
            half = mono.xi_degree // 2
            if half > l:
                raise NormalizationError(
                    f"cannot integrate xi^{mono.xi_degree} against f^({l})")
            factor = 1
            for e in mono.xi:
                factor *= (-1) ** (e // 2) * double_factorial(e - 1)
            key = (l - half, mono.jets)
            val = acc.get(key, GaussianRational(0)) + c * factor
            if val:
                acc[key] = val
            else:
                acc.pop(key, None)
    return acc


def _grade(jets: tuple, l: int, n: int) -> tuple:
    d = [0] * n
    energy = 0
    for j in jets:
        for k in range(n):
            d[k] += j.alpha[k]
        energy += 2 if j.target == "V" else 1
    return tuple(d), energy - 2 * l


def _jet_types(D: tuple, n: int, gauge: bool, magnetic: bool) -> list:
    types = []
    for alpha in itertools.product(*(range(dk + 1) for dk in D)):
        if sum(alpha) == 0:
            continue
        types.append(JetSymbol("V", 0, alpha))
        if magnetic:
            for c in range(n):
                if gauge and c == n - 1 and alpha[n - 1] > 0:
                    continue
                types.append(JetSymbol("a", c, alpha))
    return sorted(types)


def _jet_multisets(D: tuple, types: list, start: int = 0):
    if all(d == 0 for d in D):
        yield ()
        return
    for idx in range(start, len(types)):
        j = types[idx]
        if all(a <= d for a, d in zip(j.alpha, D)):
            rest = tuple(d - a for d, a in zip(D, j.alpha))
            for tail in _jet_multisets(rest, types, idx):
                yield (j,) + tail


def _class_monomials(D, energy, n, gauge, magnetic) -> list:
    out = []
    for jets in _jet_multisets(D, _jet_types(D, n, gauge, magnetic)):
        e = sum(2 if j.target == "V" else 1 for j in jets)
        twice_l = e - energy
        if twice_l >= 0 and twice_l % 2 == 0:
            out.append((twice_l // 2, jets))
    return out


def _poly_to_vec(poly: SymPoly, l: int) -> dict:
    return {(l, mono.jets): c for mono, c in poly.items()}


def _relations(D, energy, n, gauge, magnetic) -> list:
    """All IBP1 relations ``d_k(A) f^(l) + A V_k f^(l+1)`` in one class."""
    rows = []
    for k in range(n):
        if D[k] == 0:
            continue
        Dk = tuple(d - (i == k) for i, d in enumerate(D))
        vk = SymPoly.jet(JetSymbol("V", 0, tuple(int(i == k) for i in range(n))), n)
        for l, jets in _class_monomials(Dk, energy, n, gauge, magnetic):
            A = SymPoly(n, {SymMonomial(0, (0,) * n, jets): 1})
            dA = formal_dx(A, k)
            if gauge:
                dA = _gauge_reduce(dA)
            row = _poly_to_vec(dA, l)
            for key, c in _poly_to_vec(A * vk, l + 1).items():
                row[key] = row.get(key, GaussianRational(0)) + c
            row = {key: c for key, c in row.items() if c}
            if row:
                rows.append(row)
    return rows


def _column_key(col, d_total):
    l, jets = col
    k = d_total // 2
    inside = d_total % 2 == 0 and l in f_order_window(k)
    max_order = max((j.order for j in jets), default=0)
    return (inside, -max_order, -l, jets)


def _rref(rows: list, columns: list) -> list:
    """Row-reduce sparse rows over Q; returns ``[(pivot_col, row)]``."""
    index = {c: i for i, c in enumerate(columns)}
    pivots: list = []
    pending = [dict(r) for r in rows]
    for row in pending:
        for pcol, prow in pivots:
            c = row.get(pcol)
            if c:
                for key, v in prow.items():
                    nv = row.get(key, GaussianRational(0)) - c * v
                    if nv:
                        row[key] = nv
                    else:
                        row.pop(key, None)
        if not row:
            continue
        lead = min(row, key=index.__getitem__)
        inv = GaussianRational(1) / row[lead]
        row = {key: v * inv for key, v in row.items()}
        for i, (pcol, prow) in enumerate(pivots):
            c = prow.get(lead)
            if c:
                for key, v in row.items():
                    nv = prow.get(key, GaussianRational(0)) - c * v
                    if nv:
                        prow[key] = nv
                    else:
                        prow.pop(key, None)
        pivots.append((lead, row))
    return pivots


@lru_cache(maxsize=None)
def _class_basis(D, energy, n, gauge, magnetic):
    monos = _class_monomials(D, energy, n, gauge, magnetic)
    d_total = sum(D)
    columns = sorted(monos, key=lambda col: _column_key(col, d_total))
    rows = _relations(D, energy, n, gauge, magnetic)
    extra = {key for r in rows for key in r} - set(columns)
    if extra:
        raise NormalizationError(f"relation left the graded class: {sorted(extra)[:3]}")
    return tuple(_rref(rows, columns))


def _reduce(vec: dict, pivots) -> dict:
    vec = dict(vec)
    for pcol, prow in pivots:
        c = vec.get(pcol)
        if c:
            for key, v in prow.items():
                nv = vec.get(key, GaussianRational(0)) - c * v
                if nv:
                    vec[key] = nv
                else:
                    vec.pop(key, None)
    return vec


def ibp_normalize(g: IntegrandForm, model: ModelSymbol | None = None,
                  *, strict: bool = True) -> IntegrandForm:
    """Canonical representative modulo integration by parts.

    Steps: shift to ``eta = xi + a`` (magnetic), drop odd xi-parity,
    integrate out xi, apply the Coulomb relation, then reduce every graded
    class against its relation span.  With ``strict`` the result must use
    only the even f-orders of the expected window.
    """
    model = model or ModelSymbol("scalar", g.dims)
    if model.dims != g.dims:
        raise ValueError("model and integrand dimensions differ")
    n = g.dims
    magnetic = model.kind == "magnetic"
    gauge = model.gauge_rules()
    if magnetic:
        g = IntegrandForm(n, {l: _shift_momenta(p) for l, p in g.by_order.items()})
    flat = _eliminate_xi(g)
    if gauge:
        regauged: dict = {}
        for (l, jets), c in flat.items():
            poly = _gauge_reduce(SymPoly(n, {SymMonomial(0, (0,) * n, jets): c}))
            for key, v in _poly_to_vec(poly, l).items():
                nv = regauged.get(key, GaussianRational(0)) + v
                if nv:
                    regauged[key] = nv
                else:
                    regauged.pop(key, None)
        flat = regauged
    for (l, jets) in flat:
        if any(j.order == 0 for j in jets):
            raise NormalizationError("undifferentiated jets are not supported")
    classes: dict = {}
    for (l, jets), c in flat.items():
        classes.setdefault(_grade(jets, l, n), {})[(l, jets)] = c
    result: dict = {}
    for (D, energy), vec in sorted(classes.items()):
        pivots = _class_basis(D, energy, n, gauge, magnetic)
        for (l, jets), c in _reduce(vec, pivots).items():
            mono = SymMonomial(0, (0,) * n, jets)
            result.setdefault(l, {})[mono] = c
    out = IntegrandForm(n, {l: SymPoly(n, terms) for l, terms in result.items()})
    if strict and not in_window(out):
        raise NormalizationError(
            "normal form leaves the even f-order window:\n" + out.render())
    return out


def ibp_equivalent(g1: IntegrandForm, g2: IntegrandForm,
                   model: ModelSymbol | None = None,
                   oracle_potentials=None, test_functions=None,
                   rtol: float = 1e-8, atol: float = 1e-13) -> bool:
    """Decide IBP-equivalence symbolically and cross-check by quadrature.

    The numeric check integrates both forms over phase space for each
    (potential, test function) pair; potentials are 1-D
    :class:`~semispec.potentials.PotentialSpec` objects or, for two
    dimensions, :class:`~semispec.potentials.PlanarField` objects.
    Raises :class:`~semispec.errors.ConsistencyError` if the symbolic and
    numeric verdicts differ.
    """
    from .errors import ConsistencyError

    if g1.dims != g2.dims:
        raise ValueError("integrands have different dims")
    model = model or ModelSymbol("scalar", g1.dims)
    symbolic = (ibp_normalize(g1, model, strict=False)
                == ibp_normalize(g2, model, strict=False))
    if not oracle_potentials:
        return symbolic
    from .phasequad import nu_quad

    numeric = True
    for V in oracle_potentials:
        for f in test_functions:
            a = nu_quad(g1, V, f)
            b = nu_quad(g2, V, f)
            if abs(a - b) > rtol * max(abs(a), abs(b)) + atol:
                numeric = False
    if numeric != symbolic:
        raise ConsistencyError(
            f"symbolic equivalence {symbolic} but quadrature says {numeric}")
    return symbolic
