"""Exact sparse polynomials in t, xi and formal jets of V and a_j.

Coefficients are Gaussian rationals, so the amplitude recursion and all
integration-by-parts bookkeeping are exact.  A polynomial is a mapping
from :class:`SymMonomial` keys to :class:`GaussianRational` values; zero
coefficients are never stored.

Textual form (one term per summand)::

    (-1/8)*t^4*xi1^2*V[1]^2 + (1/2*i)*t^2*xi1*V[1]

Jets of ``V`` print as ``V[alpha]`` and jets of the magnetic component
``a_j`` as ``a{j+1}[alpha]``, with ``alpha`` comma separated in several
dimensions.
"""
from __future__ import annotations

import json
import math
import re
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, NamedTuple

import numpy as np

__all__ = [
    "GaussianRational", "I", "JetSymbol", "SymMonomial", "SymPoly",
    "add", "mul", "formal_dx", "formal_dxi", "eval_numeric",
    "parse", "render", "to_json", "from_json", "to_latex",
]


class GaussianRational:
    """Exact complex rational ``re + im*i``."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def coerce(cls, value) -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        if isinstance(value, (int, Rational)):
            return cls(value)
        if isinstance(value, str):
            return _parse_coeff(value)
        raise TypeError(f"cannot convert {type(value).__name__} exactly")

    def __add__(self, other):
        o = GaussianRational.coerce(other)
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = GaussianRational.coerce(other)
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return GaussianRational.coerce(other) - self

    def __mul__(self, other):
        o = GaussianRational.coerce(other)
        return GaussianRational(self.re * o.re - self.im * o.im,
                                self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = GaussianRational.coerce(other)
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("division by zero Gaussian rational")
        return GaussianRational((self.re * o.re + self.im * o.im) / den,
                                (self.im * o.re - self.re * o.im) / den)

    def __rtruediv__(self, other):
        return GaussianRational.coerce(other) / self

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __pow__(self, n: int):
        if n < 0:
            return GaussianRational(1) / self ** (-n)
        out = GaussianRational(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        try:
            o = GaussianRational.coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    @property
    def is_real(self) -> bool:
        return self.im == 0

    def __repr__(self):
        return f"GaussianRational({_coeff_str(self)})"

    def __str__(self):
        return _coeff_str(self)


I = GaussianRational(0, 1)


class JetSymbol(NamedTuple):
    """Formal derivative ``d^alpha`` of ``V`` (target 'V') or of ``a_comp``."""

    target: str
    comp: int
    alpha: tuple

    @classmethod
    def V(cls, *alpha):
        return cls("V", 0, tuple(alpha))

    @classmethod
    def a(cls, comp, *alpha):
        return cls("a", comp, tuple(alpha))

    @property
    def order(self) -> int:
        return sum(self.alpha)

    def bump(self, k: int) -> "JetSymbol":
        alpha = list(self.alpha)
        alpha[k] += 1
        return JetSymbol(self.target, self.comp, tuple(alpha))


class SymMonomial(NamedTuple):
    t: int
    xi: tuple
    jets: tuple  # sorted tuple of JetSymbol, repeats allowed

    @property
    def xi_degree(self) -> int:
        return sum(self.xi)


def _merge(m1: SymMonomial, m2: SymMonomial) -> SymMonomial:
    xi = tuple(a + b for a, b in zip(m1.xi, m2.xi))
    if not m1.jets:
        jets = m2.jets
    elif not m2.jets:
        jets = m1.jets
    else:
        jets = tuple(sorted(m1.jets + m2.jets))
    return SymMonomial(m1.t + m2.t, xi, jets)


class SymPoly:
    """Sparse polynomial over the Gaussian rationals.

    Parameters
    ----------
    dims : int
        Number of space dimensions (length of every xi / alpha tuple).
    terms : mapping, optional
        ``SymMonomial -> coefficient``; zero coefficients are pruned.
    """

    __slots__ = ("dims", "_terms", "_hash")

    def __init__(self, dims: int, terms: Mapping | None = None):
        self.dims = int(dims)
        clean = {}
        if terms:
            for mono, c in terms.items():
                c = GaussianRational.coerce(c)
                if c:
                    if len(mono.xi) != self.dims:
                        raise ValueError("monomial xi length does not match dims")
                    clean[mono] = c
        self._terms = clean
        self._hash = None

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, dims):
        return cls(dims)

    @classmethod
    def const(cls, c, dims):
        return cls(dims, {SymMonomial(0, (0,) * dims, ()): c})

    @classmethod
    def t(cls, dims, power=1):
        return cls(dims, {SymMonomial(power, (0,) * dims, ()): 1})

    @classmethod
    def xi(cls, k, dims, power=1):
        xi = [0] * dims
        xi[k] = power
        return cls(dims, {SymMonomial(0, tuple(xi), ()): 1})

    @classmethod
    def jet(cls, jet: JetSymbol, dims, power=1):
        if len(jet.alpha) != dims:
            raise ValueError("jet multiindex length does not match dims")
        return cls(dims, {SymMonomial(0, (0,) * dims, (jet,) * power): 1})

    # -- container protocol -----------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return sorted(self._terms.items())

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def coeff(self, mono: SymMonomial) -> GaussianRational:
        return self._terms.get(mono, GaussianRational(0))

    def __eq__(self, other):
        if isinstance(other, SymPoly):
            return self.dims == other.dims and self._terms == other._terms
        if isinstance(other, (int, Rational, GaussianRational)):
            return self == SymPoly.const(other, self.dims)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.dims, frozenset(self._terms.items())))
        return self._hash

    def __repr__(self):
        return f"SymPoly(dims={self.dims}, {render(self)!r})"

    def __str__(self):
        return render(self)

    # -- arithmetic ---------------------------------------------------------
    def _lift(self, other) -> "SymPoly":
        if isinstance(other, SymPoly):
            if other.dims != self.dims:
                raise ValueError(f"dimension mismatch: {self.dims} vs {other.dims}")
            return other
        return SymPoly.const(other, self.dims)

    def __add__(self, other):
        return add(self, self._lift(other))

    __radd__ = __add__

    def __neg__(self):
        return SymPoly(self.dims, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return add(self, -self._lift(other))

    def __rsub__(self, other):
        return add(self._lift(other), -self)

    def __mul__(self, other):
        if isinstance(other, SymPoly):
            return mul(self, other)
        c = GaussianRational.coerce(other)
        return SymPoly(self.dims, {m: v * c for m, v in self._terms.items()})

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = SymPoly.const(1, self.dims)
        for _ in range(n):
            out = out * self
        return out

    # -- structure ----------------------------------------------------------
    def t_degree(self) -> int:
        return max((m.t for m in self._terms), default=-1)

    def t_min_degree(self) -> int:
        return min((m.t for m in self._terms), default=-1)

    def t_coeff(self, power: int) -> "SymPoly":
        """Coefficient of ``t**power`` as a t-free polynomial."""
        return SymPoly(self.dims, {m._replace(t=0): c for m, c in self._terms.items()
                                   if m.t == power})

    def t_integrate(self) -> "SymPoly":
        """Antiderivative in t vanishing at t = 0."""
        return SymPoly(self.dims, {m._replace(t=m.t + 1): c / (m.t + 1)
                                   for m, c in self._terms.items()})

    def jets(self) -> set:
        return {j for m in self._terms for j in m.jets}

    def map_terms(self, fn) -> "SymPoly":
        """Rebuild from ``fn(mono, coeff) -> iterable of (mono, coeff)``."""
        acc: dict = {}
        for m, c in self._terms.items():
            for m2, c2 in fn(m, c):
                _accumulate(acc, m2, c2)
        return SymPoly(self.dims, acc)

    def substitute_jets(self, rules: Mapping) -> "SymPoly":
        """Replace every jet found in ``rules`` by the given polynomial."""
        out = SymPoly.zero(self.dims)
        for m, c in self._terms.items():
            kept = tuple(j for j in m.jets if j not in rules)
            factor = SymPoly(self.dims, {m._replace(jets=kept): c})
            for j in m.jets:
                if j in rules:
                    factor = factor * rules[j]
            out = out + factor
        return out


def _accumulate(acc: dict, mono: SymMonomial, c: GaussianRational):
    if mono in acc:
        s = acc[mono] + c
        if s:
            acc[mono] = s
        else:
            del acc[mono]
    elif c:
        acc[mono] = c


def add(p: SymPoly, q: SymPoly) -> SymPoly:
    """Coefficientwise sum."""
    if p.dims != q.dims:
        raise ValueError(f"dimension mismatch: {p.dims} vs {q.dims}")
    acc = dict(p._terms)
    for m, c in q._terms.items():
        _accumulate(acc, m, c)
    return SymPoly(p.dims, acc)


def mul(p: SymPoly, q: SymPoly) -> SymPoly:
    """Distributed product."""
    if p.dims != q.dims:
        raise ValueError(f"dimension mismatch: {p.dims} vs {q.dims}")
    acc: dict = {}
    for m1, c1 in p._terms.items():
        for m2, c2 in q._terms.items():
            _accumulate(acc, _merge(m1, m2), c1 * c2)
    return SymPoly(p.dims, acc)


def formal_dx(p: SymPoly, k: int) -> SymPoly:
    """Total derivative d/dx_k; t and xi are constants, jets get bumped."""
    if not 0 <= k < p.dims:
        raise ValueError(f"axis {k} out of range for dims={p.dims}")

    def leibniz(m, c):
        jets = m.jets
        for i, j in enumerate(jets):
            if i and jets[i - 1] == j:
                continue  # repeated factor: count multiplicity once
            mult = jets.count(j)
            rest = jets[:i] + jets[i + 1:]
            yield m._replace(jets=tuple(sorted(rest + (j.bump(k),)))), c * mult

    return p.map_terms(leibniz)


def formal_dxi(p: SymPoly, k: int) -> SymPoly:
    """Partial derivative in xi_k."""
    if not 0 <= k < p.dims:
        raise ValueError(f"axis {k} out of range for dims={p.dims}")

    def d(m, c):
        e = m.xi[k]
        if e:
            xi = list(m.xi)
            xi[k] -= 1
            yield m._replace(xi=tuple(xi)), c * e

    return p.map_terms(d)


def eval_numeric(p: SymPoly, xi, t, jet_values: Mapping):
    """Evaluate with float/complex inputs.

    ``xi`` is a length-``dims`` sequence, ``t`` a number and ``jet_values``
    maps every jet occurring in ``p`` to a value.  Arrays broadcast.
    """
    xi = list(xi) if np.ndim(xi) else [xi]
    if len(xi) != p.dims:
        raise ValueError("xi has wrong length")
    missing = p.jets() - set(jet_values)
    if missing:
        raise KeyError(f"missing jet values: {sorted(missing)}")
    total = 0
    for m, c in p._terms.items():
        val = complex(c)
        if m.t:
            val = val * t ** m.t
        for k, e in enumerate(m.xi):
            if e:
                val = val * xi[k] ** e
        for j in m.jets:
            val = val * jet_values[j]
        total = total + val
    return total


# -- serialization ---------------------------------------------------------

def _frac_str(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _coeff_str(c: GaussianRational) -> str:
    if c.im == 0:
        return _frac_str(c.re)
    im = "i" if abs(c.im) == 1 else f"{_frac_str(abs(c.im))}*i"
    if c.re == 0:
        return im if c.im > 0 else f"-{im}"
    return f"{_frac_str(c.re)}{'+' if c.im > 0 else '-'}{im}"


_COEFF_RE = re.compile(
    r"^(?:(?P<re>[+-]?\d+(?:/\d+)?)(?=$|[+-]))?"
    r"(?:(?P<isign>[+-]?)(?:(?P<im>\d+(?:/\d+)?)\*)?i)?$")


def _parse_coeff(s: str) -> GaussianRational:
    s = s.replace(" ", "")
    m = _COEFF_RE.match(s)
    if not m or not s:
        raise ValueError(f"bad coefficient {s!r}")
    re_part = Fraction(m.group("re")) if m.group("re") else Fraction(0)
    im_part = Fraction(0)
    if s.endswith("i"):
        im_part = Fraction(m.group("im")) if m.group("im") else Fraction(1)
        if m.group("isign") == "-":
            im_part = -im_part
    return GaussianRational(re_part, im_part)


def _jet_str(j: JetSymbol) -> str:
    alpha = ",".join(str(a) for a in j.alpha)
    return f"V[{alpha}]" if j.target == "V" else f"a{j.comp + 1}[{alpha}]"


def _mono_factors(m: SymMonomial) -> list:
    out = []
    if m.t:
        out.append("t" if m.t == 1 else f"t^{m.t}")
    for k, e in enumerate(m.xi):
        if e:
            out.append(f"xi{k + 1}" if e == 1 else f"xi{k + 1}^{e}")
    jets = m.jets
    seen = []
    for j in jets:
        if j in seen:
            continue
        seen.append(j)
        e = jets.count(j)
        out.append(_jet_str(j) if e == 1 else f"{_jet_str(j)}^{e}")
    return out


def render(p: SymPoly) -> str:
    """Deterministic text form, terms in monomial order."""
    if p.is_zero():
        return "0"
    parts = []
    for m, c in p.items():
        parts.append("*".join([f"({_coeff_str(c)})"] + _mono_factors(m)))
    return " + ".join(parts)


_FACTOR_RE = re.compile(
    r"^(?:(?P<t>t)|xi(?P<xi>\d+)|(?P<jet>V|a(?P<comp>\d+))\[(?P<alpha>[\d,]+)\])"
    r"(?:\^(?P<exp>\d+))?$")


def parse(text: str, dims: int) -> SymPoly:
    """Inverse of :func:`render`."""
    text = text.strip()
    if text == "0":
        return SymPoly.zero(dims)
    acc: dict = {}
    for term in _split_terms(text):
        if not term.startswith("("):
            raise ValueError(f"term must start with a coefficient: {term!r}")
        close = term.index(")")
        coeff = _parse_coeff(term[1:close])
        rest = term[close + 1:]
        t = 0
        xi = [0] * dims
        jets = []
        for factor in filter(None, rest.split("*")):
            fm = _FACTOR_RE.match(factor)
            if not fm:
                raise ValueError(f"bad factor {factor!r}")
            e = int(fm.group("exp") or 1)
            if fm.group("t"):
                t += e
            elif fm.group("xi"):
                xi[int(fm.group("xi")) - 1] += e
            else:
                alpha = tuple(int(a) for a in fm.group("alpha").split(","))
                if len(alpha) != dims:
                    raise ValueError(f"jet {factor!r} has wrong dimension")
                if fm.group("jet") == "V":
                    j = JetSymbol("V", 0, alpha)
                else:
                    j = JetSymbol("a", int(fm.group("comp")) - 1, alpha)
                jets.extend([j] * e)
        _accumulate(acc, SymMonomial(t, tuple(xi), tuple(sorted(jets))), coeff)
    return SymPoly(dims, acc)


def _split_terms(text: str) -> list:
    terms, depth, cur = [], 0, []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if depth == 0 and text.startswith(" + ", i):
            terms.append("".join(cur).strip())
            cur = []
            i += 3
            continue
        cur.append(ch)
        i += 1
    terms.append("".join(cur).strip())
    return [t for t in terms if t]


def to_json(p: SymPoly) -> str:
    terms = []
    for m, c in p.items():
        terms.append({
            "coeff": {"re": _frac_str(c.re), "im": _frac_str(c.im)},
            "t": m.t,
            "xi": list(m.xi),
            "jets": [{"target": j.target, "comp": j.comp, "alpha": list(j.alpha)}
                     for j in m.jets],
        })
    return json.dumps({"dims": p.dims, "terms": terms}, indent=1)


def from_json(text: str) -> SymPoly:
    data = json.loads(text)
    acc: dict = {}
    for term in data["terms"]:
        c = GaussianRational(Fraction(term["coeff"]["re"]), Fraction(term["coeff"]["im"]))
        jets = tuple(sorted(JetSymbol(j["target"], j["comp"], tuple(j["alpha"]))
                            for j in term["jets"]))
        _accumulate(acc, SymMonomial(term["t"], tuple(term["xi"]), jets), c)
    return SymPoly(data["dims"], acc)


def _latex_frac(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return rf"\frac{{{q.numerator}}}{{{q.denominator}}}"


def _latex_jet(j: JetSymbol, dims: int) -> str:
    base = "V" if j.target == "V" else f"a_{{{j.comp + 1}}}"
    if j.order == 0:
        return base
    if dims == 1:
        n = j.alpha[0]
        if j.target == "V" and n <= 3:
            return "V" + "'" * n
        return f"{base}^{{({n})}}"
    sub = "".join(str(k + 1) * a for k, a in enumerate(j.alpha))
    return rf"\partial_{{{sub}}}{base}"


def to_latex(p: SymPoly) -> str:
    """LaTeX rendering for documentation."""
    if p.is_zero():
        return "0"
    pieces = []
    for m, c in p.items():
        factors = []
        if m.t:
            factors.append("t" if m.t == 1 else f"t^{{{m.t}}}")
        for k, e in enumerate(m.xi):
            if e:
                name = r"\xi" if p.dims == 1 else rf"\xi_{{{k + 1}}}"
                factors.append(name if e == 1 else f"{name}^{{{e}}}")
        seen = []
        for j in m.jets:
            if j in seen:
                continue
            seen.append(j)
            e = m.jets.count(j)
            s = _latex_jet(j, p.dims)
            factors.append(s if e == 1 else rf"\left({s}\right)^{{{e}}}")
        body = " ".join(factors)
        if c.im == 0:
            q = c.re
            sign = "-" if q < 0 else "+"
            mag = abs(q)
            coef = "" if (mag == 1 and body) else _latex_frac(mag)
        elif c.re == 0:
            q = c.im
            sign = "-" if q < 0 else "+"
            mag = abs(q)
            coef = ("" if mag == 1 else _latex_frac(mag)) + " i"
        else:
            sign = "+"
            coef = rf"\left({_latex_frac(c.re)} {'+' if c.im > 0 else '-'} "\
                   rf"{_latex_frac(abs(c.im))} i\right)"
        pieces.append((sign, f"{coef} {body}".strip()))
    out = ("-" if pieces[0][0] == "-" else "") + pieces[0][1]
    for sign, s in pieces[1:]:
        out += f" {sign} {s}"
    return out


def monomial_count(polys: Iterable[SymPoly]) -> int:
    return sum(len(p) for p in polys)


def double_factorial(n: int) -> int:
    """(n)!! with the convention (-1)!! = 0!! = 1."""
    return math.prod(range(n, 0, -2)) if n > 0 else 1
