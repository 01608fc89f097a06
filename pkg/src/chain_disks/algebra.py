"""Exact coefficient domains.

Three coefficient domains are used throughout the package:

* ``NUM``  -- exact rationals (couplings instantiated at rational values),
* ``POLY`` -- polynomials in the coupling symbols with rational coefficients,
* ``FRAC`` -- ratios of such polynomials, kept in lowest terms.

The rational numbers are gmpy2 ``mpq`` values (through sympy's ``QQ``) and the
polynomial/fraction domains are sympy's sparse ``PolyRing``/``FracField``.
Nothing in this module ever touches a float.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Sequence

from sympy import QQ
from sympy.polys.fields import FracElement, FracField
from sympy.polys.orderings import grlex
from sympy.polys.rings import PolyElement, PolyRing

Rat = type(QQ(1, 2))

NUM = "num"
POLY = "poly"
FRAC = "frac"


class AlgebraError(ArithmeticError):
    """Base class for exact-arithmetic failures."""


class NonInvertibleLeading(AlgebraError):
    """Leading coefficient has no inverse in the active coefficient domain."""


class DivisionByZeroSeries(AlgebraError, ZeroDivisionError):
    """Divisor vanishes to its known precision."""


class TruncationTooShort(AlgebraError):
    """The requested quantity cannot be resolved at the working truncation."""


_RAT_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")


def parse_rat(text: str | int | Any) -> Rat:
    """Parse ``"num/den"`` or an integer into an exact rational.

    Float literals such as ``"1.5"`` are rejected on purpose.
    """
    if isinstance(text, Rat):
        return text
    if isinstance(text, bool):
        raise ValueError(f"not a rational: {text!r}")
    if isinstance(text, int):
        return QQ(text)
    if not isinstance(text, str):
        raise ValueError(f"not a rational: {text!r}")
    m = _RAT_RE.match(text)
    if m is None:
        raise ValueError(f"not an exact rational literal: {text!r}")
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise ValueError(f"zero denominator in {text!r}")
    return QQ(num, den)


def rat_str(r: Any) -> str:
    r = QQ.convert(r)
    if r.denominator == 1:
        return str(r.numerator)
    return f"{r.numerator}/{r.denominator}"


def is_zero(c: Any) -> bool:
    if hasattr(c, "is_zero_series"):
        return c.is_zero_series()
    return not c


@dataclass(frozen=True)
class CoeffDomain:
    """A coefficient domain tag plus the sympy structure backing it."""

    kind: str
    symbols: tuple[str, ...] = ()
    ring: PolyRing | None = None
    field: FracField | None = None

    @classmethod
    def num(cls) -> "CoeffDomain":
        return cls(NUM)

    @classmethod
    def poly(cls, symbols: Sequence[str]) -> "CoeffDomain":
        R = PolyRing(tuple(symbols), QQ, grlex)
        return cls(POLY, tuple(symbols), R, FracField(tuple(symbols), QQ, grlex))

    @classmethod
    def frac(cls, symbols: Sequence[str]) -> "CoeffDomain":
        R = PolyRing(tuple(symbols), QQ, grlex)
        return cls(FRAC, tuple(symbols), R, FracField(tuple(symbols), QQ, grlex))

    def to_frac(self) -> "CoeffDomain":
        if self.kind == NUM:
            raise AlgebraError("NUM domain has no fraction field beyond QQ")
        return CoeffDomain(FRAC, self.symbols, self.ring, self.field)

    @property
    def zero(self):
        return self.convert(0)

    @property
    def one(self):
        return self.convert(1)

    def gens(self) -> tuple:
        if self.kind == POLY:
            return self.ring.gens
        if self.kind == FRAC:
            return self.field.gens
        return ()

    def gen(self, name: str):
        return self.gens()[self.symbols.index(name)]

    def convert(self, c: Any):
        if self.kind == NUM:
            if isinstance(c, (PolyElement, FracElement)):
                raise AlgebraError("cannot convert symbolic value to NUM")
            return QQ.convert(c) if not isinstance(c, str) else parse_rat(c)
        target = self.ring if self.kind == POLY else self.field
        if isinstance(c, str):
            c = parse_rat(c)
        if isinstance(c, FracElement) and self.kind == POLY:
            if c.denom.is_ground:
                return self.ring(c.numer) * self.ring(QQ(1) / c.denom.LC)
            raise NonInvertibleLeading(f"{c} is not a polynomial")
        if isinstance(c, PolyElement):
            return c if c.ring == target else target(c)
        if isinstance(c, FracElement):
            return c
        return target(QQ.convert(c))

    def inverse(self, c: Any):
        """Multiplicative inverse, or ``NonInvertibleLeading``."""
        if is_zero(c):
            raise DivisionByZeroSeries("inverse of zero")
        if hasattr(c, "inverse"):
            return c.inverse()
        if isinstance(c, PolyElement):
            if c.is_ground:
                return c.ring(QQ(1) / c.LC)
            raise NonInvertibleLeading(
                f"leading coefficient {c} is not a unit in POLY mode; switch to FRAC"
            )
        if isinstance(c, int):
            return QQ(1, c)
        return 1 / c

    def render(self, c: Any) -> str:
        return render_coeff(c)


def _poly_terms_str(p: PolyElement) -> str:
    if not p:
        return "0"
    names = p.ring.symbols
    parts = []
    for monom, coeff in sorted(p.terms(), key=lambda t: (-sum(t[0]), tuple(-e for e in t[0]))):
        mono = "*".join(
            f"{names[i]}^{e}" if e > 1 else f"{names[i]}"
            for i, e in enumerate(monom)
            if e
        )
        c = rat_str(coeff)
        if not mono:
            parts.append(c)
        elif c == "1":
            parts.append(mono)
        elif c == "-1":
            parts.append("-" + mono)
        else:
            parts.append(f"{c}*{mono}")
    out = " + ".join(parts)
    return out.replace("+ -", "- ")


def render_coeff(c: Any) -> str:
    """Canonical text for a coefficient: sorted monomials, ``num/den`` rationals."""
    if isinstance(c, PolyElement):
        return _poly_terms_str(c)
    if isinstance(c, FracElement):
        if c.denom == 1:
            return _poly_terms_str(c.numer)
        return f"({_poly_terms_str(c.numer)})/({_poly_terms_str(c.denom)})"
    if hasattr(c, "render"):
        return c.render()
    return rat_str(c)


def parse_poly(text: str, dom: CoeffDomain):
    """Inverse of :func:`render_coeff` for POLY/NUM values."""
    text = text.strip()
    if dom.kind == NUM:
        return parse_rat(text)
    if text == "0":
        return dom.zero
    gens = dict(zip(dom.symbols, dom.ring.gens))
    total = dom.ring.zero
    norm = text.replace("- ", "+ -")
    for raw in norm.split(" + "):
        raw = raw.strip()
        if not raw:
            continue
        sign = 1
        if raw.startswith("-") and not _RAT_RE.match(raw):
            sign, raw = -1, raw[1:]
        term = dom.ring.one * sign
        for factor in raw.split("*"):
            if factor in gens:
                term *= gens[factor]
            elif "^" in factor:
                name, e = factor.split("^")
                term *= gens[name] ** int(e)
            else:
                term *= parse_rat(factor)
        total += term
    return total
