"""Roots of polynomials over h-series fields (Newton polygon + Newton lifting)."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Sequence

import sympy
from sympy import QQ
from sympy.polys.fields import FracElement
from sympy.polys.rings import PolyElement

from .algebra import AlgebraError, TruncationTooShort, render_coeff
from .series import EXACT, TruncSeries


class RamifiedBranch(AlgebraError):
    """A root needs fractional h-exponents; ``denominator`` is the lattice refinement."""

    def __init__(self, denominator: int, msg: str = ""):
        super().__init__(msg or f"ramified branch: exponents in (1/{denominator})Z")
        self.denominator = denominator


class DegenerateRoot(AlgebraError):
    """Coincident roots at the working truncation."""


class IrrationalBranch(AlgebraError):
    """Leading coefficient of a branch is algebraic over the coefficient field."""


@dataclass(frozen=True)
class PuiseuxRoot:
    series: TruncSeries
    valuation: int

    @property
    def leading(self):
        return self.series.c[self.valuation]

    def sort_key(self):
        return (self.valuation, render_coeff(self.leading))


def lower_hull(points: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    pts = sorted(points)
    hull: list[tuple[int, int]] = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) <= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


@dataclass(frozen=True)
class RootFamily:
    """Conjugate roots sharing a valuation whose leading coefficients solve an
    irreducible edge factor of degree > 1 (not expressible over the field)."""

    valuation: int
    degree: int
    edge_factor: str


def _edge_roots(coeffs: dict[int, Any], irrational: list | None = None) -> list[tuple[Any, int]]:
    """Roots (with multiplicity) of ``sum coeffs[k] t^k`` lying in the coefficient field.

    Irreducible factors of degree > 1 raise :class:`IrrationalBranch`, or are
    appended to ``irrational`` as ``(degree, text)`` when a list is given.
    """
    # any symbolic coefficient fixes the field; the others may be plain scalars
    sample = next((c for c in coeffs.values() if isinstance(c, (PolyElement, FracElement))),
                  next(iter(coeffs.values())))
    t = sympy.Symbol("_t")
    if isinstance(sample, (PolyElement, FracElement)):
        field = sample.field if isinstance(sample, FracElement) else sample.ring.to_field()
        K = QQ.frac_field(*field.symbols)
        expr = sum(sympy.sympify(field(c).as_expr()) * t**k for k, c in coeffs.items())
        back = lambda e: field.from_expr(e)  # noqa: E731
    else:
        K = QQ
        expr = sum(sympy.Rational(int(QQ.convert(c).numerator), int(QQ.convert(c).denominator)) * t**k
                   for k, c in coeffs.items())
        back = lambda e: QQ(int(sympy.fraction(e)[0]), int(sympy.fraction(e)[1]))  # noqa: E731
    poly = sympy.Poly(expr, t, domain=K)
    _, factors = poly.factor_list()
    out = []
    for fac, mult in factors:
        if fac.degree() == 0:
            continue
        if fac.degree() > 1 and irrational is not None:
            irrational.append((fac.degree() * mult, str(fac.as_expr())))
            continue
        if fac.degree() > 1:
            raise IrrationalBranch(f"edge polynomial has irreducible factor {fac.as_expr()}")
        a, b = fac.all_coeffs()
        out.append((back(sympy.together(-K.to_sympy(b) / K.to_sympy(a))), mult))
    return out


def _poly_eval(coeffs: Sequence[TruncSeries], w: TruncSeries) -> TruncSeries:
    acc = TruncSeries.zero()
    for c in reversed(coeffs):
        acc = acc * w + c
    return acc


def newton_polygon_roots(
    F: Sequence[Any], prec_cap: int = 24, families: list | None = None
) -> list[PuiseuxRoot]:
    """All roots of ``F(q) = sum F[k] q^k`` as h-series.

    ``F`` holds h-series (or exact scalars).  Every root is returned with
    its valuation; roots are sorted by ``(valuation, leading coefficient)``.
    ``prec_cap`` bounds the precision for exact inputs.  If ``families`` is a
    list, roots with irrational leading coefficients are reported there as
    :class:`RootFamily` entries instead of raising.
    """
    coeffs = [c if isinstance(c, TruncSeries) else TruncSeries.const(c) for c in F]
    while coeffs and not coeffs[-1].c:
        if not coeffs[-1].is_exact():
            raise TruncationTooShort("leading coefficient vanishes to working order")
        coeffs.pop()
    if not coeffs or len(coeffs) == 1:
        if not coeffs:
            raise ValueError("F is identically zero")
        return []
    roots: list[PuiseuxRoot] = []
    # roots at q = 0 (exactly zero trailing coefficients)
    lo = 0
    while not coeffs[lo].c:
        if not coeffs[lo].is_exact():
            raise TruncationTooShort("trailing coefficient vanishes to working order")
        lo += 1
    if lo:
        raise DegenerateRoot(f"q = 0 is a root of multiplicity {lo}")
    pts = [(k, c.valuation()) for k, c in enumerate(coeffs) if c.c]
    hull = lower_hull(pts)
    for (k1, v1), (k2, v2) in zip(hull, hull[1:]):
        slope = Fraction(v2 - v1, k2 - k1)
        if slope.denominator != 1:
            raise RamifiedBranch(slope.denominator)
        e = -int(slope)
        m = v1 + e * k1
        edge = {}
        for k in range(k1, k2 + 1):
            c = coeffs[k]
            if c.c and c.valuation() + e * k == m:
                edge[k - k1] = c.c[c.valuation()]
        irr: list | None = [] if families is not None else None
        for r, mult in _edge_roots(edge, irr):
            if mult > 1:
                raise DegenerateRoot(f"repeated leading coefficient {render_coeff(r)}")
            roots.append(PuiseuxRoot(_lift(coeffs, e, m, r, prec_cap).shift(e), e))
        for deg, text in irr or ():
            families.append(RootFamily(e, deg, text))
    roots.sort(key=PuiseuxRoot.sort_key)
    return roots


def _lift(coeffs: list[TruncSeries], e: int, m: int, r: Any, prec_cap: int) -> TruncSeries:
    """Newton iteration for ``G(w) = h^-m F(h^e w)`` from ``w = r + O(h)``."""
    G = [c.shift(e * k - m) for k, c in enumerate(coeffs)]
    dG = [c.scale(k) for k, c in enumerate(G)][1:]
    limit = min(min(c.prec for c in G), prec_cap)
    w = TruncSeries.const(r)
    P = 1
    while True:
        val = _poly_eval(G, w).truncate(limit)
        der = _poly_eval(dG, w).truncate(limit)
        if der.valuation() != 0:
            raise DegenerateRoot("derivative vanishes at the leading coefficient")
        if val.valuation() < P:
            raise AlgebraError("Newton step lost the root")
        new_p = min(2 * P, limit)
        corr = val * der.inverse()
        w = TruncSeries((w - corr).c, EXACT).truncate(new_p)
        w = TruncSeries(w.c, EXACT)
        if new_p >= limit:
            return TruncSeries(w.c, limit)
        P = new_p
