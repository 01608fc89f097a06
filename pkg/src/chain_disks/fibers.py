"""Fibers of the curve functions ``z_j`` and their plus/minus sheet split.

The fiber of ``z_j`` through a point ``b`` is the set of roots of
``q^r (z_j(q) - z_j(b))`` where ``r`` is the pole order of ``z_j`` at
``p = 0``.  Roots heading to ``p = inf`` (negative h-valuation) lie on the
sheets meeting at the first end; roots heading to ``p = 0`` on those meeting
at the last end.  Roots of valuation zero are the Gaussian pair: the base
point stays on its own side and its partner goes to the other.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

from .algebra import AlgebraError, render_coeff
from .laurent import PLaurent
from .puiseux import (
    DegenerateRoot,
    PuiseuxRoot,
    RootFamily,
    newton_polygon_roots,
)
from .series import TruncSeries
from .spectral_curve import POLY, CurveData


class DegenerateFiber(AlgebraError):
    """Coincident or unclassifiable fiber roots at the working truncation."""


@dataclass
class FiberSet:
    j: int
    base: TruncSeries
    plus_points: list[TruncSeries]
    minus_points: list[TruncSeries]
    plus_families: list[RootFamily] = field(default_factory=list)
    minus_families: list[RootFamily] = field(default_factory=list)
    polynomial: list[TruncSeries] = field(default_factory=list)

    @property
    def n_plus(self) -> int:
        return len(self.plus_points) + sum(f.degree for f in self.plus_families)

    @property
    def n_minus(self) -> int:
        return len(self.minus_points) + sum(f.degree for f in self.minus_families)

    @property
    def explicit(self) -> bool:
        return not (self.plus_families or self.minus_families)

    def summary(self) -> dict:
        return {
            "j": self.j,
            "plus": [p.render() for p in self.plus_points],
            "minus": [p.render() for p in self.minus_points],
            "plus_families": [(f.valuation, f.degree, f.edge_factor) for f in self.plus_families],
            "minus_families": [(f.valuation, f.degree, f.edge_factor) for f in self.minus_families],
        }


def _to_field(s: TruncSeries) -> TruncSeries:
    out = {}
    for k, c in s.c.items():
        out[k] = c.ring.to_field()(c) if hasattr(c, "ring") and hasattr(c.ring, "to_field") else c
    return TruncSeries(out, s.prec)


def fiber_polynomial(z: PLaurent, value: TruncSeries) -> list[TruncSeries]:
    """Coefficients (low to high) of ``q^r (z(q) - value)``."""
    lo = min(z.min_exp, 0)
    hi = max(z.max_exp, 0)
    shifted = z - PLaurent.const(value)
    return [shifted[k] for k in range(lo, hi + 1)]


def fiber_points(curve: CurveData, j: int, base: Any, prec_cap: int | None = None) -> FiberSet:
    """Roots of ``z_j(q) = z_j(base)`` split into plus and minus sets."""
    if not isinstance(base, TruncSeries):
        base = TruncSeries.const(base)
    z = curve.zk(j)
    F = fiber_polynomial(z, z.evaluate(base))
    if curve.model.mode == POLY:
        F = [_to_field(c) for c in F]
    cap = prec_cap if prec_cap is not None else curve.H + 2
    fams: list[RootFamily] = []
    try:
        roots = newton_polygon_roots(F, prec_cap=cap, families=fams)
    except DegenerateRoot as exc:
        raise DegenerateFiber(str(exc)) from None
    bval = base.valuation()
    blead = base.c[bval]
    plus: list[TruncSeries] = []
    minus: list[TruncSeries] = []
    for r in roots:
        side = _side(r, bval, blead)
        (plus if side > 0 else minus).append(r.series)
    pf = [f for f in fams if f.valuation < 0]
    mf = [f for f in fams if f.valuation > 0]
    if any(f.valuation == 0 for f in fams):
        raise DegenerateFiber("irrational roots of valuation zero cannot be assigned a side")
    fs = FiberSet(j, base, plus, minus, pf, mf, F)
    s, r = curve.s(j), curve.r(j)
    if fs.n_plus != s or fs.n_minus != r:
        raise DegenerateFiber(
            f"color {j}: found {fs.n_plus} plus / {fs.n_minus} minus roots, expected {s} / {r}"
        )
    return fs


def _side(root: PuiseuxRoot, bval: int, blead: Any) -> int:
    if root.valuation < 0:
        return 1
    if root.valuation > 0:
        return -1
    if bval != 0:
        raise DegenerateFiber("valuation-zero root with a base off the Gaussian pair")
    same = root.leading == blead
    # the base keeps its own side; valuation-zero bases count as plus
    return 1 if same else -1


def fiber_residuals(curve: CurveData, fs: FiberSet) -> list[TruncSeries]:
    """``z_j(q) - z_j(base)`` for every explicit root."""
    z = curve.zk(fs.j)
    zb = z.evaluate(fs.base)
    return [z.evaluate(q) - zb for q in fs.plus_points + fs.minus_points]


def completeness_residual(fs: FiberSet) -> list[TruncSeries]:
    """``prod (q - root)`` against the monic fiber polynomial; explicit fibers only."""
    if not fs.explicit:
        raise DegenerateFiber("completeness product needs every root explicitly")
    prod_ = [TruncSeries.const(1)]
    for root in fs.plus_points + fs.minus_points:
        nxt = [TruncSeries.zero()] * (len(prod_) + 1)
        for i, c in enumerate(prod_):
            nxt[i + 1] = nxt[i + 1] + c
            nxt[i] = nxt[i] - c * root
        prod_ = nxt
    F = fs.polynomial
    lead = F[-1].inverse()
    return [a - b * lead for a, b in zip(prod_, F)]


def family_quotient(fs: FiberSet) -> list[TruncSeries]:
    """Fiber polynomial divided by the linear factors of the explicit roots.

    The quotient (monic, low to high) carries the conjugate families.
    """
    F = [c * fs.polynomial[-1].inverse() for c in fs.polynomial]
    for root in fs.plus_points + fs.minus_points:
        n = len(F) - 1
        q = [TruncSeries.zero()] * n
        acc = F[n]
        for k in range(n - 1, -1, -1):
            q[k] = acc
            acc = F[k] + acc * root
        if acc.c:
            raise DegenerateFiber(f"root leaves remainder {acc.render()}")
        F = q
    return F


@dataclass
class InjectivityReport:
    k: int
    passed: bool
    witnesses: list[dict]


def verify_injectivity(curve: CurveData, k: int, bases: Sequence[Any]) -> InjectivityReport:
    """Check that ``z_1`` separates the plus points of each ``z_k``-fiber.

    Plus points on one sheet share their leading coefficient; such a pair
    must have equal ``z_1``.  Points on different plus sheets must have
    distinct ``z_1`` (the interpolation nodes of the recursion).
    """
    wit = []
    ok = True
    z1 = curve.zk(1)
    for b in bases:
        fs = fiber_points(curve, k, b)
        xs = [z1.evaluate(q) for q in fs.plus_points]
        leads = [_lead(q) for q in fs.plus_points]
        for a in range(len(xs)):
            for c in range(a + 1, len(xs)):
                same_sheet = leads[a] == leads[c]
                equal_x = not (xs[a] - xs[c]).c
                good = same_sheet == equal_x
                ok &= good
                wit.append({
                    "base": _render(b),
                    "pair": (a, c),
                    "same_sheet": same_sheet,
                    "equal_z1": equal_x,
                    "ok": good,
                })
        if len(xs) == 1:
            wit.append({"base": _render(b), "pair": None, "ok": True})
    return InjectivityReport(k, ok, wit)


def _lead(q: TruncSeries):
    v = q.valuation()
    return (v, render_coeff(q.c[v]))


def _render(b: Any) -> str:
    return b.render() if isinstance(b, TruncSeries) else str(b)
