"""The printed three-matrix moment table, kept as data, and its audit.

Model: cubic potentials, quadratic couplings ``(1, 3, 1)``, chain coupling 1.
Cells are transcribed as printed, including entries that cannot be right; the
audit says which, and why, instead of correcting them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

from .algebra import CoeffDomain, is_zero, parse_poly, render_coeff
from .tables import MomentTable, calibration_hash

SYMBOLS = ("g1", "g2", "g3")


@dataclass(frozen=True)
class PrintedCell:
    n: tuple[int, ...]
    v: int
    text: str
    source: str = "table"  # "table" or "display" (a separately displayed value)


def _row(n, *vals):
    return [PrintedCell(n, v, t) for v, t in enumerate(vals, start=1)]


PRINTED: list[PrintedCell] = [
    *_row((1, 0, 0), "1", "-4*g3 - g2 - 2*g3",
          "-128*g1^3 - 64*g1^2*g2 - 20*g1*g2^2 - 4*g2^3 - 96*g1^2*g3 - 54*g1*g2*g3"
          " - 16*g2^2*g3 - 72*g1*g3^2 - 40*g2*g3^2 - 64*g3^3"),
    *_row((2, 0, 0), "0", "2", "64*g1^2 + 24*g1*g2 + 4*g2^2 + 40*g1*g3 + 12*g2*g3 + 16*g3^2"),
    *_row((3, 0, 0), "0", "0", "-32*g1 - 7*g2 - 13*g3"),
    *_row((4, 0, 0), "0", "0", "8"),
    *_row((0, 1, 0), "1", "-2*g1 - g2 - 2*g3",
          "-64*g1^3 - 40*g1^2*g3^2 - 16*g1*g2^2 - 4*g2^3 - 56*g1^2*g3 - 42*g1*g2*g3"
          " - 16*g2^2*g3 - 56*g1*g3^2 - 40*g2*g3^2 - 64*g3^2"),
    *_row((0, 2, 0), "0", "1", "16*g1^3 + 12*g1*g2 + 4*g2^2 + 18*g1*g3 + 12*g2*g3 + 16*g3^3"),
    *_row((0, 3, 0), "0", "0", "-7*g1 - 4*g2 - 7*g3"),
    *_row((0, 4, 0), "0", "0", "2"),
    *_row((1, 1, 0), "0", "1", "32*g1^2 + 17*g1*g2 + 4*g2^2 + 27*g1*g3 + 12*g2*g3 + 16*g3^2"),
    *_row((1, 2, 0), "0", "0", "-10*g1 - 4*g2 - 7*g3"),
    *_row((1, 3, 0), "0", "0", "2"),
    *_row((2, 1, 0), "0", "0", "-16*g1 - 5*g2 - 9*g3"),
    *_row((3, 1, 0), "0", "0", "4"),
    *_row((2, 2, 0), "0", "0", "1"),
    *_row((1, 0, 1), "0", "0",
          "-32*g1^2 - 19*g1*g2 - 5*g2^2 - 41*g1*g3 - 19*g2*g3 - 32*g3^2"),
    *_row((2, 0, 1), "0", "-1", "16*g1 + 7*g2 + 14*g3"),
    *_row((3, 0, 1), "0", "0", "-4"),
    *_row((2, 0, 2), "0", "0", "7"),
    *_row((1, 1, 1), "0", "0", "-2*g1 - g2 - 4*g3"),
    *_row((2, 1, 1), "0", "0", "1"),
    *_row((1, 2, 1), "0", "0", "2"),
    PrintedCell((1, 0, 0), 2, "-4*g1 - g2 - 2*g3", "display"),
    PrintedCell((1, 2, 0), 3, "-10*g1 - 4*g2 - 7*g3", "display"),
]

ERRATA: dict[str, str] = {
    "index": "Row (1,0,0) at two vertices prints -4 g3 - g2 - 2 g3, repeating the index 3; "
             "the separately displayed value -(4 g1 + g2 + 2 g3) is the intended one.",
    "fiber-label": "The explicit three-matrix residue formula takes residues at the fiber "
                   "points of color 3 while its products run over the fiber of color 2. The "
                   "interpolation nodes are the plus fiber of color 2 throughout.",
    "propagator": "The quadratic form C has off-diagonal -1 and the Gaussian weights are the "
                  "entries of C^-1 (all positive here). A printed 0 for (1,0,1) at two vertices "
                  "is the (1,3) entry of C, not of C^-1 = 1.",
    "parity": "(1,0,1) and (2,0,1) at two vertices: the first is a Gaussian two-point cell "
              "(nonzero), the second has an odd number of legs and no vertex, hence zero. "
              "The printed 0 and -1 look exchanged in parity.",
}

CELL_ERRATA: dict[tuple[tuple[int, ...], int, str], list[str]] = {
    ((1, 0, 0), 2, "table"): ["index"],
    ((1, 0, 1), 2, "table"): ["propagator", "parity"],
    ((2, 0, 1), 2, "table"): ["parity"],
}

ANCHORS: list[tuple[tuple[int, ...], int, str]] = [
    ((2, 0, 0), 2, "table"),
    ((1, 1, 0), 2, "table"),
    ((0, 2, 0), 2, "table"),
    ((1, 2, 0), 3, "table"),
    ((1, 1, 1), 3, "table"),
    ((1, 0, 0), 2, "display"),
]


def printed_value(cell: PrintedCell, dom: CoeffDomain | None = None):
    return parse_poly(cell.text, dom or CoeffDomain.poly(SYMBOLS))


# --------------------------------------------------------------------------
# structural checks that need no computed table


def structural_flags(n: Sequence[int], v: int, c: Any, mirror: bool = True) -> list[str]:
    """Reasons a printed cell cannot be a planar moment of the cubic chain.

    A cell is homogeneous of degree ``2v - 2 - |n|`` in the cubic couplings, a
    term of degree ``d`` carries the sign ``(-1)^d`` (all propagator entries
    are positive), and a palindromic boundary is invariant under
    ``g1 <-> g3``.
    """
    out = []
    k = 2 * v - 2 - sum(n)
    if is_zero(c):
        return out
    if k < 0:
        return [f"nonzero although {v} vertices cannot close a boundary of length {sum(n)}"]
    terms = c.terms() if hasattr(c, "terms") else [((0,) * 3, c)]
    degs = {sum(m) for m, _ in terms}
    if degs != {k}:
        out.append(f"not homogeneous of degree {k} in the couplings (found {sorted(degs)})")
    wrong = sorted({sum(m) for m, a in terms if (a > 0) != (sum(m) % 2 == 0)})
    if wrong:
        out.append(f"terms of degree {wrong} have the wrong sign")
    if mirror and tuple(n) == tuple(n)[::-1] and hasattr(c, "ring"):
        g1, g2, g3 = c.ring.gens
        if c.compose([(g1, g3), (g3, g1)]) != c:
            out.append("not invariant under g1 <-> g3 although the boundary is palindromic")
    return out


# --------------------------------------------------------------------------
# comparison


@dataclass
class CellStatus:
    n: tuple[int, ...]
    v: int
    source: str
    printed: str
    computed: str | None
    status: str
    reasons: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "n": list(self.n),
            "v": self.v,
            "source": self.source,
            "printed": self.printed,
            "computed": self.computed,
            "status": self.status,
            "reasons": list(self.reasons),
        }


@dataclass
class ComparisonReport:
    cells: list[CellStatus]
    calibration: dict | None = None
    errata: dict[str, str] = field(default_factory=dict)
    kind: str = "tables"

    @property
    def mismatches(self) -> list[CellStatus]:
        return [c for c in self.cells if c.status == "mismatch"]

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def status_of(self, n, v, source="table") -> str | None:
        for c in self.cells:
            if c.n == tuple(n) and c.v == v and c.source == source:
                return c.status
        return None

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for c in self.cells:
            out[c.status] = out.get(c.status, 0) + 1
        return dict(sorted(out.items()))

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "ok": self.ok,
            "counts": self.counts(),
            "calibration": self.calibration,
            "calibration_hash": calibration_hash(self.calibration),
            "errata": self.errata,
            "cells": [c.as_dict() for c in self.cells],
        }


def compare_tables(left: MomentTable, right: MomentTable) -> ComparisonReport:
    """Exact cell-by-cell comparison; cells missing on either side are zero."""
    out = []
    for key in sorted(set(left.cells) | set(right.cells), key=lambda k: (k[1], sum(k[0]), k[0])):
        a, b = left.get(*key), right.get(*key)
        ra, rb = render_coeff(a), render_coeff(b)
        st = "match" if ra == rb else "mismatch"
        out.append(CellStatus(key[0], key[1], "left-right", ra, rb, st))
    return ComparisonReport(out, left.calibration, {}, "tables")


def compare_printed(computed: MomentTable, model=None, confirm: bool = True) -> ComparisonReport:
    """Give every printed cell a status against a computed table.

    ``match``: equal.  ``paper-typo-suspected``: different, and the printed
    value fails a structural check, disagrees with another printed value of
    the same cell, is covered by a listed erratum, or is contradicted by the
    direct fat-graph enumeration.  ``mismatch``: different with none of these.
    ``not-computed``: the cell is outside the computed range.
    """
    from .oracle import brute_force_moment
    from .spectral_curve import ChainModel

    dom = CoeffDomain.poly(SYMBOLS)
    model = model or ChainModel.cubic_three()
    nmax = computed.meta.get("nmax", max((sum(k[0]) for k in computed.cells), default=0))
    vmax = computed.meta.get("vmax", max((k[1] for k in computed.cells), default=0))
    ctab = computed if tuple(computed.symbols) == SYMBOLS else _rehome(computed)
    by_cell: dict[tuple, list[PrintedCell]] = {}
    for pc in PRINTED:
        by_cell.setdefault((pc.n, pc.v), []).append(pc)
    out = []
    for pc in PRINTED:
        pv = printed_value(pc, dom)
        if sum(pc.n) > nmax or pc.v > vmax:
            out.append(CellStatus(pc.n, pc.v, pc.source, pc.text, None, "not-computed"))
            continue
        cv = ctab.get(pc.n, pc.v)
        if pv == cv:
            out.append(CellStatus(pc.n, pc.v, pc.source, pc.text, render_coeff(cv), "match"))
            continue
        reasons = structural_flags(pc.n, pc.v, pv)
        others = [o for o in by_cell[(pc.n, pc.v)] if o is not pc and printed_value(o, dom) != pv]
        for o in others:
            reasons.append(f"the {o.source} value of the same cell is {o.text}")
        for e in CELL_ERRATA.get((pc.n, pc.v, pc.source), []):
            reasons.append(f"erratum: {e}")
        if confirm:
            bf = brute_force_moment(model, pc.n, pc.v)
            if bf == cv:
                reasons.append(f"direct fat-graph enumeration gives {render_coeff(bf)}")
        st = "paper-typo-suspected" if reasons else "mismatch"
        out.append(CellStatus(pc.n, pc.v, pc.source, pc.text, render_coeff(cv), st, reasons))
    return ComparisonReport(out, computed.calibration, dict(ERRATA), "printed")


def _rehome(t: MomentTable) -> MomentTable:
    from .tables import convert_table

    return convert_table(t, SYMBOLS)


# --------------------------------------------------------------------------
# printed curve expansions of the same model


@dataclass(frozen=True)
class PrintedTerm:
    k: int  # color of z_k
    n: int  # power of h
    e: int  # power of p
    text: str
    note: str = ""


def _layer(k, n, terms, notes=None):
    notes = notes or {}
    return [PrintedTerm(k, n, e, t, notes.get(e, "")) for e, t in terms.items()]


PRINTED_CURVE: list[PrintedTerm] = [
    *_layer(1, 1, {1: "-1", -1: "-2"}),
    *_layer(1, 2, {-2: "g2 + 3*g3", 0: "-8*g1 - 2*g2 - 4*g3"}),
    *_layer(1, 3, {1: "-16*g1^2 - 7*g1*g2 - 2*g2^2 - 13*g1*g3 - 7*g2*g3 - 16*g3^2",
                   -3: "2*g2*g3",
                   -1: "-32*g1 - 6*g1*g2 - 2*g1*g3 + 16*g3^2"}),
    *_layer(1, 4, {0: "-384*g1^3 - 192*g2*g1^2 - 60*g1*g2^2 - 12*g2^3 - 288*g1^2*g3"
                      " - 162*g1*g2*g3 - 48*g2^2*g3 - 216*g1*g3^2 - 120*g2*g3^2 + 192*g3^3",
                   -4: "g2*g3^2",
                   -2: "32*g1^2*g2 + 14*g1*g2^2 + 4*g2^3 + 96*g1^2*g3"},
           {-2: "printed bracket lacks an operator between its first two terms and ends early"}),
    *_layer(2, 1, {1: "-1", -1: "-1"}),
    *_layer(2, 2, {-2: "g3", 2: "g1", 0: "-4*g1 - 2*g2 - 4*g3"}),
    *_layer(3, 1, {1: "-2", -1: "-1"}),
    *_layer(3, 2, {2: "3*g1 + g2", 0: "-8*g1 - 2*g2 - 4*g3"}),
]


def _mirror(c):
    g1, g2, g3 = c.ring.gens
    return c.compose([(g1, g3), (g3, g1)])


def compare_printed_curve(curve) -> ComparisonReport:
    """Status of every printed curve term against a solved curve.

    The model is mirror symmetric: ``z_{4-k}(p)`` is ``z_k(1/p)`` with
    ``g1 <-> g3``.  The coefficient of ``h^n`` has degree ``n - 1`` in the
    couplings.  Both give evidence that does not depend on the solve.
    """
    dom = CoeffDomain.poly(SYMBOLS)
    N = curve.N
    printed = {(t.k, t.n, t.e): parse_poly(t.text, dom) for t in PRINTED_CURVE}
    out = []
    for t in PRINTED_CURVE:
        pv = printed[(t.k, t.n, t.e)]
        if t.n > curve.H:
            out.append(CellStatus((t.k, t.e), t.n, "curve", t.text, None, "not-computed"))
            continue
        cv = dom.convert(curve.h_layer(t.k, t.n).get(t.e, 0))
        if pv == cv:
            out.append(CellStatus((t.k, t.e), t.n, "curve", t.text, render_coeff(cv), "match"))
            continue
        reasons = []
        degs = {sum(m) for m, _ in pv.terms()} if pv else set()
        if degs and degs != {t.n - 1}:
            reasons.append(f"not homogeneous of degree {t.n - 1} in the couplings")
        partner = printed.get((N + 1 - t.k, t.n, -t.e))
        if partner is not None and _mirror(partner) != pv:
            reasons.append(f"breaks the mirror symmetry with the printed z{N + 1 - t.k} term "
                           f"{render_coeff(partner)}")
        if t.note:
            reasons.append(t.note)
        broken = _relations_broken_by(curve, t, pv)
        if broken:
            reasons.append(f"with the printed value the defining relations fail ({', '.join(broken)})")
        status = "paper-typo-suspected" if reasons else "mismatch"
        out.append(CellStatus((t.k, t.e), t.n, "curve", t.text, render_coeff(cv), status, reasons))
    return ComparisonReport(out, None, {}, "curve")


def _relations_broken_by(curve, t: PrintedTerm, value) -> list[str]:
    """Names of curve relations that stop holding when one term is replaced."""
    from .laurent import PLaurent
    from .series import TruncSeries
    from .spectral_curve import CurveData, curve_residuals, residual_vanishes

    z = [PLaurent(dict(zk.a)) for zk in curve.z]
    old = z[t.k - 1].a.get(t.e, TruncSeries.zero(curve.H + 1))
    coeffs = dict(old.c)
    coeffs[t.n] = curve.model.domain.convert(value)
    z[t.k - 1] = PLaurent({**z[t.k - 1].a, t.e: TruncSeries(coeffs, old.prec)})
    trial = CurveData(curve.model, z, curve.gamma, curve.H, curve.gauge_sign)
    return sorted(k for k, r in curve_residuals(trial).items()
                  if not residual_vanishes(r, curve.H + 1))
