"""Genus-zero spectral curve of the open matrix chain.

The curve is parametrized by Laurent polynomials ``z_i(p)`` whose
coefficients are series in ``h = sqrt(T)``.  The first layer (order ``h``)
is the Gaussian solution; every further order is a linear solve against
the same principal part.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from math import prod
from typing import Any, Iterable, Mapping, Sequence

from sympy import QQ
from sympy.polys.fields import FracElement
from sympy.polys.rings import PolyElement, PolyRing

from .algebra import (
    NUM,
    POLY,
    AlgebraError,
    CoeffDomain,
    NonInvertibleLeading,
    TruncationTooShort,
    is_zero,
    parse_poly,
    parse_rat,
    render_coeff,
)
from .laurent import PLaurent
from .linalg import (
    InconsistentSystem,
    LeftInverse,
    SingularSystem,
    nullspace,
    solve_series_system,
)
from .series import EXACT, LocalSeries, TruncSeries, reversion


class BranchNotFound(AlgebraError):
    """No curve branch with gamma -> 0 exists over the coefficient domain."""


class GaugeAmbiguity(AlgebraError):
    """The residual rescaling p -> lambda p is not fixed by the gauge condition."""


class UnderdeterminedE(AlgebraError):
    def __init__(self, msg: str, nullity: int):
        super().__init__(msg)
        self.nullity = nullity


class InconsistentE(AlgebraError):
    pass


# --------------------------------------------------------------------------
# model


@dataclass(frozen=True)
class PotentialSpec:
    """``V'(x) = sum_i g_i x^(i-1)`` for ``i = 2 .. d+1``.

    ``coeffs`` holds the text form of ``g_2, ..., g_{d+1}``: each entry is an
    exact rational literal or a coupling symbol name.
    """

    coeffs: tuple[str, ...]

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("potential needs at least the quadratic coefficient")
        try:
            g2 = parse_rat(self.coeffs[0])
        except ValueError as exc:
            raise ValueError(f"quadratic coefficient must be a rational: {exc}") from None
        if not g2:
            raise ValueError("quadratic coefficient must be nonzero")

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    def symbols(self) -> list[str]:
        out = []
        for c in self.coeffs:
            try:
                parse_rat(c)
            except ValueError:
                out.append(c)
        return out


@dataclass(frozen=True)
class ChainModel:
    potentials: tuple[PotentialSpec, ...]
    couplings: tuple[str, ...]
    H: int = 6
    mode: str = POLY
    values: tuple[tuple[str, str], ...] = ()
    symbols_order: tuple[str, ...] | None = None

    def __post_init__(self):
        n = len(self.potentials)
        if n < 2:
            raise ValueError("chain needs at least two matrices")
        if len(self.couplings) != n - 1:
            raise ValueError(f"need {n - 1} chain couplings, got {len(self.couplings)}")
        for c in self.couplings:
            if not parse_rat(c):
                raise ValueError("chain couplings must be nonzero")
        if self.H < 0:
            raise ValueError("h-order must be non-negative")
        if self.mode not in (NUM, POLY, "frac"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == NUM:
            missing = set(self.all_symbols()) - {k for k, _ in self.values}
            if missing:
                raise ValueError(f"NUM mode needs values for {sorted(missing)}")
        if self.quadratic_determinant() == 0:
            raise ValueError("quadratic form C is singular")

    # -- constructors --------------------------------------------------
    @classmethod
    def build(
        cls,
        potentials: Sequence[Sequence[Any]],
        couplings: Sequence[Any] | None = None,
        H: int = 6,
        mode: str = POLY,
        values: Mapping[str, Any] | None = None,
    ) -> "ChainModel":
        pots = tuple(PotentialSpec(tuple(str(c) for c in p)) for p in potentials)
        cs = tuple(str(c) for c in (couplings or ["1"] * (len(pots) - 1)))
        vals = tuple(sorted((k, str(v)) for k, v in (values or {}).items()))
        return cls(pots, cs, H, mode, vals)

    @classmethod
    def cubic_three(cls, H: int = 6, mode: str = POLY, values=None) -> "ChainModel":
        """Three cubic potentials with quadratic parts (1, 3, 1) and c = 1."""
        return cls.build([["1", "g1"], ["3", "g2"], ["1", "g3"]], ["1", "1"], H, mode, values)

    def with_H(self, H: int) -> "ChainModel":
        return ChainModel(self.potentials, self.couplings, H, self.mode, self.values,
                          self.symbols_order)

    def with_values(self, values: Mapping[str, Any]) -> "ChainModel":
        vals = tuple(sorted((k, str(v)) for k, v in values.items()))
        return ChainModel(self.potentials, self.couplings, self.H, NUM, vals, self.symbols_order)

    # -- accessors ------------------------------------------------------
    @property
    def N(self) -> int:
        return len(self.potentials)

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(p.degree for p in self.potentials)

    def all_symbols(self) -> tuple[str, ...]:
        if self.symbols_order is not None:
            return self.symbols_order
        seen: list[str] = []
        for p in self.potentials:
            for s in p.symbols():
                if s not in seen:
                    seen.append(s)
        return tuple(seen)

    @property
    def domain(self) -> CoeffDomain:
        return _domain_for(self.mode, self.all_symbols())

    def g(self, k: int, i: int):
        """Coefficient ``g_i^{(k)}`` (1-based ``k``) in the active domain."""
        text = self.potentials[k - 1].coeffs[i - 2]
        dom = self.domain
        try:
            return dom.convert(parse_rat(text))
        except ValueError:
            pass
        if dom.kind == NUM:
            return parse_rat(dict(self.values)[text])
        return dom.gen(text)

    def c(self, k: int):
        """Chain coupling ``c_{k,k+1}``; ``c_{0,1} = 0`` and ``c_{N,N+1} = 1``."""
        if k == 0:
            return self.domain.zero
        if k == self.N:
            return self.domain.one
        return self.domain.convert(parse_rat(self.couplings[k - 1]))

    def s(self, k: int) -> int:
        return prod(self.degrees[: k - 1])

    def r(self, k: int) -> int:
        return prod(self.degrees[k:])

    def quadratic_matrix(self) -> list[list[Any]]:
        n = self.N
        C = [[QQ(0)] * n for _ in range(n)]
        for k in range(n):
            C[k][k] = parse_rat(self.potentials[k].coeffs[0])
            if k + 1 < n:
                C[k][k + 1] = C[k + 1][k] = -parse_rat(self.couplings[k])
        return C

    def quadratic_determinant(self):
        import sympy

        return sympy.Matrix(self.quadratic_matrix()).det()

    def propagator(self) -> list[list[Any]]:
        """``C^{-1}`` as exact rationals."""
        import sympy

        inv = sympy.Matrix(self.quadratic_matrix()).inv()
        return [[QQ(int(sympy.fraction(x)[0]), int(sympy.fraction(x)[1])) for x in row]
                for row in inv.tolist()]

    def Vprime(self, k: int, x: Any):
        """``V_k'(x)`` by Horner's rule; ``x`` may be any ring-like value."""
        d = self.potentials[k - 1].degree
        acc = None
        for i in range(d + 1, 1, -1):
            g = self.g(k, i)
            acc = (acc + g if acc is not None else _lift_const(x, g))
            acc = acc * x
        return acc

    def echo(self) -> dict:
        return {
            "N": self.N,
            "potentials": [list(p.coeffs) for p in self.potentials],
            "couplings": list(self.couplings),
            "H": self.H,
            "mode": self.mode,
            "values": {k: v for k, v in self.values},
        }


def _domain_for(mode: str, symbols: tuple[str, ...]) -> CoeffDomain:
    if mode == NUM or not symbols:
        return CoeffDomain.num()
    if mode == POLY:
        return CoeffDomain.poly(symbols)
    return CoeffDomain.frac(symbols)


def _lift_const(x: Any, g: Any):
    if isinstance(x, PLaurent):
        return PLaurent.const(g)
    if isinstance(x, TruncSeries):
        return type(x).const(g)
    return g


# --------------------------------------------------------------------------
# curve data


@dataclass
class CurveData:
    model: ChainModel
    z: list[PLaurent]
    gamma: TruncSeries
    H: int
    gauge_sign: int = -1
    log: list[str] = field(default_factory=list)

    @property
    def N(self) -> int:
        return self.model.N

    def s(self, k: int) -> int:
        return self.model.s(k)

    def r(self, k: int) -> int:
        return self.model.r(k)

    def zk(self, k: int) -> PLaurent:
        return self.z[k - 1]

    def h_layer(self, k: int, n: int) -> dict[int, Any]:
        """Coefficient of ``h^n`` in ``z_k`` as ``{p-exponent: coefficient}``."""
        return self.zk(k).h_coeff(n)

    def pole_orders(self, k: int) -> dict[str, int]:
        z = self.zk(k)
        return {"inf": z.pole_order_inf(), "zero": z.pole_order_zero()}

    # -- serialization --------------------------------------------------
    def to_json(self) -> str:
        def ser(s: TruncSeries) -> dict:
            return {
                "prec": None if s.is_exact() else s.prec,
                "terms": [[k, render_coeff(v)] for k, v in s.items()],
            }

        data = {
            "model": self.model.echo(),
            "symbols": list(self.model.all_symbols()),
            "H": self.H,
            "gauge_sign": self.gauge_sign,
            "gamma": ser(self.gamma),
            "z": [
                [{"exponent_p": k, "series": ser(z.a[k])} for k in sorted(z.a)]
                for z in self.z
            ],
            "sheet_degrees": {
                "s": [self.s(k) for k in range(1, self.N + 1)],
                "r": [self.r(k) for k in range(1, self.N + 1)],
            },
        }
        return json.dumps(data, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CurveData":
        data = json.loads(text)
        m = data["model"]
        model = ChainModel.build(m["potentials"], m["couplings"], m["H"], m["mode"],
                                 m.get("values") or None)
        dom = model.domain

        def de(s: dict) -> TruncSeries:
            prec = EXACT if s["prec"] is None else s["prec"]
            return TruncSeries({k: parse_poly(v, dom) for k, v in s["terms"]}, prec)

        z = [PLaurent({t["exponent_p"]: de(t["series"]) for t in zi}) for zi in data["z"]]
        return cls(model, z, de(data["gamma"]), data["H"], data.get("gauge_sign", -1))

    def same_as(self, other: "CurveData") -> bool:
        if self.H != other.H or len(self.z) != len(other.z):
            return False
        if not _series_same(self.gamma, other.gamma):
            return False
        for a, b in zip(self.z, other.z):
            if set(a.a) != set(b.a):
                return False
            if not all(_series_same(a.a[k], b.a[k]) for k in a.a):
                return False
        return True


def _series_same(a: TruncSeries, b: TruncSeries) -> bool:
    return a.prec == b.prec and {k: render_coeff(v) for k, v in a.c.items()} == {
        k: render_coeff(v) for k, v in b.c.items()
    }


# --------------------------------------------------------------------------
# solver


class _CurveSystem:
    """The curve conditions as a fixed list of scalar rows."""

    def __init__(self, model: ChainModel):
        self.model = model
        self.dom = model.domain
        N = model.N
        self.unknowns: list[tuple[int, int]] = [
            (i, k) for i in range(1, N + 1) for k in range(-model.r(i), model.s(i) + 1)
        ]
        self.index = {u: n for n, u in enumerate(self.unknowns)}
        self.rows: list[tuple[str, int, int]] = []
        d = model.degrees
        lo1 = -model.r(1) * d[0]
        hi1 = model.s(1) * d[0]
        for e in range(0, max(hi1, model.s(2)) + 1):
            self.rows.append(("first", e, 0))
        self.rows.append(("norm_first", -1, 1))
        for k in range(2, N):
            lo = min(-model.r(k) * d[k - 1], -model.r(k - 1), -model.r(k + 1))
            hi = max(model.s(k) * d[k - 1], model.s(k - 1), model.s(k + 1))
            for e in range(lo, hi + 1):
                self.rows.append((f"mid{k}", e, 0))
        loN = min(-model.r(N) * d[N - 1], -model.r(N - 1))
        for e in range(loN, 1):
            self.rows.append(("last", e, 0))
        self.rows.append(("norm_last", 1, 1))
        self.rows.append(("gauge", 0, 0))
        del lo1

    def z_from(self, alpha: Mapping[tuple[int, int], TruncSeries]) -> list[PLaurent]:
        N = self.model.N
        return [
            PLaurent({k: alpha[(i, k)] for k in range(-self.model.r(i), self.model.s(i) + 1)
                      if (i, k) in alpha})
            for i in range(1, N + 1)
        ]

    def expressions(self, z: list[PLaurent]) -> dict[str, Any]:
        m = self.model
        N = m.N
        out: dict[str, Any] = {}
        first = m.Vprime(1, z[0]) - z[1] * m.c(1)
        out["first"] = first
        last = m.Vprime(N, z[N - 1]) - z[N - 2] * m.c(N - 1)
        out["last"] = last
        for k in range(2, N):
            out[f"mid{k}"] = m.Vprime(k, z[k - 1]) - z[k - 2] * m.c(k - 1) - z[k] * m.c(k)
        gamma = z[0][1]
        T = TruncSeries.monomial(self.dom.one, 2)
        out["norm_first"] = gamma * first[-1] - T
        out["norm_last"] = gamma * last[1] - T
        out["gauge"] = z[0][1] - z[N - 1][-1]
        return out

    def row_values(self, alpha, order: int) -> list[Any]:
        ex = self.expressions(self.z_from(alpha))
        vals = []
        for name, e, shift in self.rows:
            x = ex[name]
            s = x if isinstance(x, TruncSeries) else x[e]
            vals.append(s.c.get(order + shift, self.dom.zero))
        return vals


def _ground(c):
    if hasattr(c, "is_ground"):
        if not c.is_ground:
            raise AlgebraError(f"expected a rational, got {render_coeff(c)}")
        return c.LC
    return QQ.convert(c)


def _rat_sqrt(q) -> Any | None:
    from gmpy2 import is_square, isqrt

    q = QQ.convert(q)
    if q <= 0:
        return None
    n, d = int(q.numerator), int(q.denominator)
    if is_square(n) and is_square(d):
        return QQ(int(isqrt(n)), int(isqrt(d)))
    return None


def solve_curve(model: ChainModel, H: int | None = None, sign: int = -1) -> CurveData:
    """Solve the curve conditions to order ``h^H``.

    ``sign`` picks the branch of the residual ``p -> -p`` ambiguity through
    the sign of the leading coefficient of ``gamma``.
    """
    H = model.H if H is None else H
    sysm = _CurveSystem(model)
    dom = sysm.dom
    nunk = len(sysm.unknowns)
    log = [f"gauge: alpha_(1,1) = alpha_({model.N},-1); sign of gamma_1 = {sign:+d}"]
    if H == 0:
        z = [PLaurent({}) for _ in range(model.N)]
        return CurveData(model, z, TruncSeries.zero(1), 0, sign, log + ["H=0: trivial curve"])

    # Gaussian layer: the order-h rows other than the normalizations are linear
    zero = {u: TruncSeries.zero() for u in sysm.unknowns}
    base = sysm.row_values(zero, 1)
    lin_rows = []
    for j, u in enumerate(sysm.unknowns):
        probe = dict(zero)
        probe[u] = TruncSeries.monomial(dom.one, 1)
        vals = sysm.row_values(probe, 1)
        lin_rows.append([_ground(v - b) for v, b in zip(vals, base)])
    M = [[lin_rows[j][r] for j in range(nunk)] for r, row in enumerate(sysm.rows)
         if not row[0].startswith("norm")]
    ns = nullspace(M, nunk)
    if len(ns) != 1:
        raise GaugeAmbiguity(f"Gaussian layer has a {len(ns)}-dimensional solution space")
    v = ns[0]
    trial = {u: TruncSeries.monomial(dom.convert(v[j]), 1) for j, u in enumerate(sysm.unknowns)}
    ex = sysm.expressions(sysm.z_from(trial))
    q1 = _ground(ex["norm_first"].c.get(2, 0)) + 1
    q2 = _ground(ex["norm_last"].c.get(2, 0)) + 1
    if q1 != q2:
        raise BranchNotFound("normalizations at the two ends are incompatible")
    t = _rat_sqrt(1 / q1) if q1 else None
    if t is None:
        raise BranchNotFound(f"Gaussian scale sqrt({1 / q1 if q1 else 0}) is not rational")
    g1 = t * v[sysm.index[(1, 1)]]
    if (g1 > 0) != (sign > 0):
        t = -t
    a1 = [t * x for x in v]
    alpha = {u: TruncSeries({1: dom.convert(a1[j])}) for j, u in enumerate(sysm.unknowns)}

    if H >= 2:
        base2 = sysm.row_values(alpha, 2)
        cols = []
        for u in sysm.unknowns:
            probe = dict(alpha)
            probe[u] = alpha[u] + TruncSeries.monomial(dom.one, 2)
            vals = sysm.row_values(probe, 2)
            cols.append([_ground(x - b) for x, b in zip(vals, base2)])
        J = [[cols[j][r] for j in range(nunk)] for r in range(len(sysm.rows))]
        try:
            solver = LeftInverse(J)
        except SingularSystem as exc:
            raise GaugeAmbiguity(f"linearized curve system is singular: {exc}") from None
        for n in range(2, H + 1):
            rhs = [-x for x in sysm.row_values(alpha, n)]
            try:
                an = solver.solve(rhs, zero=dom.zero)
            except InconsistentSystem:
                raise BranchNotFound(f"no solution at order h^{n}") from None
            alpha = {
                u: (alpha[u] + TruncSeries.monomial(an[j], n)) if not is_zero(an[j]) else alpha[u]
                for j, u in enumerate(sysm.unknowns)
            }
    alpha = {u: TruncSeries(s.c, H + 1) for u, s in alpha.items()}
    z = sysm.z_from(alpha)
    return CurveData(model, z, alpha[(1, 1)], H, sign, log)


def specialize_curve(curve: CurveData, values: Mapping[str, Any]) -> CurveData:
    """The same curve with every coupling symbol replaced by a rational value."""
    model = curve.model.with_values(values)
    subs = {k: parse_rat(v) for k, v in model.values}

    def ev(c):
        if isinstance(c, (PolyElement, FracElement)):
            gens = c.field.gens if isinstance(c, FracElement) else c.ring.gens
            names = c.field.symbols if isinstance(c, FracElement) else c.ring.symbols
            pt = [(g, subs[str(n)]) for g, n in zip(gens, names)]
            if isinstance(c, FracElement):
                return QQ.convert(c.numer.evaluate(pt)) / QQ.convert(c.denom.evaluate(pt))
            return QQ.convert(c.evaluate(pt))
        return c

    def ser(t: TruncSeries) -> TruncSeries:
        return TruncSeries({k: ev(v) for k, v in t.c.items()}, t.prec)

    z = [PLaurent({k: ser(v) for k, v in zk.a.items()}) for zk in curve.z]
    return CurveData(model, z, ser(curve.gamma), curve.H, curve.gauge_sign)


def curve_residuals(curve: CurveData) -> dict[str, PLaurent]:
    """The defining expressions, minus their prescribed asymptotics."""
    sysm = _CurveSystem(curve.model)
    ex = sysm.expressions(curve.z)
    out = {}
    for k in range(2, curve.N):
        out[f"mid{k}"] = ex[f"mid{k}"]
    out["first_polar"] = PLaurent({e: v for e, v in ex["first"].a.items() if e >= 0})
    out["last_polar"] = PLaurent({e: v for e, v in ex["last"].a.items() if e <= 0})
    out["norm_first"] = PLaurent.const(ex["norm_first"])
    out["norm_last"] = PLaurent.const(ex["norm_last"])
    out["gauge"] = PLaurent.const(ex["gauge"])
    return out


def residual_vanishes(x: PLaurent, order: int) -> bool:
    for v in x.a.values():
        if v.prec < order:
            raise TruncationTooShort(f"residual known only to h^{v.prec}")
        if any(k < order for k in v.c):
            return False
    return True


# --------------------------------------------------------------------------
# hat-x chain, f-polynomials, Pol


def hat_x_chain(model: ChainModel, x1: Any, x2: Any) -> list[Any]:
    """``[x3, ..., xN]`` from ``c_{i,i+1} x_{i+1} = V_i'(x_i) - c_{i-1,i} x_{i-1}``."""
    xs = [x1, x2]
    for i in range(2, model.N):
        nxt = model.Vprime(i, xs[i - 1]) - xs[i - 2] * model.c(i - 1)
        ci = model.c(i)
        xs.append(nxt * model.domain.inverse(ci))
    return xs[2:]


def x_ring(model: ChainModel):
    dom = model.domain
    names = tuple(f"x{i}" for i in range(1, model.N + 1))
    base = QQ if dom.kind == NUM else (dom.ring.to_domain() if dom.kind == POLY else dom.field.to_domain())
    R = PolyRing(names, base)
    return R


def f_polys(model: ChainModel) -> dict[tuple[int, int], Any]:
    """The polynomials ``f_{i,j}`` for ``1 <= i <= j+1``, ``j <= N``."""
    R = x_ring(model)
    xs = R.gens
    dom = model.domain
    N = model.N

    def Vp(k: int):
        return model.Vprime(k, xs[k - 1])

    f: dict[tuple[int, int], Any] = {}
    for i in range(1, N + 1):
        f[(i, i - 1)] = R.one
        for j in range(i, N + 1):
            prev2 = f.get((i, j - 2), R.zero) if j - 2 >= i - 1 else R.zero
            term = Vp(j) * f[(i, j - 1)]
            if j - 1 >= i:
                term = term - xs[j - 2] * xs[j - 1] * prev2 * model.c(j - 1)
            f[(i, j)] = term * dom.inverse(model.c(j))
    return f


def poly_degrees(P: Any, nvars: int) -> tuple[int, ...]:
    degs = [0] * nvars
    for mon in P.monoms():
        for i, e in enumerate(mon):
            degs[i] = max(degs[i], e)
    return tuple(degs)


def pol_extract(expr: Mapping[tuple[int, ...], Any], var_idx: Iterable[int]) -> dict:
    """Keep the terms with non-negative exponents in every designated variable.

    ``expr`` maps exponent tuples to coefficients.
    """
    idx = list(var_idx)
    return {e: c for e, c in expr.items() if all(e[i] >= 0 for i in idx) and not is_zero(c)}


def pol_by_residue(f: Mapping[int, Any], x1: Any) -> Any:
    """``-Res_{x=inf} f(x) dx / (x - x1)`` for a Laurent polynomial ``f`` in ``x``.

    Expands ``1/(x - x1) = sum_m x1^m x^(-m-1)`` and reads the ``1/x`` term.
    """
    top = max(f) if f else 0
    acc = 0 * x1
    for m in range(0, top + 1):
        # the x^-1 coefficient of f(x) x^(-m-1) is f_m
        c = f.get(m)
        if c is not None:
            acc = acc + c * x1**m
    return acc


# --------------------------------------------------------------------------
# resolvents


def local_in_t(z: PLaurent, end: str) -> LocalSeries:
    """``z`` written in ``t = 1/p`` (end 'first') or ``t = p`` (end 'last')."""
    if end == "first":
        return LocalSeries({-k: v for k, v in z.a.items()}, EXACT)
    return LocalSeries(dict(z.a), EXACT)


def resolvent(curve: CurveData, end: str = "first", order: int = 8) -> list[TruncSeries]:
    """Coefficients ``m_k`` of ``W(x) = sum_k m_k x^(-k-1)``, ``k < order``.

    For the first end ``W_1(x) = V_1'(x) - c_{12} z_2`` expanded along the
    physical sheet (``p -> inf``); for the last end the mirror statement
    near ``p -> 0``.
    """
    m = curve.model
    N = m.N
    if end == "first":
        x, y = curve.zk(1), m.Vprime(1, curve.zk(1)) - curve.zk(2) * m.c(1)
    elif end == "last":
        x, y = curve.zk(N), m.Vprime(N, curve.zk(N)) - curve.zk(N - 1) * m.c(N - 1)
    else:
        raise ValueError(f"unknown end {end!r}")
    xt = local_in_t(x, end)
    yt = local_in_t(y, end)
    # terms that vanish to the known h-order are dropped; precision stays on the others
    yt = LocalSeries({k: v for k, v in yt.c.items() if v.c or k >= 1}, EXACT)
    if xt.valuation() != -1:
        raise TruncationTooShort("x has no simple pole at the physical end")
    if yt.c and yt.valuation() < 1:
        raise AlgebraError("W has a polynomial part at the physical end")
    # xi = 1/x = t / (t x)
    tx = LocalSeries({k + 1: v for k, v in xt.c.items()}, EXACT)
    xi = tx.inverse_capped(order + 1).shift(1)
    t_of_xi = reversion(LocalSeries(xi.c, order + 1), order + 1)
    W = LocalSeries(yt.c, order + 1).compose(t_of_xi).truncate(order + 1)
    return [W.c.get(k + 1, TruncSeries.zero(W.c[1].prec if 1 in W.c else 0)) for k in range(order)]


# --------------------------------------------------------------------------
# E polynomial


@dataclass
class EPoly:
    """``E(x_1..x_N) = Top(x) - P(x)`` with series coefficients."""

    model: ChainModel
    top: dict[tuple[int, ...], Any]
    P: dict[tuple[int, ...], TruncSeries]
    log: list[str] = field(default_factory=list)

    def terms(self) -> dict[tuple[int, ...], TruncSeries]:
        out: dict[tuple[int, ...], TruncSeries] = {}
        for e, c in self.top.items():
            out[e] = TruncSeries.const(c)
        for e, s in self.P.items():
            out[e] = out[e] - s if e in out else -s
        return out

    def evaluate(self, xs: Sequence[Any]) -> Any:
        acc = None
        for e, c in self.terms().items():
            t = _mono(xs, e) * c
            acc = t if acc is None else acc + t
        return acc


def _mono(xs: Sequence[Any], e: tuple[int, ...]):
    out = None
    for x, k in zip(xs, e):
        if k:
            t = x**k
            out = t if out is None else out * t
    if out is None:
        x0 = xs[0]
        return PLaurent.const(1) if isinstance(x0, PLaurent) else type(x0).const(1)
    return out


def top_part(model: ChainModel) -> dict[tuple[int, ...], Any]:
    """``(V_1'(x_1) - c_{12} x_2)(V_N'(x_N) - c_{N-1,N} x_{N-1})`` as exponent map."""
    R = x_ring(model)
    xs = R.gens
    N = model.N
    a = model.Vprime(1, xs[0]) - xs[1] * model.c(1)
    b = model.Vprime(N, xs[N - 1]) - xs[N - 2] * model.c(N - 1)
    return {tuple(mon): c for mon, c in (a * b).terms()}


def _map_series(s: TruncSeries, fn) -> TruncSeries:
    return TruncSeries({k: fn(v) for k, v in s.c.items()}, s.prec)


def _solve_promoting(A, b, dom: CoeffDomain) -> list[TruncSeries]:
    """Solve over the active domain, moving to the fraction field if a pivot
    has a non-constant leading coefficient; results return to POLY when they
    are polynomial."""
    try:
        return solve_series_system(A, b)
    except NonInvertibleLeading:
        if dom.kind != POLY:
            raise
    F = dom.field
    up = lambda c: F(c)  # noqa: E731
    sol = solve_series_system(
        [[_map_series(x, up) for x in row] for row in A], [_map_series(x, up) for x in b]
    )

    def down(c):
        try:
            return dom.convert(c)
        except NonInvertibleLeading:
            return c

    return [_map_series(x, down) for x in sol]


def reconstruct_E(curve: CurveData) -> EPoly:
    """Fit the lower part ``P`` of ``E`` from ``E(z(p)) = 0``.

    ``P`` ranges over monomials with degree below ``deg f_{1,N}`` in each
    variable.  When the linear system is underdetermined the bounds are
    lowered greedily and the reduction is logged.
    """
    model = curve.model
    N = model.N
    f = f_polys(model)
    bounds = [d - 1 for d in poly_degrees(f[(1, N)], N)]
    top = top_part(model)
    zs = curve.z
    top_val = None
    for e, c in top.items():
        t = _mono(zs, e) * TruncSeries.const(c)
        top_val = t if top_val is None else top_val + t
    log = [f"P degree bounds {tuple(bounds)}"]
    cache: dict[tuple[int, ...], PLaurent] = {}

    def mono_val(e):
        if e not in cache:
            cache[e] = _mono(zs, e)
        return cache[e]

    while True:
        monos = [e for e in itertools.product(*[range(b + 1) for b in bounds])]
        vals = [mono_val(e) for e in monos]
        pexps = sorted(set(top_val.a) | {k for v in vals for k in v.a})
        A = [[v[k] for v in vals] for k in pexps]
        b = [top_val[k] for k in pexps]
        try:
            sol = _solve_promoting(A, b, model.domain)
            break
        except SingularSystem as exc:
            reducible = [i for i, bd in enumerate(bounds) if bd > 0]
            if not reducible:
                raise UnderdeterminedE(str(exc), exc.nullity) from None
            i = max(reducible, key=lambda j: (bounds[j], -j))
            bounds[i] -= 1
            log.append(f"nullity {exc.nullity}: lowered bound of x{i + 1} to {bounds[i]}")
        except InconsistentSystem as exc:
            raise InconsistentE(str(exc)) from None
    P = {e: s for e, s in zip(monos, sol) if s.c or not s.is_exact()}
    return EPoly(model, top, P, log)


# --------------------------------------------------------------------------
# master equation along the physical branch


def physical_chain(curve: CurveData, order: int = 8) -> list[LocalSeries]:
    """``[x_1, ..., x_N]`` along the physical branch as series in ``xi = 1/x_1``.

    ``x_2 = (V_1'(x_1) - W_1(x_1)) / c_{12}`` comes from the resolvent and the
    remaining ``x_k`` from the chain relations.
    """
    model = curve.model
    m = resolvent(curve, "first", order)
    x1 = LocalSeries({-1: 1}, EXACT)
    W1 = LocalSeries({k + 1: mk for k, mk in enumerate(m)}, order + 1)
    x2 = (model.Vprime(1, x1) - W1) * model.domain.inverse(model.c(1))
    return [x1, x2] + hat_x_chain(model, x1, x2)


def master_equation_residual(curve: CurveData, E: EPoly, order: int = 8) -> LocalSeries:
    """``E(x_1, x_2(x_1), ..., x_N(x_1))`` along the physical branch.

    Every coefficient below the returned precision must vanish to its
    h-truncation.
    """
    xs = physical_chain(curve, order)
    acc = None
    for e, c in E.terms().items():
        t = _mono(xs, e) * c
        acc = t if acc is None else acc + t
    return acc


def master_equation_holds(res: LocalSeries) -> bool:
    return all(not v.c for k, v in res.c.items() if k < res.prec)
