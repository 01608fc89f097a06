"""Laurent polynomials and rational functions in the global coordinate ``p``.

Coefficients are h-series (:class:`TruncSeries`).  Points on the curve are
either the two poles ``p = 0`` / ``p = inf`` or finite points given as
h-series (Puiseux data produced by :mod:`chain_disks.puiseux`).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Union

from .algebra import TruncationTooShort
from .series import EXACT, LocalSeries, TruncSeries

ZERO = "zero"
INF = "inf"

Point = Union[str, TruncSeries]


def _gbinom(k: int, j: int) -> int:
    """Generalized binomial coefficient ``C(k, j)`` for integer ``k``."""
    out = 1
    for i in range(j):
        out = out * (k - i)
    for i in range(2, j + 1):
        out //= i
    return out


class PLaurent:
    """``sum_k a[k] p^k`` with h-series coefficients; immutable."""

    __slots__ = ("a",)

    def __init__(self, coeffs: Mapping[int, Any] | None = None):
        out = {}
        for k, v in (coeffs or {}).items():
            if not isinstance(v, TruncSeries):
                v = TruncSeries.const(v)
            if v.c or not v.is_exact():
                out[int(k)] = v
        self.a = out

    @classmethod
    def const(cls, c: Any) -> "PLaurent":
        return cls({0: c})

    @classmethod
    def p(cls) -> "PLaurent":
        return cls({1: 1})

    def __repr__(self) -> str:
        return f"PLaurent({self.render()})"

    def render(self) -> str:
        if not self.a:
            return "0"
        return " + ".join(f"[{self.a[k].render()}]*p^{k}" for k in sorted(self.a))

    @property
    def min_exp(self) -> int:
        return min(self.a) if self.a else 0

    @property
    def max_exp(self) -> int:
        return max(self.a) if self.a else 0

    def pole_order_inf(self) -> int:
        """Pole order at p = inf ignoring coefficients that vanish to their precision."""
        ks = [k for k, v in self.a.items() if v.c]
        return max(max(ks), 0) if ks else 0

    def pole_order_zero(self) -> int:
        ks = [k for k, v in self.a.items() if v.c]
        return max(-min(ks), 0) if ks else 0

    def __getitem__(self, k: int) -> TruncSeries:
        return self.a.get(k, TruncSeries.zero())

    def prec(self) -> int:
        return min((v.prec for v in self.a.values()), default=EXACT)

    def truncate(self, prec: int) -> "PLaurent":
        return PLaurent({k: v.truncate(prec) for k, v in self.a.items()})

    def h_coeff(self, n: int) -> dict[int, Any]:
        """The coefficient of ``h^n`` as a Laurent polynomial ``{p-exp: coeff}``."""
        out = {}
        for k, v in self.a.items():
            c = v.coeff(n)
            if c:
                out[k] = c
        return out

    def __neg__(self) -> "PLaurent":
        return PLaurent({k: -v for k, v in self.a.items()})

    def __add__(self, other: Any) -> "PLaurent":
        if not isinstance(other, PLaurent):
            other = PLaurent.const(other)
        out = dict(self.a)
        for k, v in other.a.items():
            out[k] = out[k] + v if k in out else v
        return PLaurent(out)

    __radd__ = __add__

    def __sub__(self, other: Any) -> "PLaurent":
        if not isinstance(other, PLaurent):
            other = PLaurent.const(other)
        return self + (-other)

    def __rsub__(self, other: Any) -> "PLaurent":
        return (-self) + other

    def __mul__(self, other: Any) -> "PLaurent":
        if not isinstance(other, PLaurent):
            if isinstance(other, TruncSeries):
                return PLaurent({k: v * other for k, v in self.a.items()})
            return PLaurent({k: v.scale(other) for k, v in self.a.items()})
        out: dict[int, TruncSeries] = {}
        for i, x in self.a.items():
            for j, y in other.a.items():
                t = x * y
                out[i + j] = out[i + j] + t if i + j in out else t
        return PLaurent(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "PLaurent":
        out = PLaurent.const(1)
        for _ in range(n):
            out = out * self
        return out

    def derivative(self) -> "PLaurent":
        return PLaurent({k - 1: v.scale(k) for k, v in self.a.items() if k})

    def __call__(self, q: TruncSeries) -> TruncSeries:
        return self.evaluate(q)

    def evaluate(self, q: TruncSeries) -> TruncSeries:
        if not isinstance(q, TruncSeries):
            q = TruncSeries.const(q)
        if not self.a:
            return TruncSeries.zero()
        lo, hi = min(self.a), max(self.a)
        total = TruncSeries.zero()
        if hi >= 0:
            acc = TruncSeries.zero()
            for k in range(hi, -1, -1):
                acc = acc * q + self.a.get(k, 0)
            total = total + acc
        if lo < 0:
            qi = _inverse_point(q)
            acc = TruncSeries.zero()
            for k in range(lo, 0):
                acc = (acc + self.a.get(k, 0)) * qi
            total = total + acc
        return total

    def local_expansion(self, point: Point, order: int) -> LocalSeries:
        """Expansion in the local coordinate ``e`` at ``point`` up to ``e^order``.

        Local coordinates: ``e = p - a`` at a finite point, ``e = p`` at zero,
        ``e = 1/p`` at infinity.
        """
        if point == ZERO:
            return LocalSeries(dict(self.a), EXACT).truncate(order)
        if point == INF:
            return LocalSeries({-k: v for k, v in self.a.items()}, EXACT).truncate(order)
        a = point
        ainv = _inverse_point(a)
        powers: dict[int, TruncSeries] = {}

        def apow(m: int) -> TruncSeries:
            if m not in powers:
                if m == 0:
                    powers[m] = TruncSeries.const(1)
                elif m > 0:
                    powers[m] = apow(m - 1) * a
                else:
                    powers[m] = apow(m + 1) * ainv
            return powers[m]

        out: dict[int, TruncSeries] = {}
        for j in range(0, order):
            acc = None
            for k, v in self.a.items():
                b = _gbinom(k, j)
                if not b:
                    continue
                t = (v * apow(k - j)).scale(b)
                acc = t if acc is None else acc + t
            if acc is not None:
                out[j] = acc
        return LocalSeries(out, order)


def _inverse_point(q: TruncSeries) -> TruncSeries:
    if q.is_exact() and len(q.c) > 1:
        raise TruncationTooShort("finite point must carry a precision to be inverted")
    return q.inverse()


def _local_valuation(s: LocalSeries) -> int:
    for k in sorted(s.c):
        if s.c[k].c:
            return k
    return s.prec


def _strip_local(s: LocalSeries) -> LocalSeries:
    v = _local_valuation(s)
    return LocalSeries({k: c for k, c in s.c.items() if k >= v}, s.prec)


@dataclass(frozen=True)
class PRational:
    """Ratio ``num/den`` of two :class:`PLaurent` values."""

    num: PLaurent
    den: PLaurent

    def evaluate(self, q: TruncSeries) -> TruncSeries:
        return self.num.evaluate(q) / self.den.evaluate(q)

    def __mul__(self, other: "PRational | PLaurent") -> "PRational":
        if isinstance(other, PLaurent):
            return PRational(self.num * other, self.den)
        return PRational(self.num * other.num, self.den * other.den)

    def __add__(self, other: "PRational") -> "PRational":
        return PRational(self.num * other.den + other.num * self.den, self.den * other.den)

    def local_expansion(self, point: Point, order: int, max_pole: int = 8) -> LocalSeries:
        d = _strip_local(self.den.local_expansion(point, order + max_pole))
        m = _local_valuation(d)
        if m >= d.prec:
            raise TruncationTooShort("denominator vanishes identically at the working order")
        n = self.num.local_expansion(point, order + m)
        vn = min(n.valuation(), order + m)
        dn = LocalSeries({k - m: v for k, v in d.c.items()}, d.prec - m)
        inv = _local_inverse(dn, max(order + m - vn, 1))
        return (n * inv).shift(-m).truncate(order)


def _local_inverse(d: LocalSeries, rel: int) -> LocalSeries:
    a0 = d.c[0]
    inv0 = a0.inverse()
    b = [inv0]
    for n in range(1, rel):
        acc = None
        for k in range(1, n + 1):
            ak = d.c.get(k)
            if ak is None:
                continue
            t = ak * b[n - k]
            acc = t if acc is None else acc + t
        b.append(-(acc * inv0) if acc is not None else TruncSeries.zero())
    return LocalSeries(dict(enumerate(b)), rel)


def residue_at(f: PRational, point: Point, max_pole: int = 8) -> TruncSeries:
    """Residue of the differential ``f(p) dp`` at ``point``.

    At infinity the orientation is such that the residues of a rational
    differential over all of its poles (infinity included) sum to zero.
    """
    if point == INF:
        # f dp = -f(1/e) e^-2 de
        loc = f.local_expansion(INF, 2, max_pole=max_pole + 2)
        c = loc.c.get(1)
        if c is None:
            if loc.prec <= 1:
                raise TruncationTooShort("pole order at infinity not resolved")
            return TruncSeries.zero()
        return -c
    loc = f.local_expansion(point, 0, max_pole=max_pole)
    c = loc.c.get(-1)
    if c is None:
        if loc.prec <= -1:
            raise TruncationTooShort("pole order not resolved")
        return TruncSeries.zero()
    return c
