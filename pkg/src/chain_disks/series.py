"""Truncated formal series with exact coefficients.

A :class:`TruncSeries` is a finite Laurent expansion ``sum c_k t^k`` together
with an absolute precision ``prec``: every exponent ``>= prec`` is unknown.
The variable is anonymous; most of the package uses it for ``h = T^(1/2)``,
but the same class also serves as a local-coordinate series whose
coefficients are themselves h-series (used for residues and reversion).

Precision is tracked pessimistically. A product of series known to ``H1``
and ``H2`` with valuations ``v1`` and ``v2`` is known to
``min(H1 + v2, H2 + v1)``; no operation silently extends validity.
"""

from __future__ import annotations

from typing import Any, Callable, Iterable, Mapping

from sympy import QQ

from .algebra import (
    DivisionByZeroSeries,
    NonInvertibleLeading,
    TruncationTooShort,
    is_zero,
    render_coeff,
)

EXACT = 1 << 40


def _clip(prec: int) -> int:
    return EXACT if prec >= EXACT // 2 else prec


def _inv(c: Any):
    if hasattr(c, "inverse"):
        return c.inverse()
    if hasattr(c, "is_ground"):
        if c.is_ground and c:
            return c.ring(1 / c.LC)
        raise NonInvertibleLeading(
            f"leading coefficient {render_coeff(c)} is not a unit in POLY mode"
        )
    if is_zero(c):
        raise DivisionByZeroSeries("inverse of zero coefficient")
    if isinstance(c, int):
        return QQ(1, c)
    return 1 / c


class TruncSeries:
    """Immutable truncated Laurent series ``sum_k c[k] t^k + O(t^prec)``."""

    __slots__ = ("c", "prec")

    def __init__(self, coeffs: Mapping[int, Any] | None = None, prec: int = EXACT):
        prec = _clip(prec)
        cleaned = {}
        if coeffs:
            for k, v in coeffs.items():
                if k < prec and not is_zero(v):
                    cleaned[int(k)] = v
        self.c = cleaned
        self.prec = prec

    # -- constructors -------------------------------------------------
    @classmethod
    def const(cls, c: Any, prec: int = EXACT) -> "TruncSeries":
        return cls({0: c}, prec)

    @classmethod
    def monomial(cls, c: Any, k: int, prec: int = EXACT) -> "TruncSeries":
        return cls({k: c}, prec)

    @classmethod
    def zero(cls, prec: int = EXACT) -> "TruncSeries":
        return cls({}, prec)

    # -- basic queries --------------------------------------------------
    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.render()})"

    def render(self, var: str = "h") -> str:
        terms = [f"({render_coeff(self.c[k])})*{var}^{k}" for k in sorted(self.c)]
        if self.prec < EXACT:
            terms.append(f"O({var}^{self.prec})")
        return " + ".join(terms) if terms else "0"

    def is_exact(self) -> bool:
        return self.prec >= EXACT

    def is_zero_series(self) -> bool:
        """True when no nonzero coefficient is stored (zero to known order)."""
        return not self.c and self.is_exact()

    def known_zero(self) -> bool:
        return not self.c

    def valuation(self) -> int:
        return min(self.c) if self.c else self.prec

    def max_exp(self) -> int | None:
        return max(self.c) if self.c else None

    def __getitem__(self, k: int):
        if k >= self.prec:
            raise TruncationTooShort(f"coefficient h^{k} unknown (prec {self.prec})")
        return self.c.get(k, 0)

    def coeff(self, k: int, zero: Any = 0):
        if k >= self.prec:
            raise TruncationTooShort(f"coefficient h^{k} unknown (prec {self.prec})")
        return self.c.get(k, zero)

    def truncate(self, prec: int) -> "TruncSeries":
        return type(self)(self.c, min(prec, self.prec))

    def map_coeffs(self, fn: Callable[[Any], Any]) -> "TruncSeries":
        return type(self)({k: fn(v) for k, v in self.c.items()}, self.prec)

    def shift(self, k: int) -> "TruncSeries":
        """Multiply by ``t^k``."""
        return type(self)({e + k: v for e, v in self.c.items()}, self.prec + k)

    def items(self) -> Iterable[tuple[int, Any]]:
        return sorted(self.c.items())

    # -- equality up to an order ---------------------------------------
    def eq_to(self, other: Any, order: int) -> bool:
        other = _as_series(other, type(self))
        if order > min(self.prec, other.prec):
            raise TruncationTooShort(
                f"cannot compare to order {order}: known to {min(self.prec, other.prec)}"
            )
        keys = {k for k in set(self.c) | set(other.c) if k < order}
        return all(is_zero(self.c.get(k, 0) - other.c.get(k, 0)) for k in keys)

    def __eq__(self, other: Any) -> bool:
        if type(other) is not type(self):
            if type(other) in (list, dict, tuple, str):
                return NotImplemented
            other = type(self).const(other)
        return self.prec == other.prec and self.c.keys() == other.c.keys() and all(
            is_zero(self.c[k] - other.c[k]) for k in self.c
        )

    def __hash__(self):
        return hash((self.prec, tuple(sorted(self.c))))

    # -- arithmetic ------------------------------------------------------
    def __neg__(self) -> "TruncSeries":
        return type(self)({k: -v for k, v in self.c.items()}, self.prec)

    def __add__(self, other: Any) -> "TruncSeries":
        other = _as_series(other, type(self))
        if other is NotImplemented:
            return NotImplemented
        prec = min(self.prec, other.prec)
        out = dict(self.c)
        for k, v in other.c.items():
            out[k] = out[k] + v if k in out else v
        return type(self)(out, prec)

    __radd__ = __add__

    def __sub__(self, other: Any) -> "TruncSeries":
        other = _as_series(other, type(self))
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other: Any) -> "TruncSeries":
        return (-self) + other

    def __mul__(self, other: Any) -> "TruncSeries":
        if type(other) is not type(self):
            if type(other) in (list, dict, tuple):
                return NotImplemented
            return self.scale(other)
        v1, v2 = self.valuation(), other.valuation()
        prec = min(self.prec + v2, other.prec + v1)
        prec = _clip(prec)
        out: dict[int, Any] = {}
        for i, a in self.c.items():
            for j, b in other.c.items():
                k = i + j
                if k >= prec:
                    continue
                if k in out:
                    out[k] = out[k] + a * b
                else:
                    out[k] = a * b
        return type(self)(out, prec)

    def __rmul__(self, other: Any) -> "TruncSeries":
        return self.scale(other)

    def scale(self, c: Any) -> "TruncSeries":
        """Multiply every coefficient by the scalar ``c``."""
        if is_zero(c):
            return type(self)({}, self.prec)
        return type(self)({k: v * c for k, v in self.c.items()}, self.prec)

    def inverse(self) -> "TruncSeries":
        v = self.valuation()
        if v >= self.prec:
            raise DivisionByZeroSeries("series vanishes to its known precision")
        rel = self.prec - v
        if self.is_exact() and len(self.c) == 1:
            return type(self)({-v: _inv(self.c[v])}, EXACT)
        if rel >= EXACT // 2:
            raise TruncationTooShort("inverse of an exact non-monomial series needs a cap")
        return self._inverse_to(rel)

    def inverse_capped(self, rel: int) -> "TruncSeries":
        """Inverse with relative precision capped at ``rel`` (for exact inputs)."""
        v = self.valuation()
        if v >= self.prec:
            raise DivisionByZeroSeries("series vanishes to its known precision")
        return self._inverse_to(min(rel, self.prec - v))

    def _inverse_to(self, rel: int) -> "TruncSeries":
        v = self.valuation()
        a = {k - v: c for k, c in self.c.items()}
        inv0 = _inv(a[0])
        b = [inv0]
        for n in range(1, rel):
            acc = None
            for k in range(1, n + 1):
                ak = a.get(k)
                if ak is None:
                    continue
                t = ak * b[n - k]
                acc = t if acc is None else acc + t
            b.append(-(acc * inv0) if acc is not None else 0 * inv0)
        return type(self)({n - v: c for n, c in enumerate(b)}, rel - v)

    def __truediv__(self, other: Any) -> "TruncSeries":
        if type(other) is type(self):
            return self * other.inverse()
        return self.scale(_inv(other))

    def __rtruediv__(self, other: Any) -> "TruncSeries":
        return _as_series(other, type(self)) * self.inverse()

    def __pow__(self, n: int) -> "TruncSeries":
        if n < 0:
            return self.inverse() ** (-n)
        result = type(self).const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # -- calculus / composition ------------------------------------------
    def derivative(self) -> "TruncSeries":
        return type(self)({k - 1: v * k for k, v in self.c.items() if k}, self.prec - 1)

    def compose(self, g: "TruncSeries") -> "TruncSeries":
        """``self(g)`` for a series ``self`` with non-negative exponents and
        ``g`` of positive valuation (or an exact polynomial ``self``)."""
        if self.c and min(self.c) < 0:
            raise ValueError("compose needs non-negative exponents")
        result = type(self).zero() if self.is_exact() else None
        if not self.is_exact():
            if g.valuation() < 1:
                raise ValueError("inner series must have positive valuation")
            result = type(self).zero(g.valuation() * self.prec)
        top = max(self.c) if self.c else 0
        for k in range(top, -1, -1):
            result = result * g + self.c.get(k, 0)
        return result


class LocalSeries(TruncSeries):
    """Series in a local coordinate whose coefficients are h-series.

    Kept as a distinct type so that an h-series operand is treated as a
    scalar coefficient rather than as a series in the same variable.
    """

    __slots__ = ()

    def __init__(self, coeffs: Mapping[int, Any] | None = None, prec: int = EXACT):
        if coeffs:
            coeffs = {k: v if isinstance(v, TruncSeries) else TruncSeries.const(v)
                      for k, v in coeffs.items()}
        super().__init__(coeffs, prec)

    def valuation(self) -> int:
        for k in sorted(self.c):
            if self.c[k].c:
                return k
        return self.prec


def _as_series(x: Any, cls: type | None = None):
    cls = cls or TruncSeries
    if type(x) is cls:
        return x
    # PolyElement subclasses dict, so test exact types
    if type(x) in (list, dict, tuple, str):
        return NotImplemented
    return cls.const(x)


def series_arith(a: TruncSeries, b: TruncSeries, op: str) -> TruncSeries:
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown op {op!r}")


def reversion(f: TruncSeries, order: int | None = None) -> TruncSeries:
    """Compositional inverse of ``f(t) = c1 t + c2 t^2 + ...``.

    Returns ``g`` with ``f(g(x)) = x + O(x^prec)``.  The coefficients may
    live in any field-like domain, including h-series.
    """
    if f.c and min(f.c) < 1:
        raise ValueError("reversion needs f(0) = 0")
    c1 = f.c.get(1)
    if c1 is None or is_zero(c1):
        raise NonInvertibleLeading("linear coefficient of f is zero")
    inv1 = _inv(c1)
    n = f.prec if order is None else min(order, f.prec)
    if n >= EXACT // 2:
        raise TruncationTooShort("reversion of an exact series needs an order")
    cls = type(f)
    rest = cls({k: v for k, v in f.c.items() if k >= 2}, n)
    x = cls.monomial(1, 1)
    g = cls({1: inv1}, 2)
    for m in range(2, n):
        g = cls((x - rest.compose(g.truncate(m))).scale(inv1).c, m + 1)
    return g.truncate(n)
