"""Small exact linear algebra: rational matrices and systems over h-series."""

from __future__ import annotations

from typing import Any, Sequence

from sympy import QQ

from .algebra import AlgebraError, NonInvertibleLeading, is_zero
from .series import TruncSeries, _inv


class SingularSystem(AlgebraError):
    def __init__(self, msg: str, nullity: int = 0):
        super().__init__(msg)
        self.nullity = nullity


class InconsistentSystem(AlgebraError):
    pass


def rref(rows: Sequence[Sequence[Any]]) -> tuple[list[list[Any]], list[int]]:
    """Reduced row echelon form over QQ; returns (matrix, pivot columns)."""
    m = [[QQ.convert(x) for x in r] for r in rows]
    pivots: list[int] = []
    r = 0
    ncols = len(m[0]) if m else 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


def nullspace(rows: Sequence[Sequence[Any]], ncols: int) -> list[list[Any]]:
    if not rows:
        return [[QQ(int(i == j)) for i in range(ncols)] for j in range(ncols)]
    m, pivots = rref(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [QQ(0)] * ncols
        v[f] = QQ(1)
        for i, pc in enumerate(pivots):
            v[pc] = -m[i][f]
        basis.append(v)
    return basis


class LeftInverse:
    """Exact solver for a fixed full-column-rank rational matrix ``J``.

    ``solve(b)`` returns ``x`` with ``J x = b`` and raises
    :class:`InconsistentSystem` when ``b`` is outside the column space.
    Entries of ``b`` may be any ring elements admitting rational scaling.
    """

    def __init__(self, J: Sequence[Sequence[Any]]):
        self.J = [[QQ.convert(x) for x in r] for r in J]
        nrows, ncols = len(self.J), len(self.J[0])
        aug = [row + [QQ(int(i == k)) for k in range(nrows)] for i, row in enumerate(self.J)]
        m, pivots = rref(aug)
        piv_cols = [p for p in pivots if p < ncols]
        if len(piv_cols) < ncols:
            raise SingularSystem(
                f"matrix has rank {len(piv_cols)} < {ncols}", nullity=ncols - len(piv_cols)
            )
        self.ncols = ncols
        # rows of m[:ncols] give x = T b; remaining rows give consistency checks
        self.T = [m[i][ncols:] for i in range(ncols)]
        self.checks = [m[i][ncols:] for i in range(ncols, nrows)]

    @staticmethod
    def _dot(row: Sequence[Any], b: Sequence[Any]):
        acc = None
        for a, x in zip(row, b):
            if a and not is_zero(x):
                t = x * a
                acc = t if acc is None else acc + t
        return acc

    def solve(self, b: Sequence[Any], zero: Any = 0) -> list[Any]:
        for row in self.checks:
            d = self._dot(row, b)
            if d is not None and not is_zero(d):
                raise InconsistentSystem("right-hand side not in the column space")
        out = []
        for row in self.T:
            d = self._dot(row, b)
            out.append(zero if d is None else d)
        return out


def solve_series_system(
    A: Sequence[Sequence[TruncSeries]], b: Sequence[TruncSeries]
) -> list[TruncSeries]:
    """Solve ``A x = b`` over h-series by valuation-pivoted elimination.

    Pivots are chosen with the lowest valuation among entries whose leading
    coefficient is invertible; precision losses are tracked by the series
    arithmetic.  Raises :class:`SingularSystem` (with nullity) or
    :class:`InconsistentSystem`.
    """
    rows = [list(r) + [bb] for r, bb in zip(A, b)]
    n = len(A[0])
    used_rows: list[int] = []
    pivot_of_col: dict[int, int] = {}
    remaining_cols = set(range(n))
    remaining_rows = set(range(len(rows)))
    while remaining_cols:
        best = None
        blocked = False
        for i in remaining_rows:
            for j in remaining_cols:
                e = rows[i][j]
                if not e.c:
                    continue
                v = e.valuation()
                try:
                    _inv(e.c[v])
                except AlgebraError:
                    blocked = True
                    continue
                key = (v, -e.prec, i, j)
                if best is None or key < best[0]:
                    best = (key, i, j)
        if best is None:
            if blocked:
                raise NonInvertibleLeading(
                    "every remaining pivot has a non-invertible leading coefficient"
                )
            raise SingularSystem(
                f"system is underdetermined at the working truncation (nullity {len(remaining_cols)})",
                nullity=len(remaining_cols),
            )
        _, i, j = best
        piv = rows[i][j]
        pinv = piv.inverse()
        rows[i] = [x * pinv for x in rows[i]]
        for k in remaining_rows | set(used_rows):
            if k == i or not rows[k][j].c:
                continue
            f = rows[k][j]
            rows[k] = [a - f * bb for a, bb in zip(rows[k], rows[i])]
        used_rows.append(i)
        pivot_of_col[j] = i
        remaining_cols.discard(j)
        remaining_rows.discard(i)
    x0 = [rows[pivot_of_col[j]][n] for j in range(n)]
    # Entries eliminated to O(h^k) still multiply unknowns of possibly negative
    # valuation; re-evaluating the reduced equations exposes the honest precision.
    out = list(x0)
    while True:
        nxt = []
        for j in range(n):
            lhs = _dot_series(rows[pivot_of_col[j]][:n], out)
            nxt.append(out[j].truncate(min(out[j].prec, lhs.prec)))
        if all(a.prec == b.prec for a, b in zip(nxt, out)):
            break
        out = nxt
    for k in remaining_rows:
        r = rows[k][n] - _dot_series(rows[k][:n], out)
        if r.c:
            raise InconsistentSystem(f"residual {r.render()} in a dependent equation")
    for A_row, bb in zip(A, b):
        r = bb - _dot_series(A_row, out)
        if r.c:
            raise InconsistentSystem(f"residual {r.render()} in an original equation")
    return out


def _dot_series(row: Sequence[TruncSeries], x: Sequence[TruncSeries]) -> TruncSeries:
    acc = TruncSeries.zero()
    for a, v in zip(row, x):
        if a.c or not a.is_exact():
            acc = acc + a * v
    return acc
