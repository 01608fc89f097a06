"""Planar Wick-contraction oracle for mixed moments of the chain.

Two routes are provided and cross-checked in the tests:

* :func:`planar_moment` -- memoized first-leg recursion.  Contracting the
  first letter of a planar word either pairs it with a later letter (which
  splits the word into two planar pieces) or with a leg of a cubic vertex.
* :func:`brute_force_moment` -- explicit enumeration of fat graphs: all
  perfect matchings of the half-edges of the boundary and of ``k`` vertices,
  keeping the connected genus-zero ones.

Both return the coefficient of ``T^((n + k)/2)`` in ``lim (1/N) <Tr word>``,
a homogeneous polynomial of degree ``k`` in the vertex couplings.
"""

from __future__ import annotations

import itertools
import os
from collections import Counter
from functools import lru_cache
from math import factorial
from typing import Any, Iterable, Sequence

from sympy import QQ

from .algebra import CoeffDomain
from .spectral_curve import ChainModel


class BudgetExceeded(RuntimeError):
    """The brute-force enumeration would exceed the configured diagram budget."""


def _min_rotation(word: tuple[int, ...]) -> tuple[int, ...]:
    if not word:
        return word
    return min(word[i:] + word[:i] for i in range(len(word)))


class PlanarOracle:
    """First-leg planar recursion for a chain with general vertex set.

    ``vertices[c]`` maps a color to ``{degree: weight}`` where ``weight`` is
    the coefficient ``g_{degree}`` of ``x^(degree-1)`` in ``V_c'``.  The
    quadratic part goes into the propagator ``C^{-1}``.
    """

    def __init__(self, model: ChainModel, domain: CoeffDomain | None = None,
                 budget: int | None = None):
        self.model = model
        self.budget = budget
        self.dom = domain or (model.domain if model.mode != "frac" else CoeffDomain.poly(model.all_symbols()))
        self.prop = model.propagator()
        self.N = model.N
        self.vertices: dict[int, list[tuple[int, Any]]] = {}
        for c in range(1, self.N + 1):
            d = model.potentials[c - 1].degree
            self.vertices[c] = [(i, self._g(c, i)) for i in range(3, d + 2)]
        self._memo: dict[tuple[tuple[int, ...], int], Any] = {}

    def _g(self, c: int, i: int):
        g = self.model.g(c, i)
        return self.dom.convert(g) if self.dom.kind != "num" else g

    def F(self, word: Sequence[int], k: int):
        """Genus-zero contribution of ``word`` with ``k`` vertices of total weight order ``k``.

        Here ``k`` counts vertex *insertions weighted by degree - 2*, so that a
        cubic vertex adds one unit; for cubic models it is the vertex count.
        """
        word = tuple(word)
        if k < 0:
            return self.dom.zero
        if not word:
            return self.dom.one if k == 0 else self.dom.zero
        if (len(word) + k) % 2:
            return self.dom.zero
        key = (_min_rotation(word), k)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        w = key[0]
        a, rest = w[0], w[1:]
        acc = self.dom.zero
        for j, b in enumerate(rest):
            cab = self.prop[a - 1][b - 1]
            if not cab:
                continue
            left, right = rest[:j], rest[j + 1:]
            for k1 in range(k + 1):
                fl = self.F(left, k1)
                if not fl:
                    continue
                fr = self.F(right, k - k1)
                if fr:
                    acc += fl * fr * cab
        for c in range(1, self.N + 1):
            cac = self.prop[a - 1][c - 1]
            if not cac:
                continue
            for deg, g in self.vertices[c]:
                if not g:
                    continue
                sub = self.F((c,) * (deg - 1) + rest, k - (deg - 2))
                if sub:
                    acc -= sub * g * cac
        self._memo[key] = acc
        if self.budget is not None and len(self._memo) > self.budget:
            raise BudgetExceeded(f"more than {self.budget} planar sub-words")
        return acc


def word_for(n: Sequence[int]) -> tuple[int, ...]:
    """``M_1^{n_1} M_2^{n_2} ...`` as a color word."""
    return tuple(c for c, m in enumerate(n, start=1) for _ in range(m))


def planar_moment(model: ChainModel, n: Sequence[int], v: int, oracle: PlanarOracle | None = None):
    """Table cell ``T^v_n``: coefficient of ``T^v`` in ``(T/N) <Tr M_1^n1 M_2^n2 ...>``."""
    oracle = oracle or PlanarOracle(model)
    k = 2 * v - 2 - sum(n)
    if k < 0:
        return oracle.dom.zero
    return oracle.F(word_for(n), k)


def oracle_table(model: ChainModel, nmax: int, vmax: int, nparts: int | None = None,
                 budget: int | None = None) -> dict:
    """All cells with ``|n| <= nmax`` and ``v <= vmax``."""
    oracle = PlanarOracle(model, budget=budget)
    out = {}
    N = nparts or model.N
    for total in range(0, nmax + 1):
        for n in _compositions(total, N):
            for v in range(1, vmax + 1):
                val = planar_moment(model, n, v, oracle)
                if val:
                    out[(n, v)] = val
    return out


def oracle_moment_table(model: ChainModel, nmax: int, vmax: int, budget: int | None = None):
    from .tables import MomentTable

    syms = model.all_symbols() if model.mode != "num" else ()
    cells = oracle_table(model, nmax, vmax, budget=budget)
    meta = {"nmax": nmax, "vmax": vmax}
    if budget is not None:
        meta["budget"] = budget
    return MomentTable(model.N, tuple(syms), cells, "oracle", meta)


def _compositions(total: int, parts: int) -> Iterable[tuple[int, ...]]:
    for cut in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for c in cut + (total + parts - 1,):
            out.append(c - prev - 1)
            prev = c
        yield tuple(out)


# --------------------------------------------------------------------------
# brute force over fat graphs


class FatDiagram:
    """A labelled fat graph: half-edge colors, the vertex cycle ``sigma`` and
    the edge involution ``alpha``; faces are the cycles of ``sigma o alpha``."""

    def __init__(self, colors: Sequence[int], sigma: Sequence[int], alpha: Sequence[int]):
        self.colors = tuple(colors)
        self.sigma = tuple(sigma)
        self.alpha = tuple(alpha)

    @staticmethod
    def _cycles(perm: Sequence[int]) -> int:
        seen = [False] * len(perm)
        n = 0
        for i in range(len(perm)):
            if not seen[i]:
                n += 1
                j = i
                while not seen[j]:
                    seen[j] = True
                    j = perm[j]
        return n

    def faces(self) -> int:
        return self._cycles([self.sigma[self.alpha[i]] for i in range(len(self.sigma))])

    def vertices(self) -> int:
        return self._cycles(self.sigma)

    def edges(self) -> int:
        return len(self.sigma) // 2

    def connected(self) -> bool:
        n = len(self.sigma)
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for i in range(n):
            for j in (self.sigma[i], self.alpha[i]):
                a, b = find(i), find(j)
                if a != b:
                    parent[a] = b
        return len({find(i) for i in range(n)}) == 1

    def genus(self) -> int:
        chi = self.vertices() - self.edges() + self.faces()
        return (2 - chi) // 2


def _matchings(items: list[int]):
    if not items:
        yield []
        return
    a = items[0]
    for i in range(1, len(items)):
        b = items[i]
        rest = items[1:i] + items[i + 1:]
        for m in _matchings(rest):
            yield [(a, b)] + m


def _double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def brute_force_moment(model: ChainModel, n: Sequence[int], v: int, budget: int = 2_000_000):
    """Same cell as :func:`planar_moment`, by enumerating labelled fat graphs.

    Supports cubic vertices only.  Each labelled diagram carries weight
    ``prod(-g_c/3) / k! * prod C^{-1}`` and the labelled count absorbs the
    vertex rotations.
    """
    if any(p.degree > 2 for p in model.potentials):
        raise ValueError("brute force supports cubic potentials only")
    dom = model.domain
    prop = model.propagator()
    word = word_for(n)
    k = 2 * v - 2 - len(word)
    if k < 0 or (len(word) + k) % 2:
        return dom.zero
    if not word:
        # the empty cell is the normalization <Tr 1>, not a sum over closed maps
        return dom.one if k == 0 else dom.zero
    half = len(word) + 3 * k
    # number of vertex-color assignments times matchings
    cost = (model.N ** k) * _double_factorial(half - 1)
    if cost > budget:
        raise BudgetExceeded(f"{cost} diagrams exceed budget {budget}")
    total = dom.zero
    L = len(word)
    boundary_sigma = [(i + 1) % L for i in range(L)] if L else []
    for vcols in itertools.product(range(1, model.N + 1), repeat=k):
        colors = list(word)
        sigma = list(boundary_sigma)
        for j, c in enumerate(vcols):
            base = L + 3 * j
            colors += [c, c, c]
            sigma += [base + 1, base + 2, base]
        weight = dom.one
        for c in vcols:
            weight = weight * model.g(c, 3) * QQ(-1, 3)
        if not weight:
            continue
        weight = weight * QQ(1, factorial(k))
        acc = QQ(0)
        for m in _matchings(list(range(half))):
            alpha = [0] * half
            w = QQ(1)
            for a, b in m:
                alpha[a], alpha[b] = b, a
                w *= prop[colors[a] - 1][colors[b] - 1]
                if not w:
                    break
            if not w:
                continue
            d = FatDiagram(colors, sigma, alpha)
            if not d.connected() or d.genus() != 0:
                continue
            acc += w
        if acc:
            total = total + weight * acc
    return total


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("CHAIN_DISKS_THREADS", "1")))
    except ValueError:
        return 1


def catalan(k: int) -> int:
    return factorial(2 * k) // (factorial(k) * factorial(k + 1))


def count_words(n: Sequence[int]) -> Counter:
    return Counter(word_for(n))
