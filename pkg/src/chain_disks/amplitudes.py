"""Mixed disk amplitudes on the rational curve.

``W_{1,N}`` comes from the closed form built on ``E``; the amplitudes with
more colors follow by the interpolation recursion in the first point.  Every
amplitude can be evaluated at h-series points, and (for the residue route)
written as an exact rational function of its first point.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from sympy import QQ

from .algebra import NUM, AlgebraError, CoeffDomain, TruncationTooShort, parse_rat, rat_str
from .fibers import FiberSet, fiber_points
from .laurent import PLaurent, PRational, residue_at
from .linalg import InconsistentSystem, LeftInverse
from .series import TruncSeries
from .tables import MomentTable
from .spectral_curve import ChainModel, CurveData, EPoly, reconstruct_E, solve_curve


class UnstableCoefficient(AlgebraError):
    """An extracted coefficient changed when the h-truncation was raised."""


class CalibrationFailed(AlgebraError):
    """No global normalization maps the Gaussian moments onto the oracle."""


Point = TruncSeries


def _pt(x: Any) -> TruncSeries:
    return x if isinstance(x, TruncSeries) else TruncSeries.const(x)


@dataclass
class MixedAmplitude:
    """``W_{1,j,...,N}`` as a function of curve points ``(p_1, p_j, ..., p_N)``."""

    curve: CurveData
    colors: tuple[int, ...]
    value_fn: Callable[[Sequence[TruncSeries]], TruncSeries]
    rational_fn: Callable[[Sequence[TruncSeries]], PRational]
    route: str = "interpolation"
    normalization: dict | None = None
    log: list[str] = field(default_factory=list)

    def __call__(self, *points: Any) -> TruncSeries:
        if len(points) != len(self.colors):
            raise ValueError(f"expected {len(self.colors)} points")
        return self.value_fn([_pt(p) for p in points])

    def rational_in_first(self, *rest: Any) -> PRational:
        """The amplitude as an exact rational function of its first point."""
        if len(rest) != len(self.colors) - 1:
            raise ValueError(f"expected {len(self.colors) - 1} spectator points")
        return self.rational_fn([_pt(p) for p in rest])


# --------------------------------------------------------------------------
# base amplitude


def _pl(x: Any) -> PLaurent:
    return x if isinstance(x, PLaurent) else PLaurent.const(x)


def base_amplitude(curve: CurveData, E: EPoly) -> MixedAmplitude:
    """``W_{1,N}(p, r) = sum_k E(Z_1..Z_k, Zt_{k+1}..Zt_N) / ((Z_k - Zt_k)(Z_{k+1} - Zt_{k+1}))``

    with ``Z_i = z_i(p)`` along the first end and ``Zt_i = z_i(r)`` along the last.
    For two matrices the sum carries the additive 1 of the two-matrix formula;
    without it the amplitude would start at ``h^0``.
    """
    N = curve.N
    shift = 1 if N == 2 else 0

    def value(pts: Sequence[TruncSeries]) -> TruncSeries:
        p, r = pts
        Z = [curve.zk(i).evaluate(p) for i in range(1, N + 1)]
        Zt = [curve.zk(i).evaluate(r) for i in range(1, N + 1)]
        D = [a - b for a, b in zip(Z, Zt)]
        acc = TruncSeries.const(shift) if shift else TruncSeries.zero()
        for k in range(1, N):
            acc = acc + E.evaluate(Z[:k] + Zt[k:]) / (D[k - 1] * D[k])
        return acc

    def rational(rest: Sequence[TruncSeries]) -> PRational:
        (r,) = rest
        Z = [curve.zk(i) for i in range(1, N + 1)]
        Zt = [PLaurent.const(curve.zk(i).evaluate(r)) for i in range(1, N + 1)]
        D = [a - b for a, b in zip(Z, Zt)]
        total = None
        for k in range(1, N):
            term = PRational(_pl(E.evaluate(Z[:k] + Zt[k:])), D[k - 1] * D[k])
            total = term if total is None else total + term
        if shift:
            total = PRational(total.num + total.den, total.den)
        return total

    return MixedAmplitude(curve, (1, N), value, rational, route="base")


# --------------------------------------------------------------------------
# kernel and recursion


def plus_nodes(curve: CurveData, j: int, pj: TruncSeries) -> FiberSet:
    fs = fiber_points(curve, j, pj)
    if fs.plus_families:
        raise AlgebraError(f"plus fiber of color {j} has irrational members; pick another point")
    return fs


def kernel_K(curve: CurveData, alpha: int, p: Any, r: Any, nodes: Sequence[TruncSeries] | None = None) -> PRational:
    """``K_alpha(p, q, r)`` as a rational function of ``q``.

    ``nodes`` defaults to the plus fiber of ``r`` for ``z_alpha``.
    """
    p, r = _pt(p), _pt(r)
    if nodes is None:
        nodes = plus_nodes(curve, alpha, r).plus_points
    z1 = curve.zk(1)
    x1 = z1.evaluate(p)
    xs = [z1.evaluate(q) for q in nodes]
    num = TruncSeries.const(1)
    for x in xs:
        num = num * (x1 - x)
    za = curve.zk(alpha)
    den = (z1 - PLaurent.const(x1)) * (za.evaluate(r) - za.evaluate(p))
    for x in xs:
        den = den * (z1 - PLaurent.const(x))
    return PRational(PLaurent.const(num), den)


def _lagrange_weights(xs: Sequence[TruncSeries], x: Any) -> list[Any]:
    out = []
    for i, xi in enumerate(xs):
        w = None
        for k, xk in enumerate(xs):
            if k == i:
                continue
            t = (x - xk) * (xi - xk).inverse() if not isinstance(x, PLaurent) else (x - PLaurent.const(xk)) * (xi - xk).inverse()
            w = t if w is None else w * t
        out.append(w if w is not None else (PLaurent.const(1) if isinstance(x, PLaurent) else TruncSeries.const(1)))
    return out


def recursion_step(curve: CurveData, W_next: MixedAmplitude, j: int) -> MixedAmplitude:
    """``W_{1,j,...}`` from ``W_{1,j+1,...}`` by the interpolation closed form

    ``(z_j(p_j) - z_j(p_1)) W_{1,j,..} = W_{1,j+1,..}(p_1) - sum_i W_{1,j+1,..}(q_i) L_i(z_1(p_1))``

    with nodes ``q_i`` the plus fiber of ``p_j`` for ``z_j`` (base included).
    """
    if not 2 <= j <= curve.N - 1:
        raise ValueError("recursion color must satisfy 2 <= j <= N-1")
    if W_next.colors[1] != j + 1:
        raise ValueError(f"expected an amplitude starting (1, {j + 1}, ...)")
    z1, zj = curve.zk(1), curve.zk(j)
    cache: dict[str, tuple] = {}

    def nodes_for(pj: TruncSeries, rest: Sequence[TruncSeries]):
        key = repr((pj.c, pj.prec, [(r.c, r.prec) for r in rest]))
        if key not in cache:
            qs = plus_nodes(curve, j, pj).plus_points
            xs = [z1.evaluate(q) for q in qs]
            ws = [W_next(q, *rest) for q in qs]
            cache[key] = (qs, xs, ws, zj.evaluate(pj))
        return cache[key]

    def value(pts: Sequence[TruncSeries]) -> TruncSeries:
        p1, pj, rest = pts[0], pts[1], list(pts[2:])
        _, xs, ws, zjp = nodes_for(pj, rest)
        x1 = z1.evaluate(p1)
        acc = W_next(p1, *rest)
        for w, L in zip(ws, _lagrange_weights(xs, x1)):
            acc = acc - w * L
        return acc / (zjp - zj.evaluate(p1))

    def rational(rest_all: Sequence[TruncSeries]) -> PRational:
        pj, rest = rest_all[0], list(rest_all[1:])
        _, xs, ws, zjp = nodes_for(pj, rest)
        inner = W_next.rational_in_first(*rest)
        poly = PLaurent.const(0)
        for w, L in zip(ws, _lagrange_weights(xs, z1)):
            poly = poly + L * w
        num = inner.num - poly * inner.den
        return PRational(num, inner.den * (PLaurent.const(zjp) - zj))

    return MixedAmplitude(curve, (1, j) + W_next.colors[1:], value, rational,
                          route="interpolation")


def recursion_residue_value(
    curve: CurveData, W_next: MixedAmplitude, j: int, points: Sequence[Any], max_pole: int = 8
) -> TruncSeries:
    """The same amplitude value by residues of ``K_j(p_1, q, p_j) W_{1,j+1,..}(q, ..) dz_1(q)``
    at ``q = p_1`` and at the plus fiber of ``p_j``."""
    pts = [_pt(p) for p in points]
    p1, pj, rest = pts[0], pts[1], pts[2:]
    nodes = plus_nodes(curve, j, pj).plus_points
    K = kernel_K(curve, j, p1, pj, nodes)
    f = K * W_next.rational_in_first(*rest) * curve.zk(1).derivative()
    total = TruncSeries.zero()
    for a in [p1] + list(nodes):
        total = total + residue_at(f, a, max_pole=max_pole)
    return total


def full_amplitude(curve: CurveData, E: EPoly) -> MixedAmplitude:
    """``W_{1,2,...,N}`` by folding the recursion from ``j = N-1`` down to ``2``."""
    W = base_amplitude(curve, E)
    for j in range(curve.N - 1, 1, -1):
        W = recursion_step(curve, W, j)
    return W


# --------------------------------------------------------------------------
# physical points and moment extraction


def _leading_profile(z: PLaurent, u: Any):
    """``h^0`` coefficient of ``z(u/h)``: the large-``x`` relation on the first-end sheets."""
    q = TruncSeries({-1: u})
    return z.evaluate(q).coeff(0)


def physical_point(curve: CurveData, j: int, value: Any) -> TruncSeries:
    """The preimage of ``x_j = value`` on the physical sheet of color ``j``.

    For the two ends the preimage is the unique root approaching the end
    (simple pole there).  For a middle color ``value`` is the leading
    coefficient ``u`` of the point ``u/h + O(1)``, and the moment variable is
    ``x_j = e_j(u)``; ``u`` must be the branch continuous with the Gaussian one
    (smallest leading coefficient among the plus roots).
    """
    from .fibers import fiber_polynomial
    from .puiseux import newton_polygon_roots

    N = curve.N
    z = curve.zk(j)
    cap = curve.H + 2
    if j in (1, N):
        target = TruncSeries.const(value)
        roots = newton_polygon_roots(fiber_polynomial(z, target), prec_cap=cap, families=[])
        want = [r for r in roots if (r.valuation < 0 if j == 1 else r.valuation > 0)]
        if len(want) != 1:
            raise AlgebraError(f"color {j}: expected one physical root, found {len(want)}")
        return want[0].series
    u = value
    X = _leading_profile(z, u)
    roots = newton_polygon_roots(fiber_polynomial(z, TruncSeries.const(X)), prec_cap=cap, families=[])
    plus = [r for r in roots if r.valuation == -1]
    mine = [r for r in plus if r.leading == u]
    if len(mine) != 1:
        raise AlgebraError(f"color {j}: no plus root with leading coefficient {u}")
    if any(abs(r.leading) < abs(u) for r in plus if r is not mine[0]):
        raise AlgebraError(f"color {j}: leading coefficient {u} is not on the Gaussian branch")
    return mine[0].series


def moment_variable(curve: CurveData, j: int, value: Any):
    """The value of ``x_j`` attached to a sample parameter (see :func:`physical_point`)."""
    if j in (1, curve.N):
        return value
    return _leading_profile(curve.zk(j), value)


def _first_params(m: int) -> list[Any]:
    return [QQ(4 + i, 2) for i in range(m)]


def _middle_params(m: int) -> list[Any]:
    return [QQ((-1) ** (i + 1), i + 3) for i in range(m)]


def _last_params(m: int) -> list[Any]:
    # disjoint from the first-end values: x_1 = x_N makes the closed form 0/0
    return [QQ(3 * i + 7, 3) for i in range(m)]


def sample_grid(N: int, D: int) -> list[tuple[int, ...]]:
    """Index tuples of a lower set unisolvent for total degree ``D`` plus one
    overdetermining point per axis."""
    pts = [t for t in itertools.product(range(D + 1), repeat=N) if sum(t) <= D]
    for i in range(N):
        pts.append(tuple(D + 1 if k == i else 0 for k in range(N)))
    return pts


def grid_params(N: int, D: int) -> list[list[Any]]:
    out = []
    for j in range(1, N + 1):
        if j == 1:
            out.append(_first_params(D + 2))
        elif j == N:
            out.append(_last_params(D + 2))
        else:
            out.append(_middle_params(D + 2))
    return out


def monomial_exponents(N: int, D: int) -> list[tuple[int, ...]]:
    return [n for n in itertools.product(range(D + 1), repeat=N) if sum(n) <= D]


_FIT_CACHE: dict[tuple, LeftInverse] = {}


def _fit_solver(xgrid: list[tuple[Any, ...]], expos: list[tuple[int, ...]]) -> LeftInverse:
    key = (tuple(xgrid), tuple(expos))
    if key not in _FIT_CACHE:
        rows = []
        for xs in xgrid:
            row = []
            for n in expos:
                val = QQ(1)
                for x, k in zip(xs, n):
                    val = val / x ** (k + 1)
                row.append(val)
            rows.append(row)
        _FIT_CACHE[key] = LeftInverse(rows)
    return _FIT_CACHE[key]


@dataclass
class SampleFit:
    """Per-coupling-sample moments ``{(n, v): rational}`` with its provenance."""

    values: dict[tuple[str, str], str]
    H: int
    cells: dict[tuple[tuple[int, ...], int], Any]
    raw: list[TruncSeries]


def fit_sample(model: ChainModel, vmax: int, H: int) -> SampleFit:
    """Evaluate ``W_{1..N}`` on the sample grid for one NUM model and fit the
    coefficients of ``prod x_i^{-(n_i+1)} h^{2v}`` exactly."""
    if model.mode != NUM:
        raise ValueError("fit_sample needs a NUM-mode model")
    curve = solve_curve(model, H)
    E = reconstruct_E(curve)
    W = full_amplitude(curve, E)
    cells, raw = fit_amplitude(curve, W, vmax)
    return SampleFit(dict(model.values), H, cells, raw)


def fit_amplitude(curve: CurveData, W: MixedAmplitude, vmax: int):
    """Exact moments of ``W`` (any color list) at a NUM curve.

    Returns ``({(n, v): rational}, raw values)`` with ``n`` indexed like
    ``W.colors`` and every ``|n| <= 2 vmax - 2``.
    """
    colors = W.colors
    k = len(colors)
    D = max(2 * vmax - 2, 0)
    allp = grid_params(curve.N, D)
    params = [allp[c - 1] for c in colors]
    pts_cache: dict[tuple[int, int], TruncSeries] = {}
    x_cache: dict[tuple[int, int], Any] = {}

    def point(pos: int, i: int):
        if (pos, i) not in pts_cache:
            c = colors[pos]
            pts_cache[(pos, i)] = physical_point(curve, c, params[pos][i])
            x_cache[(pos, i)] = QQ.convert(moment_variable(curve, c, params[pos][i]))
        return pts_cache[(pos, i)]

    grid = sample_grid(k, D)
    raw = []
    xgrid = []
    # spectators vary slowest so the recursion reuses its interpolation nodes
    for idx in sorted(grid, key=lambda t: t[::-1]):
        pts = [point(pos, i) for pos, i in enumerate(idx)]
        raw.append(W(*pts))
        xgrid.append(tuple(x_cache[(pos, i)] for pos, i in enumerate(idx)))
    need = 2 * vmax + 1
    for w in raw:
        if w.prec < need:
            raise TruncationTooShort(f"amplitude known to h^{w.prec}, need h^{need}; raise H")
        bad = [e for e in w.c if e % 2 or e < 2]
        if bad:
            raise AlgebraError(f"unexpected h-powers {bad} in the amplitude")
    expos = monomial_exponents(k, D)
    solver = _fit_solver(xgrid, expos)
    cells = {}
    for v in range(1, vmax + 1):
        b = [w.coeff(2 * v, QQ(0)) for w in raw]
        try:
            sol = solver.solve(b, QQ(0))
        except InconsistentSystem:
            raise AlgebraError(f"h^{2 * v} layer is not a polynomial of degree {D} in 1/x") from None
        for n, c in zip(expos, sol):
            if sum(n) > 2 * v - 2 and c:
                raise AlgebraError(f"cell {n} at v={v} exceeds the vertex bound")
            cells[(n, v)] = c
    return cells, raw


# --------------------------------------------------------------------------
# coupling interpolation


def symbol_weights(model: ChainModel) -> dict[str, int] | None:
    """Weight ``deg - 2`` of each coupling symbol, or ``None`` when the cells are
    not weighted-homogeneous (numeric higher couplings or a symbol reused at
    two degrees)."""
    w: dict[str, int] = {}
    for pot in model.potentials:
        for i, text in enumerate(pot.coeffs[1:], start=1):
            try:
                parse_rat(text)
                return None
            except ValueError:
                pass
            if w.setdefault(text, i) != i:
                return None
    return w


def _lattice(m: int, D: int) -> list[tuple[int, ...]]:
    return [t for t in itertools.product(range(D + 1), repeat=m) if sum(t) <= D]


def _lattice_value(t: int) -> Any:
    return QQ(t + 1, 2)


def _sample_worker(args):
    model, vmax, H = args
    return fit_sample(model, vmax, H)


def _run_samples(models: list[ChainModel], vmax: int, H: int, threads: int) -> list[SampleFit]:
    jobs = [(m, vmax, H) for m in models]
    if threads <= 1 or len(jobs) == 1:
        return [_sample_worker(j) for j in jobs]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(_sample_worker, jobs))


def extract_moments(
    model: ChainModel,
    nmax: int,
    vmax: int,
    H: int | None = None,
    stability: bool = True,
    threads: int | None = None,
) -> MomentTable:
    """Moments ``T^v_n`` of ``W_{1,2,..,N}`` for ``|n| <= nmax``, ``v <= vmax``.

    NUM models are fitted directly.  Symbolic models are sampled at rational
    couplings and interpolated exactly; weighted homogeneity lets the first
    symbol be fixed to 1.  With ``stability`` the whole extraction is repeated
    at ``H + 2`` and any changed cell raises :class:`UnstableCoefficient`.
    """
    from .oracle import thread_count

    H = H if H is not None else 2 * vmax + 6
    threads = threads or thread_count()
    first = _extract_at(model, nmax, vmax, H, threads)
    if stability:
        second = _extract_at(model, nmax, vmax, H + 2, threads)
        for key in set(first.cells) | set(second.cells):
            if first.get(*key) != second.get(*key):
                raise UnstableCoefficient(f"cell {key} changed between H={H} and H={H + 2}")
        first.meta["stability"] = f"H={H} vs H={H + 2}: identical"
    return first


def _extract_at(model: ChainModel, nmax: int, vmax: int, H: int, threads: int) -> MomentTable:
    syms = model.all_symbols() if model.mode != NUM else ()
    dom = CoeffDomain.poly(syms) if syms else CoeffDomain.num()
    D = max(2 * vmax - 2, 0)
    if not syms:
        base = model if model.mode == NUM else model.with_values({})
        fits = _run_samples([base], vmax, H, threads)
        cells = {k: dom.convert(v) for k, v in fits[0].cells.items() if sum(k[0]) <= nmax}
        return MomentTable(model.N, (), cells, "recursion", {"H": H, "samples": 1})
    weights = symbol_weights(model)
    if weights is not None:
        free = syms[1:]
        pins = {syms[0]: QQ(1)}
    else:
        free = syms
        pins = {}
    lat = _lattice(len(free), D)
    models = []
    for t in lat:
        vals = dict(pins)
        vals.update({s: _lattice_value(k) for s, k in zip(free, t)})
        models.append(model.with_values({k: rat_str(v) for k, v in vals.items()}))
    fits = _run_samples(models, vmax, H, threads)
    # Vandermonde over the principal lattice
    expos = _lattice(len(free), D)
    rows = []
    for t in lat:
        pt = [_lattice_value(k) for k in t]
        row = []
        for e in expos:
            val = QQ(1)
            for x, k in zip(pt, e):
                val *= x**k
            row.append(val)
        rows.append(row)
    solver = LeftInverse(rows)
    gens = dict(zip(syms, dom.ring.gens))
    cells = {}
    for key in fits[0].cells:
        n, v = key
        if sum(n) > nmax:
            continue
        coeffs = solver.solve([f.cells[key] for f in fits], QQ(0))
        poly = dom.ring.zero
        k = 2 * v - 2 - sum(n)
        for e, c in zip(expos, coeffs):
            if not c:
                continue
            term = dom.ring.one * c
            for s, a in zip(free, e):
                term *= gens[s] ** a
            if weights is not None:
                rem = k - sum(a * weights[s] for s, a in zip(free, e))
                w0 = weights[syms[0]]
                if rem < 0 or rem % w0:
                    raise AlgebraError(f"cell {key} is not weighted-homogeneous of weight {k}")
                term *= gens[syms[0]] ** (rem // w0)
            poly += term
        cells[key] = poly
    meta = {"H": H, "samples": len(lat), "pinned": {s: rat_str(v) for s, v in pins.items()}}
    return MomentTable(model.N, syms, cells, "recursion", meta)


# --------------------------------------------------------------------------
# loop equations


@dataclass
class LoopReport:
    """Outcome of one loop-equation check; failures are content, not errors."""

    j: int
    route: str
    passed: bool
    residual: dict = field(default_factory=dict)
    degree: int | None = None
    bound: int | None = None
    detail: str = ""

    def as_dict(self) -> dict:
        return {
            "j": self.j,
            "route": self.route,
            "passed": self.passed,
            "residual": {str(k): rat_str(v) if not hasattr(v, "ring") else str(v)
                         for k, v in sorted(self.residual.items())},
            "degree": self.degree,
            "bound": self.bound,
            "detail": self.detail,
        }


def amplitude_chain(curve: CurveData, E: EPoly, j: int) -> tuple[MixedAmplitude, MixedAmplitude]:
    """``(W_{1,j,..,N}, W_{1,j+1,..,N})`` by folding the recursion down to ``j``."""
    if not 2 <= j <= curve.N - 1:
        raise ValueError("loop-equation color must satisfy 2 <= j <= N-1")
    W = base_amplitude(curve, E)
    for k in range(curve.N - 1, j, -1):
        W = recursion_step(curve, W, k)
    return recursion_step(curve, W, j), W


def loop_residual_moments(
    curve: CurveData,
    j: int,
    cells_j: dict,
    cells_next: dict,
    vmax: int,
) -> tuple[dict, int]:
    """Moments of ``(x_j - Z_j(x_1)) W_{1,j,..} - W_{1,j+1,..}``.

    ``Z_j(x_1)`` is ``z_j`` along the physical sheet of ``x_1``, taken from the
    first-end resolvent and the chain relations.  Keys are
    ``(exponents of (x_1, x_j, .., x_N), h-power)``; cells are those of
    :func:`fit_amplitude`.  Returns the residual and the lowest ``x_1``
    exponent that is fully determined.
    """
    from .spectral_curve import physical_chain

    order = 2 * vmax + 4
    Zj = physical_chain(curve, order)[j - 1]
    hmax = 2 * vmax
    for a, s in Zj.c.items():
        if s.c and s.prec <= hmax - 2:
            raise TruncationTooShort(f"z_{j} along the physical sheet known to h^{s.prec}; raise H")
    R: dict = {}

    def add(key, c):
        if c:
            R[key] = R.get(key, QQ(0)) + c

    for (n, v), c in cells_j.items():
        if not c:
            continue
        e = tuple(-(k + 1) for k in n)
        # x_j W
        add(((e[0], e[1] + 1) + e[2:], 2 * v), c)
        # - Z_j(x_1) W, with Z_j = sum_a s_a xi^a
        for a, s in Zj.c.items():
            for hp, sc in s.c.items():
                if hp + 2 * v > hmax:
                    continue
                add(((e[0] - a,) + e[1:], hp + 2 * v), -c * QQ.convert(sc))
    for (n, v), c in cells_next.items():
        if c:
            e = tuple(-(k + 1) for k in n)
            add(((e[0], 0) + e[1:], 2 * v), -c)
    return {k: v for k, v in R.items() if v}, -Zj.prec


def verify_loop_equation(curve: CurveData, E: EPoly, j: int, vmax: int = 3) -> LoopReport:
    """Loop equation for color ``j`` in the moment domain.

    The amplitudes are fitted on the physical sheets and combined with the
    independent large-``x_1`` expansion of ``z_j``.  The residual must be a
    polynomial in ``x_1`` of degree at most ``s_j - 1`` (the term ``-P``):
    every negative power of ``x_1`` cancels.  NUM curves only.
    """
    if curve.model.mode != NUM:
        raise ValueError("the moment-domain loop check needs a NUM curve")
    Wj, Wn = amplitude_chain(curve, E, j)
    try:
        cj, _ = fit_amplitude(curve, Wj, vmax)
        cn, _ = fit_amplitude(curve, Wn, vmax)
    except TruncationTooShort:
        raise
    except AlgebraError as exc:
        # the amplitudes are not moment series on the physical sheet
        return LoopReport(j, "moments", False, {}, None, curve.s(j) - 1, f"no moment fit: {exc}")
    R, lowest = loop_residual_moments(curve, j, cj, cn, vmax)
    bound = curve.s(j) - 1
    bad = {k: v for k, v in R.items() if k[0][0] >= lowest and (k[0][0] < 0 or k[0][0] > bound)}
    degree = max((k[0][0] for k in R), default=None)
    return LoopReport(
        j, "moments", not bad, bad, degree, bound,
        f"{len(cj)} cells at v <= {vmax}; x1 exponents >= {lowest} checked",
    )


def verify_loop_equation_values(
    curve: CurveData,
    E: EPoly,
    j: int,
    spectators: Sequence[Any],
    firsts: Sequence[Any],
    max_pole: int = 8,
) -> LoopReport:
    """Loop equation for color ``j`` in the function domain.

    ``W_{1,j,..}`` is evaluated by the residue route at first points ``firsts``
    (with the given spectator points).  ``R(p_1) = (z_j(p_j) - z_j(p_1)) W_{1,j,..}
    - W_{1,j+1,..}`` must be a polynomial of degree ``<= s_j - 1`` in
    ``z_1(p_1)``: all divided differences of order ``s_j`` vanish.
    """
    if len(firsts) < curve.s(j) + 1:
        raise ValueError(f"need at least {curve.s(j) + 1} first points")
    W = base_amplitude(curve, E)
    for k in range(curve.N - 1, j, -1):
        W = recursion_step(curve, W, k)
    pts = [_pt(p) for p in spectators]
    pj, rest = pts[0], pts[1:]
    zj, z1 = curve.zk(j), curve.zk(1)
    xs, rs = [], []
    for p1 in map(_pt, firsts):
        w = recursion_residue_value(curve, W, j, [p1, pj, *rest], max_pole=max_pole)
        rs.append((zj.evaluate(pj) - zj.evaluate(p1)) * w - W(p1, *rest))
        xs.append(z1.evaluate(p1))
    order = curve.s(j)
    table = list(rs)
    for level in range(1, order + 1):
        table = [(table[i + 1] - table[i]) / (xs[i + level] - xs[i]) for i in range(len(table) - 1)]
    bad = {i: d.render() for i, d in enumerate(table) if d.c}
    known = min(d.prec for d in table)
    return LoopReport(
        j, "values", not bad and known > 0, bad, None, order - 1,
        f"{len(firsts)} first points, divided differences of order {order} vanish to h^{known}",
    )


# --------------------------------------------------------------------------
# calibration against the Gaussian oracle


def _const(c: Any):
    if hasattr(c, "ring"):
        return c.coeff(1) if c.is_ground else None
    return c


def _flip_couplings(c: Any):
    """``c(-g)``: every coupling symbol negated."""
    if hasattr(c, "ring"):
        return c.compose([(g, -g) for g in c.ring.gens])
    return c


def calibrate_conventions(raw: MomentTable, oracle: MomentTable, nmax: int = 4) -> dict:
    """Fix the conventions relating extracted cells to the table.

    Determined by exact matching:

    * ``t_shift``: table ``v`` = extracted ``v + t_shift``;
    * ``factor``: global normalization of the extracted coefficients;
    * ``local_degree``: per-variable residue normalization, read from the
      Gaussian cells ``n = 2 e_i``;
    * ``coupling_sign``: ``+1`` or ``-1`` for the sign of the vertex couplings,
      read from the cells linear in the couplings.

    All coupling-free cells with ``|n| <= nmax`` must then agree.
    """
    gauss = {k: _const(c) for k, c in oracle.cells.items()
             if sum(k[0]) <= nmax and _const(c) is not None and c}
    if not gauss:
        raise CalibrationFailed("oracle table has no Gaussian cells")
    for shift in (0, -1, 1, -2, 2):
        ratios = set()
        ok = True
        for (n, v), want in gauss.items():
            got = _const(raw.get(n, v - shift))
            if not got:
                ok = False
                break
            ratios.add(QQ.convert(want) / QQ.convert(got))
        if ok and len(ratios) == 1:
            factor = ratios.pop()
            break
    else:
        raise CalibrationFailed("no T-shift maps the Gaussian cells onto the oracle")
    N = oracle.N
    local = []
    for i in range(N):
        n = tuple(2 if k == i else 0 for k in range(N))
        want = _const(oracle.get(n, 2))
        got = _const(raw.get(n, 2 - shift))
        if not want or not got:
            raise CalibrationFailed(f"no Gaussian two-point cell for variable {i + 1}")
        d = QQ.convert(got) * factor / QQ.convert(want)
        if d != 1:
            raise CalibrationFailed(f"variable {i + 1} needs local normalization {d}")
        local.append(1)
    # Gaussian cells that must vanish: odd total degree
    for (n, v), c in raw.cells.items():
        if sum(n) <= nmax and (sum(n) % 2) == 1 and _const(c) and (n, v + shift) not in oracle.cells:
            raise CalibrationFailed(f"odd Gaussian cell {n} at v={v} is nonzero")
    sign = None
    for s in (1, -1):
        good = True
        seen = False
        for (n, v), want in oracle.cells.items():
            if sum(n) > nmax or 2 * v - 2 - sum(n) != 1:
                continue
            got = raw.get(n, v - shift)
            got = got if s == 1 else _flip_couplings(got)
            seen = True
            if got * factor != want:
                good = False
                break
        if good:
            sign = s
            break
        if not seen:
            sign = 1
            break
    if sign is None:
        raise CalibrationFailed("no coupling sign reproduces the linear cells")
    return {
        "t_shift": shift,
        "factor": rat_str(factor),
        "local_degree": local,
        "coupling_sign": sign,
        "gaussian_cells": len(gauss),
    }


def apply_calibration(raw: MomentTable, record: dict) -> MomentTable:
    """Re-key and rescale an extracted table by a calibration record."""
    shift = record["t_shift"]
    factor = parse_rat(record["factor"])
    scale = factor
    for d in record["local_degree"]:
        scale /= d
    cells = {}
    for (n, v), c in raw.cells.items():
        if record["coupling_sign"] == -1:
            c = _flip_couplings(c)
        cells[(n, v + shift)] = c * raw.domain.convert(scale) if hasattr(c, "ring") else c * scale
    return MomentTable(raw.N, raw.symbols, cells, raw.pipeline, dict(raw.meta), dict(record))
