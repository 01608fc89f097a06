"""The invariant suite: every identity the pipeline must satisfy, as data.

Each check returns a :class:`CheckResult`; nothing here raises on a failed
identity.  Exceptions inside a check are reported as failures of that check.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Any, Callable

from sympy import QQ

from .algebra import NUM, AlgebraError, rat_str, render_coeff
from .amplitudes import (
    apply_calibration,
    base_amplitude,
    calibrate_conventions,
    extract_moments,
    full_amplitude,
    physical_point,
    recursion_residue_value,
    recursion_step,
    verify_loop_equation,
    verify_loop_equation_values,
)
from .fibers import completeness_residual, family_quotient, fiber_points, verify_injectivity
from .laurent import INF, ZERO, PLaurent, PRational, residue_at
from .oracle import PlanarOracle, catalan, oracle_moment_table, word_for
from .printed_table import compare_tables
from .series import TruncSeries
from .spectral_curve import (
    ChainModel,
    CurveData,
    EPoly,
    curve_residuals,
    master_equation_holds,
    master_equation_residual,
    reconstruct_E,
    residual_vanishes,
    solve_curve,
    specialize_curve,
)

SAMPLE = ("1", "2/3", "1/2", "3/4", "2/5", "5/6")


@dataclass
class CheckResult:
    name: str
    status: str  # "pass", "fail" or "n/a"
    detail: str = ""
    seconds: float = 0.0
    data: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status != "fail"

    def as_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "detail": self.detail,
                "seconds": round(self.seconds, 3), **({"data": self.data} if self.data else {})}


def _run(name: str, fn: Callable[[], tuple[bool | None, str]]) -> CheckResult:
    t = time.perf_counter()
    try:
        ok, detail = fn()
        status = "n/a" if ok is None else ("pass" if ok else "fail")
    except (AlgebraError, ValueError, ZeroDivisionError) as exc:
        status, detail = "fail", f"{type(exc).__name__}: {exc}"
    return CheckResult(name, status, detail, time.perf_counter() - t)


def sample_model(model: ChainModel) -> ChainModel:
    """A NUM copy of ``model`` at fixed generic rational couplings."""
    if model.mode == NUM:
        return model
    syms = model.all_symbols()
    return model.with_values({s: SAMPLE[i % len(SAMPLE)] for i, s in enumerate(syms)})


# --------------------------------------------------------------------------
# curve-level identities


def check_curve(curve: CurveData) -> tuple[bool, str]:
    res = curve_residuals(curve)
    bad = [k for k, r in res.items() if not residual_vanishes(r, curve.H + 1)]
    return not bad, f"{len(res)} defining relations vanish to h^{curve.H + 1}" if not bad else f"nonzero: {bad}"


def check_E_vanishes(curve: CurveData, E: EPoly, target: int | None = None) -> tuple[bool, str]:
    """``E(z_1(p), .., z_N(p)) = O(h^target)``.  E is known one order below the
    curve, so ``target`` defaults to ``H - 1``."""
    target = curve.H - 1 if target is None else target
    val = E.evaluate([PLaurent(dict(z.a)) for z in curve.z])
    lo = min((v.prec for v in val.a.values()), default=curve.H)
    bad = {k: v.render() for k, v in val.a.items() if v.c}
    if bad:
        return False, f"nonzero terms {bad}"
    return lo >= target, f"E(z_1(p), ..., z_N(p)) = O(h^{lo}), required h^{target}"


def check_master(curve: CurveData, E: EPoly) -> tuple[bool, str]:
    r = master_equation_residual(curve, E, 12)
    known = min((v.prec for v in r.c.values()), default=0)
    top = -min(r.c, default=0)
    return master_equation_holds(r), (f"E along the physical branch: coefficients of x^{top} .. "
                                      f"x^-{r.prec - 1} vanish to h^{known}")


# --------------------------------------------------------------------------
# fibers


def _base_points(curve: CurveData) -> list[TruncSeries]:
    return [TruncSeries.const(QQ(3)), TruncSeries.const(QQ(-5, 2))]


def check_fibers(curve: CurveData) -> tuple[bool, str]:
    notes = []
    ok = True
    for j in range(1, curve.N + 1):
        for b in _base_points(curve):
            fs = fiber_points(curve, j, b)
            ok &= fs.n_plus == curve.s(j) and fs.n_minus == curve.r(j)
            if fs.explicit:
                ok &= all(not r.c for r in completeness_residual(fs))
            else:
                q = family_quotient(fs)
                ok &= len(q) - 1 == sum(f.degree for f in fs.plus_families + fs.minus_families)
        notes.append(f"z{j}: {fs.n_plus}+{fs.n_minus}")
    return ok, ", ".join(notes)


def check_injectivity(curve: CurveData, count: int = 10, seed: int = 7) -> tuple[bool | None, str]:
    if curve.N < 3:
        return None, "no middle color"
    rng = random.Random(seed)
    bases = []
    while len(bases) < count:
        a, b = rng.randint(-9, 9), rng.randint(1, 7)
        if a:
            bases.append(TruncSeries.const(QQ(a, b)))
    ok = True
    pairs = 0
    for k in range(2, curve.N):
        rep = verify_injectivity(curve, k, bases)
        ok &= rep.passed
        pairs += sum(1 for w in rep.witnesses if w.get("pair") is not None)
    return ok, f"{count} random points, {pairs} sheet pairs"


# --------------------------------------------------------------------------
# amplitudes


def _sample_points(curve: CurveData) -> list[TruncSeries]:
    """Physical points for colors 2..N at fixed sample values."""
    pts = []
    for k in range(2, curve.N + 1):
        if k == curve.N:
            pts.append(physical_point(curve, k, QQ(10, 3)))
        else:
            pts.append(physical_point(curve, k, QQ(-1, 4)))
    return pts


def check_two_paths(curve: CurveData, E: EPoly) -> tuple[bool | None, str]:
    if curve.N < 3:
        return None, "no recursion step for two matrices"
    W = base_amplitude(curve, E)
    worst = None
    for j in range(curve.N - 1, 1, -1):
        Wj = recursion_step(curve, W, j)
        rest = _sample_points(curve)[j - 2:]
        for X in (QQ(5, 2), QQ(7, 2)):
            p1 = physical_point(curve, 1, X)
            a = Wj(p1, *rest)
            b = recursion_residue_value(curve, W, j, [p1, *rest])
            d = a - b
            if d.c:
                return False, f"j={j}: routes differ by {d.render()}"
            worst = d.prec if worst is None else min(worst, d.prec)
        W = Wj
    return True, f"interpolation and residue routes agree to h^{worst}"


def check_loop_values(curve: CurveData, E: EPoly) -> tuple[bool | None, str]:
    if curve.N < 3:
        return None, "no loop equation between mixed amplitudes"
    notes = []
    ok = True
    pts = _sample_points(curve)
    firsts = [physical_point(curve, 1, QQ(k, 2)) for k in (5, 6, 7, 9)]
    for j in range(2, curve.N):
        rep = verify_loop_equation_values(curve, E, j, pts[j - 2:], firsts)
        ok &= rep.passed
        notes.append(f"j={j}: {rep.detail}")
    return ok, "; ".join(notes)


def check_loop_moments(model: ChainModel, vmax: int = 3) -> tuple[bool | None, str]:
    if model.N < 3:
        return None, "no loop equation between mixed amplitudes"
    m = sample_model(model)
    curve = solve_curve(m, 2 * vmax + 8)
    E = reconstruct_E(curve)
    ok = True
    notes = []
    for j in range(2, model.N):
        rep = verify_loop_equation(curve, E, j, vmax)
        ok &= rep.passed
        notes.append(f"j={j}: P of degree {rep.degree} <= {rep.bound}, {rep.detail}")
    return ok, "; ".join(notes)


def gaussian_residue_sum(curve: CurveData, E: EPoly, j: int = 2) -> TruncSeries:
    """Sum of the residues of ``K_j(p_1, q, p_j) W_{1,j+1..}(q) dz_1(q)`` over all poles.

    Quadratic potentials only: every ``z_k`` is ``a q + c + b/q`` and the
    other root of ``z_k(q) = z_k(rho)`` is ``b / (a rho)``, so every pole is
    explicit.
    """
    if any(d != 1 for d in curve.model.degrees):
        raise ValueError("explicit pole set needs quadratic potentials")
    W = base_amplitude(curve, E)
    for k in range(curve.N - 1, j, -1):
        W = recursion_step(curve, W, k)
    rest = _sample_points(curve)[j - 2:]
    p1 = physical_point(curve, 1, QQ(5, 2))
    from .amplitudes import kernel_K, plus_nodes

    nodes = plus_nodes(curve, j, rest[0]).plus_points
    f = kernel_K(curve, j, p1, rest[0], nodes) * W.rational_in_first(*rest[1:]) * curve.zk(1).derivative()
    seeds = [p1, *nodes, *rest[1:]]
    poles: list[TruncSeries] = []
    for rho in seeds:
        for z in curve.z:
            a, b = z[1], z[-1]
            for cand in (rho, b * (a * rho).inverse()):
                if not any(not (cand - q).c for q in poles):
                    poles.append(cand)
    total = residue_at(f, ZERO) + residue_at(f, INF)
    for q in poles:
        total = total + residue_at(f, q)
    return total


def check_residue_sum(curve: CurveData, E: EPoly) -> tuple[bool | None, str]:
    if curve.N < 3:
        return None, "no recursion integrand for two matrices"
    if any(d != 1 for d in curve.model.degrees):
        return None, "explicit pole set needs quadratic potentials"
    s = gaussian_residue_sum(curve, E)
    return not s.c, f"sum of residues = {s.render()}"


# --------------------------------------------------------------------------
# oracle


def check_catalan(model: ChainModel, kmax: int = 4) -> tuple[bool, str]:
    gauss = model.with_values({s: "0" for s in model.all_symbols()}) if model.all_symbols() else model
    orc = PlanarOracle(gauss)
    prop = gauss.propagator()
    bad = []
    for i in range(1, model.N + 1):
        for k in range(1, kmax + 1):
            n = tuple(2 * k if c == i else 0 for c in range(1, model.N + 1))
            got = orc.F(word_for(n), 0)
            want = catalan(k) * prop[i - 1][i - 1] ** k
            if got != want:
                bad.append((i, k, rat_str(got), rat_str(want)))
    return not bad, f"<Tr M_i^2k> = Cat(k) [C^-1]_ii^k for k <= {kmax}" if not bad else f"{bad}"


def check_equivalence(model: ChainModel, nmax: int, vmax: int, threads: int | None = None):
    raw = extract_moments(model, nmax, vmax, threads=threads)
    orc = oracle_moment_table(model, nmax, vmax)
    rec = calibrate_conventions(raw, orc)
    cal = apply_calibration(raw, rec)
    rep = compare_tables(cal, orc)
    bad = [(c.n, c.v) for c in rep.mismatches]
    return (not bad, f"{len(rep.cells)} cells, |n| <= {nmax}, v <= {vmax}; {raw.meta.get('stability', '')}"
            if not bad else f"mismatched cells {bad}")


def check_symmetry(model: ChainModel, nmax: int, vmax: int) -> tuple[bool | None, str]:
    """``T_(n1..nN)(g_1..g_N) = T_(nN..n1)(g_N..g_1)`` for a mirror-symmetric chain."""
    pots = [p.coeffs for p in model.potentials]
    if model.all_symbols() == () or [p[0] for p in pots] != [p[0] for p in pots[::-1]] \
            or list(model.couplings) != list(model.couplings)[::-1]:
        return None, "model is not mirror symmetric"
    t = oracle_moment_table(model, nmax, vmax)
    swap = {}
    for a, b in zip(pots, pots[::-1]):
        for x, y in zip(a[1:], b[1:]):
            swap[x] = y
    gens = dict(zip(t.symbols, t.domain.ring.gens))
    sub = [(gens[x], gens[y]) for x, y in swap.items() if x in gens and y in gens]
    bad = []
    for (n, v), c in t.cells.items():
        if t.get(n[::-1], v) != c.compose(sub):
            bad.append((n, v))
    return not bad, f"{len(t.cells)} oracle cells mirror-symmetric" if not bad else f"{bad}"


# --------------------------------------------------------------------------
# suite


def run_suite(
    model: ChainModel,
    nmax: int = 4,
    vmax: int = 3,
    curve: CurveData | None = None,
    equivalence: bool = True,
    threads: int | None = None,
    loop_vmax: int = 3,
) -> list[CheckResult]:
    """All invariants for ``model``.

    ``curve`` replaces the solved curve, e.g. one read from disk; every
    curve-dependent check then runs on it (NUM-only checks on its
    specialization to sample couplings).
    """
    out: list[CheckResult] = []
    supplied = curve is not None
    c = curve if supplied else solve_curve(model)
    out.append(_run("curve_identities", lambda: check_curve(c)))
    sample = dict(sample_model(model).values)
    cn = c if c.model.mode == NUM else specialize_curve(c, sample)
    try:
        E = reconstruct_E(c)
        En = E if cn is c else reconstruct_E(cn)
    except AlgebraError as exc:
        E = En = None
        why = f"no E: {type(exc).__name__}: {exc}"
    if E is None:
        for name in ("E_vanishes", "master_equation", "two_path_agreement",
                     "loop_equation_values", "loop_equation_moments"):
            out.append(CheckResult(name, "fail", why))
    else:
        if not supplied:
            # E is one order short of the curve: certify O(h^H) from a curve at H + 1
            def e_check():
                c1 = solve_curve(model, model.H + 1)
                return check_E_vanishes(c1, reconstruct_E(c1), model.H)
            out.append(_run("E_vanishes", e_check))
        else:
            out.append(_run("E_vanishes", lambda: check_E_vanishes(c, E)))
        out.append(_run("master_equation", lambda: check_master(c, E)))
        out.append(_run("two_path_agreement", lambda: check_two_paths(cn, En)))
        out.append(_run("loop_equation_values", lambda: check_loop_values(cn, En)))
        if not supplied:
            out.append(_run("loop_equation_moments", lambda: check_loop_moments(model, loop_vmax)))
        else:
            lv = min(loop_vmax, (cn.H - 8) // 2)
            if lv >= 1:
                out.append(_run("loop_equation_moments",
                                lambda: _loop_moments_on(cn, En, lv)))
            else:
                out.append(CheckResult("loop_equation_moments", "n/a",
                                       f"curve truncated at h^{cn.H}; the moment fit needs H >= 10"))
    out.append(_run("fiber_completeness", lambda: check_fibers(cn)))
    out.append(_run("injectivity", lambda: check_injectivity(cn)))
    if En is not None:
        out.append(_run("residue_sum_zero", lambda: check_residue_sum(cn, En)))
    out.append(_run("gaussian_catalan", lambda: check_catalan(model)))
    out.append(_run("mirror_symmetry", lambda: check_symmetry(model, nmax, vmax)))
    if equivalence:
        out.append(_run("oracle_equivalence", lambda: check_equivalence(model, nmax, vmax, threads)))
    return out


def _loop_moments_on(curve: CurveData, E: EPoly, vmax: int) -> tuple[bool | None, str]:
    if curve.N < 3:
        return None, "no loop equation between mixed amplitudes"
    ok = True
    notes = []
    for j in range(2, curve.N):
        rep = verify_loop_equation(curve, E, j, vmax)
        ok &= rep.passed
        notes.append(f"j={j}: P of degree {rep.degree} <= {rep.bound}, {rep.detail}")
    return ok, "; ".join(notes)
