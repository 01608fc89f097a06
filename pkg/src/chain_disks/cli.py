"""Command line: solve, moments, oracle, compare, verify.

Exit codes: 0 success, 1 verification failure or mismatch, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .algebra import NUM, POLY, AlgebraError, TruncationTooShort, is_zero, parse_rat, render_coeff
from .tables import MomentTable, canonical_json

_SYMBOL = re.compile(r"^[A-Za-z_][A-Za-z_0-9]*$")


class ConfigError(ValueError):
    """Malformed configuration; reported with the offending position."""


@dataclass
class RunConfig:
    potentials: list[list[str]]
    couplings: list[str]
    h_order: int | None = None
    nmax: int = 4
    vmax: int = 3
    mode: str = POLY
    values: dict[str, str] = field(default_factory=dict)
    budget: int | None = None
    out: str | None = None

    def model(self, H: int | None = None):
        from .spectral_curve import ChainModel

        h = H if H is not None else (self.h_order if self.h_order is not None else 6)
        try:
            return ChainModel.build(self.potentials, self.couplings, h, self.mode,
                                    self.values or None)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


DEFAULT = {
    "potentials": [["1", "g1"], ["3", "g2"], ["1", "g3"]],
    "couplings": ["1", "1"],
}


def _exact(x: Any, where: str, symbol_ok: bool = False) -> str:
    if isinstance(x, bool) or isinstance(x, float):
        raise ConfigError(f"{where}: {x!r} is not an exact rational (use \"num/den\")")
    if isinstance(x, int):
        return str(x)
    if not isinstance(x, str):
        raise ConfigError(f"{where}: expected a rational string, got {type(x).__name__}")
    try:
        parse_rat(x)
        return x.strip()
    except ValueError:
        pass
    if symbol_ok and _SYMBOL.match(x.strip()):
        return x.strip()
    raise ConfigError(f"{where}: {x!r} is not an exact rational (use \"num/den\")")


def _int(x: Any, where: str, low: int = 0) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ConfigError(f"{where}: expected an integer, got {x!r}")
    if x < low:
        raise ConfigError(f"{where}: must be >= {low}")
    return x


def parse_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be an object")
    known = {"potentials", "couplings", "h_order", "nmax", "vmax", "mode", "values", "budget", "out"}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"config: unknown keys {sorted(extra)}")
    pots = data.get("potentials", DEFAULT["potentials"])
    if not isinstance(pots, list) or len(pots) < 2:
        raise ConfigError("potentials: need a list of at least two coefficient lists")
    P = []
    for i, p in enumerate(pots):
        if not isinstance(p, list) or not p:
            raise ConfigError(f"potentials[{i}]: expected a non-empty list")
        P.append([_exact(c, f"potentials[{i}][{k}]", symbol_ok=k > 0) for k, c in enumerate(p)])
    cs = data.get("couplings", ["1"] * (len(P) - 1))
    if not isinstance(cs, list):
        raise ConfigError("couplings: expected a list")
    C = [_exact(c, f"couplings[{i}]") for i, c in enumerate(cs)]
    vals = data.get("values") or {}
    if not isinstance(vals, dict):
        raise ConfigError("values: expected an object")
    V = {str(k): _exact(v, f"values.{k}") for k, v in vals.items()}
    mode = data.get("mode", NUM if V else POLY)
    if mode not in (POLY, NUM, "frac"):
        raise ConfigError(f"mode: unknown mode {mode!r}")
    cfg = RunConfig(P, C, mode=mode, values=V)
    if "h_order" in data:
        cfg.h_order = _int(data["h_order"], "h_order")
    if "nmax" in data:
        cfg.nmax = _int(data["nmax"], "nmax")
    if "vmax" in data:
        cfg.vmax = _int(data["vmax"], "vmax")
    if data.get("budget") is not None:
        cfg.budget = _int(data["budget"], "budget", 1)
    cfg.out = data.get("out")
    return cfg


def parse_couplings(text: str) -> dict[str, str]:
    out = {}
    for i, item in enumerate(t for t in text.split(",") if t.strip()):
        if "=" not in item:
            raise ConfigError(f"--couplings item {i + 1} ({item.strip()!r}): expected name=num/den")
        k, v = (s.strip() for s in item.split("=", 1))
        if not _SYMBOL.match(k):
            raise ConfigError(f"--couplings item {i + 1}: bad symbol name {k!r}")
        out[k] = _exact(v, f"--couplings item {i + 1} ({k})")
    return out


def load_config(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"--config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--config: invalid JSON at line {exc.lineno} column {exc.colno}") from None
    cfg = parse_config(data)
    if args.couplings:
        cfg.values.update(parse_couplings(args.couplings))
        if args.mode is None and "mode" not in data:
            cfg.mode = NUM
    if args.mode is not None:
        cfg.mode = args.mode
    if args.h_order is not None:
        cfg.h_order = _int(args.h_order, "--h-order")
    if args.nmax is not None:
        cfg.nmax = _int(args.nmax, "--nmax")
    if args.vmax is not None:
        cfg.vmax = _int(args.vmax, "--vmax")
    if args.budget is not None:
        cfg.budget = _int(args.budget, "--budget", 1)
    if args.out is not None:
        cfg.out = args.out
    return cfg


# --------------------------------------------------------------------------
# output helpers


def _emit(cfg: RunConfig, name: str, text: str, stdout: bool = False) -> None:
    if cfg.out:
        d = Path(cfg.out)
        d.mkdir(parents=True, exist_ok=True)
        (d / name).write_text(text)
    if stdout or not cfg.out:
        sys.stdout.write(text)


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def amplitude_json(t: MomentTable) -> str:
    """The generating series ``sum T^v_n h^2v / prod x_i^(n_i+1)`` term by term."""
    terms = []
    for n, v in t.keys():
        c = t.cells[(n, v)]
        if is_zero(c):
            continue
        den = "*".join(f"x{i + 1}^{k + 1}" for i, k in enumerate(n))
        terms.append({"n": list(n), "v": v, "term": f"({render_coeff(c)})*h^{2 * v}/({den})"})
    return canonical_json({
        "colors": list(range(1, t.N + 1)),
        "pipeline": t.pipeline,
        "calibration": t.calibration,
        "meta": t.meta,
        "terms": terms,
    }) + "\n"


# --------------------------------------------------------------------------
# commands


def cmd_solve(cfg: RunConfig) -> int:
    from .spectral_curve import solve_curve

    model = cfg.model()
    if model.H == 0:
        _warn("h-order 0 gives the trivial curve")
    curve = solve_curve(model)
    _emit(cfg, "curve.json", curve.to_json())
    return 0


def _normalization_table(model) -> MomentTable:
    from .algebra import CoeffDomain

    syms = model.all_symbols() if model.mode != NUM else ()
    dom = CoeffDomain.poly(syms) if syms else CoeffDomain.num()
    return MomentTable(model.N, tuple(syms), {((0,) * model.N, 1): dom.one}, "recursion",
                       {"vmax": 0, "note": "normalization cell only"})


def moments_table(cfg: RunConfig, pipeline: str) -> MomentTable:
    from .amplitudes import apply_calibration, calibrate_conventions, extract_moments
    from .oracle import oracle_moment_table, thread_count

    if pipeline == "oracle":
        model = cfg.model()
        t = oracle_moment_table(model, cfg.nmax, cfg.vmax, budget=cfg.budget)
        return t
    H = cfg.h_order if cfg.h_order is not None else 2 * cfg.vmax + 6
    model = cfg.model(H)
    if cfg.vmax == 0:
        return _normalization_table(model)
    raw = extract_moments(model, cfg.nmax, cfg.vmax, H=H, threads=thread_count())
    # Gaussian and linear cells fix the conventions
    ref = oracle_moment_table(model, min(cfg.nmax, 4), cfg.vmax, budget=cfg.budget)
    ref.cells = {k: c for k, c in ref.cells.items() if 2 * k[1] - 2 - sum(k[0]) <= 1}
    rec = calibrate_conventions(raw, ref)
    t = apply_calibration(raw, rec)
    t.meta.update({"nmax": cfg.nmax, "vmax": cfg.vmax})
    return t


def cmd_moments(cfg: RunConfig, pipeline: str) -> int:
    t = moments_table(cfg, pipeline)
    if cfg.out:
        _emit(cfg, "moments.json", t.to_json() + "\n")
        if pipeline == "recursion":
            _emit(cfg, "amplitude.json", amplitude_json(t))
    _emit(cfg, "moments.csv", t.to_csv())
    return 0


def cmd_compare(cfg: RunConfig, paths: list[str], against_printed: bool) -> int:
    from .printed_table import compare_printed, compare_tables

    def read(p: str) -> MomentTable:
        try:
            return MomentTable.from_csv(Path(p).read_text())
        except OSError as exc:
            raise ConfigError(f"compare: {exc}") from None
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"compare: {p}: {exc}") from None

    if against_printed:
        if len(paths) > 1:
            raise ConfigError("compare --against-paper takes at most one table")
        if paths:
            t = read(paths[0])
        else:
            from .oracle import oracle_moment_table
            from .spectral_curve import ChainModel

            t = oracle_moment_table(ChainModel.cubic_three(), 4, 3)
        rep = compare_printed(t)
        from .printed_table import compare_printed_curve
        from .spectral_curve import ChainModel, solve_curve

        crep = compare_printed_curve(solve_curve(ChainModel.cubic_three(H=4)))
        _emit(cfg, "curve_comparison.json", json.dumps(crep.as_dict(), indent=2, sort_keys=True) + "\n")
        for c in crep.cells:
            if c.status != "match":
                print(f"{c.status}: z{c.n[0]} h^{c.v} p^{c.n[1]} printed={c.printed} "
                      f"computed={c.computed}", file=sys.stderr)
        print(f"curve summary: {crep.counts()}", file=sys.stderr)
        if not crep.ok:
            rep.cells.extend(crep.mismatches)
    else:
        if len(paths) != 2:
            raise ConfigError("compare needs two tables, or --against-paper")
        left, right = read(paths[0]), read(paths[1])
        if left.N != right.N:
            raise ConfigError("compare: tables have different numbers of colors")
        rep = compare_tables(left, right)
    _emit(cfg, "comparison.json", json.dumps(rep.as_dict(), indent=2, sort_keys=True) + "\n")
    for c in rep.cells:
        if c.status not in ("match",):
            print(f"{c.status}: n={c.n} v={c.v} ({c.source}) printed/left={c.printed} "
                  f"computed/right={c.computed}", file=sys.stderr)
    print(f"summary: {rep.counts()}", file=sys.stderr)
    return 0 if rep.ok else 1


def cmd_verify(cfg: RunConfig, curve_path: str | None) -> int:
    from .oracle import thread_count
    from .spectral_curve import CurveData
    from .verify import run_suite

    model = cfg.model()
    curve = None
    if curve_path:
        try:
            curve = CurveData.from_json(Path(curve_path).read_text())
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigError(f"--curve: {exc}") from None
        model = curve.model
    res = run_suite(model, cfg.nmax, cfg.vmax, curve=curve, threads=thread_count())
    report = {
        "model": model.echo(),
        "passed": all(r.passed for r in res),
        "checks": {r.name: {"status": r.status, "detail": r.detail} for r in res},
        "timing": {r.name: round(r.seconds, 3) for r in res},
    }
    _emit(cfg, "verify.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    for r in res:
        print(f"{r.status.upper():4} {r.name}: {r.detail}", file=sys.stderr)
    return 0 if report["passed"] else 1


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--h-order", type=int, metavar="INT", help="h-truncation H")
    common.add_argument("--nmax", type=int, metavar="INT", help="largest |n|")
    common.add_argument("--vmax", type=int, metavar="INT", help="largest T-power")
    common.add_argument("--mode", choices=[POLY, "frac", NUM], help="coefficient mode")
    common.add_argument("--couplings", metavar="g1=num/den,...", help="numeric coupling values")
    common.add_argument("--out", metavar="PATH", help="output directory")
    common.add_argument("--budget", type=int, metavar="INT", help="oracle sub-word cap")
    p = argparse.ArgumentParser(prog="chain-disks", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="solve the spectral curve")
    m = sub.add_parser("moments", parents=[common], help="moment table")
    m.add_argument("--pipeline", choices=["recursion", "oracle"], default="recursion")
    sub.add_parser("oracle", parents=[common], help="moment table from the planar oracle")
    c = sub.add_parser("compare", parents=[common], help="compare two tables")
    c.add_argument("tables", nargs="*", metavar="TABLE.csv")
    c.add_argument("--against-paper", action="store_true",
                   help="audit a table (default: oracle) against the printed values")
    v = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    v.add_argument("--curve", metavar="PATH", help="check this curve.json instead of solving")
    return p


def main(argv: list[str] | None = None) -> int:
    from .amplitudes import CalibrationFailed, UnstableCoefficient
    from .oracle import BudgetExceeded
    from .spectral_curve import BranchNotFound

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = load_config(args)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "moments":
            return cmd_moments(cfg, args.pipeline)
        if args.command == "oracle":
            return cmd_moments(cfg, "oracle")
        if args.command == "compare":
            return cmd_compare(cfg, args.tables, args.against_paper)
        if args.command == "verify":
            return cmd_verify(cfg, args.curve)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (BranchNotFound, UnstableCoefficient, BudgetExceeded, CalibrationFailed,
            TruncationTooShort) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except AlgebraError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
