"""Moment tables: cells ``T^v_n`` keyed by exponent vector and T-power."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from .algebra import CoeffDomain, is_zero, parse_poly, render_coeff

Cell = tuple[tuple[int, ...], int]


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def calibration_hash(record: Mapping[str, Any] | None) -> str:
    if not record:
        return "none"
    return hashlib.sha256(canonical_json(record).encode()).hexdigest()[:16]


@dataclass
class MomentTable:
    N: int
    symbols: tuple[str, ...]
    cells: dict[Cell, Any]
    pipeline: str
    meta: dict = field(default_factory=dict)
    calibration: dict | None = None

    @property
    def domain(self) -> CoeffDomain:
        return CoeffDomain.poly(self.symbols) if self.symbols else CoeffDomain.num()

    def get(self, n: Iterable[int], v: int):
        return self.cells.get((tuple(n), v), self.domain.zero)

    def keys(self) -> list[Cell]:
        return sorted(self.cells, key=lambda c: (c[1], sum(c[0]), c[0]))

    def restrict(self, nmax: int, vmax: int) -> "MomentTable":
        cells = {k: v for k, v in self.cells.items() if sum(k[0]) <= nmax and k[1] <= vmax}
        return MomentTable(self.N, self.symbols, cells, self.pipeline, dict(self.meta),
                           self.calibration)

    def nonzero(self) -> dict[Cell, Any]:
        return {k: v for k, v in self.cells.items() if not is_zero(v)}

    # -- text forms -------------------------------------------------------
    def rows(self) -> list[list[str]]:
        h = calibration_hash(self.calibration)
        out = []
        for n, v in self.keys():
            c = self.cells[(n, v)]
            if is_zero(c):
                continue
            out.append([*map(str, n), str(v), render_coeff(c), self.pipeline, h])
        return out

    def header(self) -> list[str]:
        return [f"n{i}" for i in range(1, self.N + 1)] + ["v", "coefficient", "pipeline", "calibration"]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        w.writerows(self.rows())
        return buf.getvalue()

    def to_json(self) -> str:
        return canonical_json({
            "N": self.N,
            "symbols": list(self.symbols),
            "pipeline": self.pipeline,
            "meta": self.meta,
            "calibration": self.calibration,
            "calibration_hash": calibration_hash(self.calibration),
            "cells": [
                {"n": list(n), "v": v, "coefficient": render_coeff(self.cells[(n, v)])}
                for n, v in self.keys() if not is_zero(self.cells[(n, v)])
            ],
        })

    @classmethod
    def from_csv(cls, text: str, symbols: Iterable[str] | None = None) -> "MomentTable":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty table")
        head = rows[0]
        N = sum(1 for h in head if h.startswith("n") and h[1:].isdigit())
        if head[: N + 2] != [f"n{i}" for i in range(1, N + 1)] + ["v", "coefficient"]:
            raise ValueError("unexpected moment table header")
        body = rows[1:]
        if symbols is None:
            found: set[str] = set()
            for r in body:
                found |= _symbols_in(r[N + 1])
            symbols = sorted(found)
        symbols = tuple(symbols)
        dom = CoeffDomain.poly(symbols) if symbols else CoeffDomain.num()
        cells = {}
        pipeline = body[0][N + 2] if body and len(body[0]) > N + 2 else "unknown"
        for r in body:
            n = tuple(int(x) for x in r[:N])
            cells[(n, int(r[N]))] = parse_poly(r[N + 1], dom)
        return cls(N, symbols, cells, pipeline)


def _symbols_in(text: str) -> set[str]:
    import re

    return set(re.findall(r"[A-Za-z_][A-Za-z_0-9]*", text))


def convert_table(t: MomentTable, symbols: tuple[str, ...]) -> MomentTable:
    """Re-home every cell in the polynomial ring over ``symbols``."""
    dom = CoeffDomain.poly(symbols) if symbols else CoeffDomain.num()
    cells = {k: parse_poly(render_coeff(v), dom) for k, v in t.cells.items()}
    return MomentTable(t.N, symbols, cells, t.pipeline, dict(t.meta), t.calibration)
