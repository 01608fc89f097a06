import pytest

from chain_disks import ChainModel, solve_curve
from chain_disks.algebra import CoeffDomain, parse_poly
from chain_disks.oracle import oracle_moment_table
from chain_disks.printed_table import (
    ANCHORS,
    CELL_ERRATA,
    ERRATA,
    PRINTED,
    PRINTED_CURVE,
    compare_printed,
    compare_printed_curve,
    structural_flags,
)

DOM = CoeffDomain.poly(["g1", "g2", "g3"])


@pytest.fixture(scope="module")
def report():
    return compare_printed(oracle_moment_table(ChainModel.cubic_three(), 4, 3))


def test_every_cell_has_a_status(report):
    assert len(report.cells) == len(PRINTED) == 65
    assert {c.status for c in report.cells} <= {"match", "paper-typo-suspected"}
    assert report.ok


def test_suspected_cells_carry_reasons(report):
    for c in report.cells:
        if c.status == "paper-typo-suspected":
            assert c.reasons


def test_counts(report):
    assert report.counts() == {"match": 51, "paper-typo-suspected": 14}


@pytest.mark.parametrize("n,v,source,want", [
    ((2, 0, 0), 2, "table", "match"),
    ((1, 1, 0), 2, "table", "match"),
    ((0, 2, 0), 2, "table", "match"),
    ((1, 2, 0), 3, "table", "match"),
    ((1, 0, 0), 2, "display", "match"),
    ((1, 0, 0), 2, "table", "paper-typo-suspected"),
    # printed -(2 g1 + g2 + 4 g3) is not g1 <-> g3 symmetric
    ((1, 1, 1), 3, "table", "paper-typo-suspected"),
])
def test_anchor_status(report, n, v, source, want):
    assert (n, v, source) in ANCHORS or source == "table"
    assert report.status_of(n, v, source) == want


def test_errata_are_listed():
    for ids in CELL_ERRATA.values():
        assert set(ids) <= set(ERRATA)


def test_printed_text_is_verbatim(report):
    row = next(c for c in report.cells if c.n == (1, 0, 0) and c.v == 2 and c.source == "table")
    assert row.printed == "-4*g3 - g2 - 2*g3"


def test_structural_flags():
    assert structural_flags((1, 1, 1), 3, parse_poly("-2*g1 - g2 - 4*g3", DOM))
    assert not structural_flags((1, 1, 1), 3, parse_poly("-10*g1 - 4*g2 - 10*g3", DOM))
    assert structural_flags((1, 0, 0), 2, parse_poly("-g1", DOM)) == []
    assert "wrong sign" in structural_flags((1, 0, 0), 2, parse_poly("g1", DOM))[0]
    assert "cannot close" in structural_flags((4, 0, 0), 2, parse_poly("1", DOM))[0]


def test_report_json(report):
    d = report.as_dict()
    assert d["kind"] == "printed" and len(d["cells"]) == 65


def test_curve_audit():
    rep = compare_printed_curve(solve_curve(ChainModel.cubic_three(H=4)))
    assert len(rep.cells) == len(PRINTED_CURVE)
    assert rep.counts() == {"match": 14, "paper-typo-suspected": 5}
    for c in rep.cells:
        if c.status != "match":
            assert any("defining relations fail" in r for r in c.reasons)
