import pytest
from hypothesis import assume, given, settings, strategies as st
from sympy import QQ

from chain_disks import BudgetExceeded, ChainModel, planar_moment
from chain_disks.oracle import (
    PlanarOracle,
    brute_force_moment,
    catalan,
    oracle_moment_table,
    word_for,
)
from chain_disks.verify import check_catalan, check_symmetry

CUBIC = ChainModel.cubic_three()
GAUSS = ChainModel.build([["1"], ["3"], ["1"]], ["1", "1"])


@given(st.integers(1, 3), st.integers(1, 6))
def test_catalan_closed_form(i, k):
    n = tuple(2 * k if c == i else 0 for c in (1, 2, 3))
    prop = GAUSS.propagator()[i - 1][i - 1]
    assert PlanarOracle(GAUSS).F(word_for(n), 0) == catalan(k) * QQ.convert(prop) ** k


def test_catalan_check():
    ok, detail = check_catalan(CUBIC)
    assert ok, detail


def test_catalan_numbers():
    assert [catalan(k) for k in range(7)] == [1, 1, 2, 5, 14, 42, 132]


@pytest.mark.parametrize("n,v", [
    ((2, 0, 0), 2), ((1, 1, 0), 2), ((1, 0, 1), 2), ((1, 0, 0), 2),
    ((3, 0, 0), 3), ((1, 1, 1), 3), ((2, 1, 1), 3), ((1, 2, 0), 3), ((0, 0, 0), 3),
])
def test_brute_force_agrees(n, v):
    assert brute_force_moment(CUBIC, n, v) == planar_moment(CUBIC, n, v)


@settings(max_examples=25, deadline=None)
@given(st.tuples(st.integers(0, 2), st.integers(0, 2), st.integers(0, 2)), st.integers(1, 3))
def test_brute_force_property(n, v):
    # a few thousand matchings at most
    assume(2 * v - 2 - sum(n) <= 2)
    assert brute_force_moment(CUBIC, n, v) == planar_moment(CUBIC, n, v)


def test_gaussian_two_point_is_propagator():
    P = GAUSS.propagator()
    for a in range(3):
        for b in range(3):
            n = [0, 0, 0]
            n[a] += 1
            n[b] += 1
            if a == b or a < b:
                assert planar_moment(GAUSS, n, 2) == P[a][b]


@given(st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3)), st.integers(1, 3))
def test_vertex_bound_and_parity(n, v):
    c = planar_moment(CUBIC, n, v)
    k = 2 * v - 2 - sum(n)
    if k < 0:
        assert not c
    if c and hasattr(c, "terms"):
        assert {sum(m) for m, _ in c.terms()} == {k}


def test_normalization_cell():
    assert planar_moment(CUBIC, (0, 0, 0), 1) == 1


def test_cyclic_invariance():
    o = PlanarOracle(CUBIC)
    assert o.F((1, 2, 3, 1), 2) == o.F((2, 3, 1, 1), 2) == o.F((1, 1, 2, 3), 2)


def test_budget():
    with pytest.raises(BudgetExceeded):
        oracle_moment_table(CUBIC, 4, 4, budget=10)


def test_mirror_symmetry():
    ok, detail = check_symmetry(CUBIC, 4, 3)
    assert ok, detail


def test_table_meta():
    t = oracle_moment_table(CUBIC, 2, 2)
    assert t.pipeline == "oracle" and t.meta["nmax"] == 2 and t.meta["vmax"] == 2
    assert t.get((2, 0, 0), 2) == 2
