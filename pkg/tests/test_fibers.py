import pytest
from hypothesis import given, settings, strategies as st
from sympy import QQ

from chain_disks import fiber_points
from chain_disks.fibers import completeness_residual, fiber_residuals, verify_injectivity
from chain_disks.series import TruncSeries
from chain_disks.verify import check_fibers, check_injectivity


@pytest.mark.parametrize("j,plus,minus", [(1, 1, 4), (2, 2, 2), (3, 4, 1)])
def test_fiber_counts(num_curve, j, plus, minus):
    fs = fiber_points(num_curve, j, TruncSeries.const(QQ(3)))
    assert (fs.n_plus, fs.n_minus) == (plus, minus)
    assert (num_curve.s(j), num_curve.r(j)) == (plus, minus)


def test_middle_fiber_is_explicit(cubic_curve):
    fs = fiber_points(cubic_curve, 2, TruncSeries.const(QQ(3)))
    assert fs.explicit
    for r in fiber_residuals(cubic_curve, fs):
        assert not r.c
    assert all(not r.c for r in completeness_residual(fs))


def test_end_fibers_report_families(num_curve):
    fs = fiber_points(num_curve, 1, TruncSeries.const(QQ(3)))
    # three of the four minus sheets share an irreducible edge cubic
    assert sum(f.degree for f in fs.minus_families) in (0, 3)
    assert fs.n_minus == 4


@settings(max_examples=8, deadline=None)
@given(st.fractions(min_value=-9, max_value=9, max_denominator=7).filter(lambda f: abs(f) > 1))
def test_fiber_completeness_property(num_curve, f):
    b = TruncSeries.const(QQ(f.numerator, f.denominator))
    fs = fiber_points(num_curve, 2, b)
    assert fs.n_plus == 2 and fs.n_minus == 2
    assert all(not r.c for r in completeness_residual(fs))


def test_gaussian_fiber(gaussian):
    from chain_disks import solve_curve

    c = solve_curve(gaussian)
    fs = fiber_points(c, 2, TruncSeries.const(QQ(-5, 2)))
    # z2 = -(q + 1/q) h; a base of order h^0 sits at q of order 1/h and h
    assert fs.n_plus == 1 and fs.n_minus == 1


def test_injectivity(num_curve):
    rep = verify_injectivity(num_curve, 2, [TruncSeries.const(QQ(a, 3)) for a in (4, 7, -5)])
    assert rep.passed
    ok, detail = check_injectivity(num_curve)
    assert ok, detail


def test_check_fibers(num_curve):
    ok, detail = check_fibers(num_curve)
    assert ok, detail
