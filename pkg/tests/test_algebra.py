from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st
from sympy import QQ

from chain_disks.algebra import (
    CoeffDomain,
    NonInvertibleLeading,
    TruncationTooShort,
    parse_poly,
    parse_rat,
    rat_str,
    render_coeff,
)
from chain_disks.puiseux import RamifiedBranch, newton_polygon_roots
from chain_disks.series import TruncSeries, reversion

rats = st.fractions(min_value=-5, max_value=5, max_denominator=7).map(
    lambda f: QQ(f.numerator, f.denominator))


@st.composite
def series(draw, lo=0, hi=5, prec=6):
    coeffs = draw(st.dictionaries(st.integers(lo, hi), rats, max_size=5))
    return TruncSeries(coeffs, prec)


@st.composite
def units(draw):
    s = draw(series(lo=1))
    lead = draw(rats.filter(bool))
    return s + lead


@given(series(), series(), series())
def test_ring_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a + b == b + a


@given(units())
def test_inverse(u):
    assert u * u.inverse() == TruncSeries.const(1, u.prec)


@given(units(), series(lo=1))
def test_division_roundtrip(u, a):
    assert ((a / u) * u).eq_to(a, 6)


@settings(max_examples=40)
@given(st.lists(rats, min_size=1, max_size=4), rats.filter(bool))
def test_reversion_roundtrip(tail, c1):
    f = TruncSeries({1: c1, **{k + 2: c for k, c in enumerate(tail)}}, 7)
    g = reversion(f)
    x = TruncSeries.monomial(1, 1)
    assert f.compose(g).eq_to(x, 7)
    assert g.compose(f).eq_to(x, 7)


def test_truncation_is_not_extended():
    a = TruncSeries({0: QQ(1), 1: QQ(2)}, 3)
    b = TruncSeries({0: QQ(1)}, 10)
    assert (a * b).prec == 3
    with pytest.raises(TruncationTooShort):
        (a * b)[3]
    with pytest.raises(TruncationTooShort):
        a.eq_to(b, 4)


def test_zero_only_to_known_order():
    z = TruncSeries({}, 4)
    assert z.known_zero() and not z.is_zero_series()
    assert TruncSeries({}).is_zero_series()


def test_int_inverse_is_exact():
    s = TruncSeries.const(3).inverse()
    assert s[0] == QQ(1, 3)
    assert isinstance(s[0], type(QQ(1, 3)))


def test_poly_leading_must_be_unit():
    dom = CoeffDomain.poly(["g"])
    s = TruncSeries.const(dom.gen("g"))
    with pytest.raises(NonInvertibleLeading):
        s.inverse()


@pytest.mark.parametrize("text,val", [("3", Fraction(3)), ("-2/6", Fraction(-1, 3)), (" 7 / 2 ", Fraction(7, 2))])
def test_parse_rat(text, val):
    r = parse_rat(text)
    assert Fraction(int(r.numerator), int(r.denominator)) == val


@pytest.mark.parametrize("bad", ["1.5", "1/0", "x", True, 0.5])
def test_parse_rat_rejects(bad):
    with pytest.raises(ValueError):
        parse_rat(bad)


@given(rats)
def test_rat_roundtrip(r):
    assert parse_rat(rat_str(r)) == r


def test_poly_render_roundtrip():
    dom = CoeffDomain.poly(["g1", "g2", "g3"])
    p = parse_poly("-4*g1 - g2 - 2*g3 + 1/2*g1^2*g3", dom)
    assert parse_poly(render_coeff(p), dom) == p


def test_canonical_render():
    s = TruncSeries({2: QQ(1, 2), 0: QQ(-3)}, 5)
    assert s.render() == "(-3)*h^0 + (1/2)*h^2 + O(h^5)"


def test_newton_gaussian_fiber():
    # q^2 - (p + 1/p) q + 1 at p = 2
    roots = newton_polygon_roots([1, QQ(-5, 2), 1])
    assert sorted(r.leading for r in roots) == [QQ(1, 2), QQ(2)]
    assert all(r.valuation == 0 for r in roots)


def test_newton_pole_root():
    h = TruncSeries.monomial(1, 1)
    roots = newton_polygon_roots([-1, h])
    assert len(roots) == 1
    assert roots[0].valuation == -1 and roots[0].leading == 1


def test_newton_diverging_root_frac():
    dom = CoeffDomain.frac(["g1"])
    g1 = dom.field.gens[0] if hasattr(dom.field, "gens") else dom.gen("g1")
    h = TruncSeries.monomial(1, 1)
    # g1 h^2 q^2 - h q - h = 0 has q ~ 1/(g1 h)
    roots = newton_polygon_roots([-h, -h, h * h * g1], prec_cap=8)
    big = [r for r in roots if r.valuation == -1]
    assert len(big) == 1 and big[0].leading == 1 / g1


@settings(max_examples=30)
@given(st.lists(rats.filter(bool), min_size=2, max_size=3, unique=True), st.lists(rats, min_size=3, max_size=3))
def test_newton_reconstructs(lead, corr):
    # F = prod (q - (a_i + b_i h)), roots with distinct leading terms
    h = TruncSeries.monomial(1, 1)
    F = [TruncSeries.const(1)]
    for a, b in zip(lead, corr):
        r = h * b + a
        new = [TruncSeries.zero()] * (len(F) + 1)
        for k, c in enumerate(F):
            new[k + 1] = new[k + 1] + c
            new[k] = new[k] - c * r
        F = new
    roots = newton_polygon_roots(F, prec_cap=6)
    assert len(roots) == len(F) - 1
    got = sorted((r.series.coeff(0), r.series.coeff(1)) for r in roots)
    assert got == sorted(zip(lead, corr[:len(lead)]))


def test_ramified():
    h = TruncSeries.monomial(1, 1)
    with pytest.raises(RamifiedBranch):
        newton_polygon_roots([-h, 0, 1])
