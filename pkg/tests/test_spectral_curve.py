import pytest
from sympy import QQ

from chain_disks import ChainModel, CurveData, solve_curve
from chain_disks.algebra import CoeffDomain, parse_poly
from chain_disks.spectral_curve import (
    InconsistentE,
    curve_residuals,
    master_equation_holds,
    master_equation_residual,
    reconstruct_E,
    residual_vanishes,
    specialize_curve,
)
from chain_disks.verify import check_E_vanishes


def poly(text):
    return parse_poly(text, CoeffDomain.poly(["g1", "g2", "g3"]))


def test_relations_vanish(cubic_curve):
    for name, r in curve_residuals(cubic_curve).items():
        assert residual_vanishes(r, cubic_curve.H + 1), name


def test_middle_relation_is_exact(cubic_curve):
    # V2'(z2) - z1 - z3 has no term below the working order
    assert residual_vanishes(curve_residuals(cubic_curve)["mid2"], cubic_curve.H + 1)


def test_gaussian_layer(cubic_curve):
    assert cubic_curve.h_layer(1, 1) == {1: -1, -1: -2}
    assert cubic_curve.h_layer(2, 1) == {1: -1, -1: -1}
    assert cubic_curve.h_layer(3, 1) == {1: -2, -1: -1}


def test_first_cubic_layer(cubic_curve):
    z1 = cubic_curve.h_layer(1, 2)
    assert z1[-2] == poly("g2 + 3*g3")
    assert z1[0] == poly("-8*g1 - 2*g2 - 4*g3")
    z2 = cubic_curve.h_layer(2, 2)
    assert (z2[2], z2[-2], z2[0]) == (poly("g1"), poly("g3"), poly("-4*g1 - 2*g2 - 4*g3"))


def test_mirror_symmetry(cubic_curve):
    # z3(p) = z1(1/p) with g1 <-> g3
    for n in range(1, cubic_curve.H + 1):
        a = cubic_curve.h_layer(1, n)
        b = cubic_curve.h_layer(3, n)
        assert set(a) == {-e for e in b}
        for e, c in a.items():
            g1, g2, g3 = c.ring.gens
            assert c.compose([(g1, g3), (g3, g1)]) == b[-e]


def test_layers_homogeneous(cubic_curve):
    for k in (1, 2, 3):
        for n in range(1, cubic_curve.H + 1):
            for c in cubic_curve.h_layer(k, n).values():
                assert {sum(m) for m, _ in c.terms()} == {n - 1}


def test_pole_orders(cubic_curve):
    assert cubic_curve.pole_orders(1) == {"inf": 1, "zero": 4}
    assert cubic_curve.pole_orders(2) == {"inf": 2, "zero": 2}
    assert cubic_curve.pole_orders(3) == {"inf": 4, "zero": 1}


def test_json_roundtrip(cubic_curve):
    text = cubic_curve.to_json()
    back = CurveData.from_json(text)
    assert back.same_as(cubic_curve)
    assert back.to_json() == text


def test_E_vanishes_one_order_short(cubic):
    c = solve_curve(cubic, cubic.H + 1)
    ok, detail = check_E_vanishes(c, reconstruct_E(c), cubic.H)
    assert ok, detail


def test_master_equation(cubic_curve, cubic_E):
    assert master_equation_holds(master_equation_residual(cubic_curve, cubic_E))


def _corrupt(curve, k=1, e=-2, n=2):
    z = [type(zk)(dict(zk.a)) for zk in curve.z]
    s = z[k - 1].a[e]
    z[k - 1] = type(z[k - 1])({**z[k - 1].a, e: s + type(s).monomial(1, n)})
    return CurveData(curve.model, z, curve.gamma, curve.H, curve.gauge_sign)


def test_corruption_breaks_relations(cubic_curve):
    bad = _corrupt(cubic_curve)
    assert not all(residual_vanishes(r, bad.H + 1) for r in curve_residuals(bad).values())


def test_corruption_breaks_E(cubic_curve):
    with pytest.raises(InconsistentE):
        reconstruct_E(_corrupt(cubic_curve))


def test_corruption_breaks_master(num_curve, num_E):
    bad = _corrupt(num_curve)
    assert not master_equation_holds(master_equation_residual(bad, num_E))


def test_specialize_commutes_with_solve(cubic_curve):
    vals = {"g1": "1", "g2": "2/3", "g3": "1/2"}
    a = specialize_curve(cubic_curve, vals)
    b = solve_curve(cubic_curve.model.with_values(vals))
    assert a.same_as(b)


def test_gaussian_curve_is_exact(gaussian):
    c = solve_curve(gaussian)
    for k in (1, 2, 3):
        assert all(n == 1 for n in range(1, c.H + 1) if c.h_layer(k, n))


@pytest.mark.parametrize("bad", [
    dict(potentials=[["1"]], couplings=[]),
    dict(potentials=[["1"], ["1"]], couplings=["0"]),
    dict(potentials=[["1"], ["1"]], couplings=["1"]),  # singular quadratic form
])
def test_model_validation(bad):
    with pytest.raises(ValueError):
        ChainModel.build(bad["potentials"], bad["couplings"])


def test_num_mode_needs_values():
    with pytest.raises(ValueError):
        ChainModel.cubic_three(mode="num")


def test_propagator(cubic):
    P = cubic.propagator()
    assert [[QQ.convert(x) for x in row] for row in P] == [[2, 1, 1], [1, 1, 1], [1, 1, 2]]
