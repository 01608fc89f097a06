import pytest
from sympy import QQ

from chain_disks import (
    CalibrationFailed,
    ChainModel,
    MomentTable,
    apply_calibration,
    base_amplitude,
    calibrate_conventions,
    extract_moments,
    reconstruct_E,
    recursion_step,
    solve_curve,
    verify_loop_equation,
)
from chain_disks.amplitudes import (
    physical_point,
    recursion_residue_value,
    verify_loop_equation_values,
)
from chain_disks.oracle import oracle_moment_table
from chain_disks.printed_table import compare_tables
from chain_disks.verify import (
    _sample_points,
    check_loop_moments,
    check_two_paths,
    gaussian_residue_sum,
    sample_model,
)


def test_two_paths(num_curve, num_E):
    ok, detail = check_two_paths(num_curve, num_E)
    assert ok, detail


def test_two_paths_pointwise(num_curve, num_E):
    W = base_amplitude(num_curve, num_E)
    pts = _sample_points(num_curve)
    p1 = physical_point(num_curve, 1, QQ(3))
    W2 = recursion_step(num_curve, W, 2)
    d = W2(p1, *pts) - recursion_residue_value(num_curve, W, 2, [p1, *pts])
    assert not d.c and d.prec >= 4


def test_amplitude_arity(num_curve, num_E):
    W = base_amplitude(num_curve, num_E)
    with pytest.raises(ValueError):
        W(QQ(1))


def test_loop_equation_values(num_curve, num_E):
    pts = _sample_points(num_curve)
    firsts = [physical_point(num_curve, 1, QQ(k, 2)) for k in (5, 6, 7, 9)]
    rep = verify_loop_equation_values(num_curve, num_E, 2, pts, firsts)
    assert rep.passed, rep.detail
    assert rep.bound == num_curve.s(2) - 1


def _corrupt(curve, k=2, e=0, n=2):
    from chain_disks.spectral_curve import CurveData

    z = [type(zk)(dict(zk.a)) for zk in curve.z]
    s = z[k - 1].a[e]
    z[k - 1] = type(z[k - 1])({**z[k - 1].a, e: s + type(s).monomial(1, n)})
    return CurveData(curve.model, z, curve.gamma, curve.H, curve.gauge_sign)


def test_loop_moments_detect_corrupted_curve():
    good = solve_curve(sample_model(ChainModel.cubic_three()), 14)
    E = reconstruct_E(good)
    assert verify_loop_equation(good, E, 2, 2).passed
    rep = verify_loop_equation(_corrupt(good), E, 2, 2)
    assert not rep.passed


def test_loop_equation_moments():
    ok, detail = check_loop_moments(ChainModel.cubic_three(), vmax=2)
    assert ok, detail


def test_loop_moments_needs_num(cubic_curve, cubic_E):
    with pytest.raises(ValueError):
        verify_loop_equation(cubic_curve, cubic_E, 2)


def test_loop_color_range(num_curve, num_E):
    with pytest.raises(ValueError):
        verify_loop_equation(num_curve, num_E, 3)


def test_residue_sum_gaussian(gaussian):
    c = solve_curve(gaussian)
    s = gaussian_residue_sum(c, reconstruct_E(c))
    assert not s.c and s.prec > 0


@pytest.fixture(scope="module")
def tables():
    m = ChainModel.cubic_three()
    raw = extract_moments(m, 4, 2)
    orc = oracle_moment_table(m, 4, 2)
    return raw, orc


def test_calibration(tables):
    raw, orc = tables
    rec = calibrate_conventions(raw, orc)
    assert rec["t_shift"] == 0 and rec["factor"] == "1"
    assert rec["local_degree"] == [1, 1, 1] and rec["coupling_sign"] == 1


def test_recursion_equals_oracle(tables):
    raw, orc = tables
    cal = apply_calibration(raw, calibrate_conventions(raw, orc))
    rep = compare_tables(cal, orc)
    assert rep.ok, [(c.n, c.v) for c in rep.mismatches]
    assert "identical" in raw.meta["stability"]


def test_calibration_rejects_rescaled_variable(tables):
    raw, orc = tables
    cells = dict(orc.cells)
    key = ((0, 2, 0), 2)
    cells[key] = cells[key] * 2
    bad = MomentTable(orc.N, orc.symbols, cells, "oracle", dict(orc.meta))
    with pytest.raises(CalibrationFailed):
        calibrate_conventions(raw, bad)


def test_calibration_rejects_empty(tables):
    raw, orc = tables
    empty = MomentTable(raw.N, raw.symbols, {}, "recursion", {})
    with pytest.raises(CalibrationFailed):
        calibrate_conventions(empty, orc)


def test_num_extraction_matches_poly(tables):
    raw, _ = tables
    m = sample_model(ChainModel.cubic_three())
    num = extract_moments(m, 3, 2, stability=False)
    vals = {k: v for k, v in m.values}
    from chain_disks.algebra import parse_rat

    pt = [parse_rat(vals[s]) for s in ("g1", "g2", "g3")]
    for (n, v), c in raw.cells.items():
        if sum(n) <= 3:
            want = QQ.convert(c.evaluate(list(zip(c.ring.gens, pt)))) if hasattr(c, "ring") else c
            assert num.get(n, v) == want, (n, v)


def test_two_chain_equivalence(two_chain):
    raw = extract_moments(two_chain, 4, 2)
    orc = oracle_moment_table(two_chain, 4, 2)
    cal = apply_calibration(raw, calibrate_conventions(raw, orc))
    assert compare_tables(cal, orc).ok
