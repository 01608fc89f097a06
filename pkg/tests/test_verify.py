import pytest

from chain_disks import ChainModel, solve_curve
from chain_disks.verify import run_suite


def _by_name(res):
    return {r.name: r for r in res}


def test_cubic_suite():
    res = _by_name(run_suite(ChainModel.cubic_three(), nmax=4, vmax=2))
    for name, r in res.items():
        assert r.status in ("pass", "n/a"), (name, r.detail)
    assert res["loop_equation_moments"].status == "pass"
    assert res["residue_sum_zero"].status == "n/a"


def test_gaussian_suite(gaussian):
    res = _by_name(run_suite(gaussian, nmax=4, vmax=2))
    assert res["residue_sum_zero"].status == "pass"
    assert all(r.status in ("pass", "n/a") for r in res.values())


def test_two_matrix_suite(two_chain):
    res = _by_name(run_suite(two_chain, nmax=4, vmax=2))
    for name in ("two_path_agreement", "loop_equation_values", "loop_equation_moments", "injectivity"):
        assert res[name].status == "n/a"
    for name in ("curve_identities", "E_vanishes", "master_equation", "oracle_equivalence"):
        assert res[name].status == "pass", res[name].detail


def test_supplied_curve_corrupted(cubic_curve):
    from tests.test_spectral_curve import _corrupt

    res = _by_name(run_suite(cubic_curve.model, vmax=2, curve=_corrupt(cubic_curve),
                             equivalence=False))
    assert res["curve_identities"].status == "fail"
    assert res["loop_equation_values"].status == "fail"
    assert res["E_vanishes"].status == "fail"


def test_supplied_curve_clean(cubic_curve):
    res = _by_name(run_suite(cubic_curve.model, vmax=2, curve=cubic_curve, equivalence=False))
    assert res["loop_equation_moments"].status == "n/a"
    assert all(r.status in ("pass", "n/a") for r in res.values())
