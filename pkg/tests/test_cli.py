import json
import subprocess
import sys

import pytest

from chain_disks.cli import ConfigError, main, parse_config, parse_couplings
from chain_disks.spectral_curve import CurveData, solve_curve


def run(*argv):
    return main(list(argv))


def test_solve_roundtrip(tmp_path):
    assert run("solve", "--h-order", "4", "--out", str(tmp_path)) == 0
    text = (tmp_path / "curve.json").read_text()
    c = CurveData.from_json(text)
    assert c.same_as(solve_curve(c.model))
    assert c.to_json() == text


def test_solve_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run("solve", "--h-order", "4", "--out", str(a))
    run("solve", "--h-order", "4", "--out", str(b))
    assert (a / "curve.json").read_bytes() == (b / "curve.json").read_bytes()


def test_moments_deterministic(tmp_path, monkeypatch):
    outs = []
    for name, threads in (("a", "1"), ("b", "2")):
        monkeypatch.setenv("CHAIN_DISKS_THREADS", threads)
        d = tmp_path / name
        assert run("moments", "--nmax", "3", "--vmax", "2", "--out", str(d)) == 0
        outs.append(d)
    for f in ("moments.csv", "moments.json", "amplitude.json"):
        assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes(), f


def test_recursion_vs_oracle_compare(tmp_path):
    r, o = tmp_path / "r", tmp_path / "o"
    assert run("moments", "--nmax", "4", "--vmax", "2", "--out", str(r)) == 0
    assert run("oracle", "--nmax", "4", "--vmax", "2", "--out", str(o)) == 0
    assert run("compare", str(r / "moments.csv"), str(o / "moments.csv"), "--out", str(tmp_path)) == 0
    rep = json.loads((tmp_path / "comparison.json").read_text())
    assert rep["ok"] and rep["counts"] == {"match": len(rep["cells"])}


def test_compare_mismatch_exit(tmp_path):
    o = tmp_path / "o"
    run("oracle", "--nmax", "2", "--vmax", "2", "--out", str(o))
    text = (o / "moments.csv").read_text()
    bad = tmp_path / "bad.csv"
    bad.write_text(text.replace("0,0,0,1,1,", "0,0,0,1,2,"))
    assert run("compare", str(o / "moments.csv"), str(bad)) == 1


def test_compare_against_paper(tmp_path, capsys):
    assert run("compare", "--against-paper", "--out", str(tmp_path)) == 0
    rep = json.loads((tmp_path / "comparison.json").read_text())
    assert rep["counts"] == {"match": 51, "paper-typo-suspected": 14}
    crep = json.loads((tmp_path / "curve_comparison.json").read_text())
    assert crep["ok"]


def test_verify_two_matrix(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"potentials": [["2", "g1"], ["1", "g2"]], "couplings": ["1"]}))
    assert run("verify", "--config", str(cfg), "--vmax", "2", "--out", str(tmp_path)) == 0
    rep = json.loads((tmp_path / "verify.json").read_text())
    assert rep["checks"]["two_path_agreement"]["status"] == "n/a"
    assert "timing" in rep


def test_verify_corrupted_curve(tmp_path):
    run("solve", "--h-order", "6", "--out", str(tmp_path))
    data = json.loads((tmp_path / "curve.json").read_text())
    for t in data["z"][0]:
        if t["exponent_p"] == -2:
            t["series"]["terms"][0][1] += " + 1"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(data))
    assert run("verify", "--curve", str(bad), "--vmax", "2", "--out", str(tmp_path / "v")) == 1
    rep = json.loads((tmp_path / "v" / "verify.json").read_text())
    assert rep["checks"]["loop_equation_values"]["status"] == "fail"


@pytest.mark.parametrize("argv", [
    ["solve", "--couplings", "g1=1.5"],
    ["solve", "--couplings", "g1"],
    ["solve", "--h-order", "-1"],
    ["solve", "--config", "/nonexistent.json"],
    ["compare", "one.csv"],
    ["verify", "--curve", "/nonexistent.json"],
    ["frobnicate"],
])
def test_config_errors_exit_2(argv):
    assert main(argv) == 2


def test_bad_json_config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{ nope")
    assert run("solve", "--config", str(p)) == 2


@pytest.mark.parametrize("data", [
    {"potentials": [["1", 0.5], ["1"]]},
    {"potentials": [["1"]]},
    {"couplings": [True, "1"]},
    {"nmax": "4"},
    {"colour": 1},
    {"mode": "float"},
])
def test_parse_config_rejects(data):
    with pytest.raises(ConfigError):
        parse_config(data)


def test_singular_model_is_config_error():
    cfg = parse_config({"potentials": [["1"], ["1"]], "couplings": ["1"]})
    with pytest.raises(ConfigError):
        cfg.model()


def test_parse_couplings():
    assert parse_couplings("g1=1, g2=-2/3") == {"g1": "1", "g2": "-2/3"}


def test_budget_exit_1():
    assert run("oracle", "--nmax", "4", "--vmax", "4", "--budget", "5") == 1


def test_h_order_zero_warns(capsys):
    assert run("solve", "--h-order", "0") == 0
    assert "warning" in capsys.readouterr().err


def test_vmax_zero():
    assert run("moments", "--vmax", "0") == 0


def test_console_script(tmp_path):
    r = subprocess.run([sys.executable, "-m", "chain_disks.cli", "solve", "--h-order", "2"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["H"] == 2
