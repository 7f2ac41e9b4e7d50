from __future__ import annotations

import json
import os
import subprocess
import sys

import pytest

from opfields import algebra as alg
from opfields import jsonio
from opfields import monoid as mn
from opfields import prolong as pr
from opfields.scalars import Field
from opfields.cli import main

Q = Field(0)
FIX = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture(name):
    return os.path.join(FIX, name)


def polys(out):
    return [pr.parse_poly(Q, out["vars"], g) for g in out["display"]]


def run(argv, tmp_path):
    out = tmp_path / "out.json"
    code = main(argv + ["--output", str(out)])
    text = out.read_text() if out.exists() else ""
    return code, text


def run_json(argv, tmp_path):
    code, text = run(argv, tmp_path)
    return code, (json.loads(text) if text else None)


def test_free_monoid_char_zero(tmp_path):
    code, out = run_json(["free-monoid", "dual-numbers", "--depth", "3"], tmp_path)
    assert code == 0
    assert out["dims"] == [1, 2, 3, 4]
    assert out["products"]["e1*e2"] == "3*e3"
    assert out["lift_x_to_e1"]["isomorphism"]
    # the emitted tower re-parses to the same tower
    assert mn.tower_from_dict(out["tower"]).to_dict() == out["tower"]


def test_free_monoid_char_two(tmp_path):
    code, out = run_json(["free-monoid", "--depth", "3", "--char", "2"], tmp_path)
    assert code == 0
    assert out["products"]["e1*e1"] == "0"
    assert out["lift_x_to_e1"]["invertible_by_level"] == [True, True, False, False]


def test_free_monoid_depth_zero_echoes_base(tmp_path):
    code, out = run_json(["free-monoid", "--depth", "0"], tmp_path)
    assert code == 0
    assert out["tower"]["levels"][0]["dim"] == 1
    assert out["base"] == alg.dual_numbers(Q).to_dict()


def test_free_monoid_errors(tmp_path):
    code, out = run_json(["free-monoid", fixture("broken_algebra.json"), "--depth", "2"], tmp_path)
    assert code == 3
    assert not out["report"]["ok"]
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["free-monoid", str(bad)]) == 2
    assert main(["free-monoid", str(tmp_path / "missing.json")]) == 2


def test_unknown_flag_rejected(capsys):
    assert main(["jet", fixture("cusp.json"), "--bogus"]) == 2


def test_jet_cusp_and_twisted(tmp_path):
    code, out = run_json(["jet", fixture("cusp.json"), "--level", "1"], tmp_path)
    assert code == 0
    assert polys(out) == polys({"vars": out["vars"], "display": ["y0^2 - x0^3", "2*y0*y1 - 3*x0^2*x1"]})
    code, out = run_json(["jet", fixture("twisted.json"), "--level", "1", "--action", "hs"], tmp_path)
    assert code == 0
    assert "- x0" in out["display"][1]
    code, out = run_json(["jet", fixture("cusp.json"), "--level", "0"], tmp_path)
    assert code == 0 and out["input"] == ["y^2 - x^3"]
    assert polys(out) == [pr.parse_poly(Q, ["x", "y"], "y^2 - x^3")]


def test_jet_depth_error(tmp_path):
    code, _ = run(["jet", fixture("cusp.json"), "--level", "3", "--depth", "2"], tmp_path)
    assert code == 4


def test_jet_table_groups_by_power(tmp_path):
    code, text = run(["jet", fixture("cusp.json"), "--level", "2", "--format", "table"], tmp_path)
    assert code == 0
    line = next(r for r in text.splitlines() if "generator 0, x^2:" in r)
    names = ["x0", "x1", "x2", "y0", "y1", "y2"]
    assert pr.parse_poly(Q, names, line.split(": ")[1]) == pr.parse_poly(
        Q, names, "2*y0*y2 + y1^2 - 3*x0^2*x2 - 3*x0*x1^2")


def test_taumod_gamma(tmp_path):
    code, out = run_json(["taumod", fixture("gamma.json"), "--level", "2", "--check"], tmp_path)
    assert code == 0
    assert out["dim"] == 3 and out["report"]["ok"]
    code, out = run_json(["taumod", fixture("gamma_f2.json"), "--level", "1", "--check"], tmp_path)
    assert code == 0


def test_taumod_failures(tmp_path):
    assert run(["taumod", fixture("singular.json"), "--level", "1"], tmp_path)[0] == 2
    code, out = run_json(["taumod", fixture("sabotaged.json"), "--level", "1", "--check"], tmp_path)
    assert code == 5
    rep = out["report"]
    assert not rep["ok"]
    failed = [c for c in rep["checks"] if not c["pass"]]
    assert failed and all(c["witness"] is not None for c in failed)
    code, _ = run(["taumod", fixture("noncommuting.json"), "--level", "1", "--check"], tmp_path)
    assert code == 5
    assert run(["taumod", fixture("gamma.json"), "--level", "3", "--depth", "2"], tmp_path)[0] == 4


def test_action_and_cartier(tmp_path):
    code, out = run_json(["action", "--action", "hs", "--level", "2", "--scalar", "t^2"], tmp_path)
    assert code == 0
    assert out["mu"]["(t^2)/(1)"] == [["(t^2)/(1)"], ["(t^2)/(1)", "(2*t)/(1)"], ["(t^2)/(1)", "(2*t)/(1)", "(1)/(1)"]]
    code, out = run_json(["cartier-dual", "--depth", "3"], tmp_path)
    assert code == 0
    assert run(["action", "--field", "F4(t)"], tmp_path)[0] == 2


def test_emitted_json_round_trips(tmp_path):
    for argv in (["free-monoid", "--depth", "2"], ["jet", fixture("cusp.json")], ["cartier-dual", "--depth", "2"]):
        code, text = run(argv, tmp_path)
        assert code == 0
        assert json.loads(jsonio.dumps(json.loads(text))) == json.loads(text)


def test_check_suite_deterministic(tmp_path):
    a = run(["check", "--suite", "kernel", "--seed", "7"], tmp_path)
    b = run(["check", "--suite", "kernel", "--seed", "7"], tmp_path)
    assert a == b and a[0] == 0
    out = json.loads(a[1])
    assert [c["criterion"] for c in out["criteria"]] == [4, 5, 9]


def test_check_galois_lists_f2(tmp_path):
    code, out = run_json(["check", "--suite", "galois"], tmp_path)
    assert code == 0
    assert all("F2(t)" in c["fields"] for c in out["criteria"])


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "opfields", "free-monoid", "--depth", "1", "--format", "table"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert res.stdout.strip()
