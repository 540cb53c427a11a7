import json
import subprocess
import sys

import pytest

from artifact.cli import build_model, main, read_matrix
from helpers import MODELS


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def M(name):
    return MODELS / f"{name}.json"


def test_analyze_para4(capsys):
    code, out, _ = run(capsys, "analyze", M("para4"))
    assert code == 0
    d = json.loads(out)
    assert d["primary_constraints"] == ["p3", "p4"]
    assert d["secondary_constraints"] == ["q4"]
    assert d["first_class"] == ["p3"] and d["second_class"] == ["p4", "q4"]
    assert d["dof"] == "2"
    assert d["determined_multipliers"] == {"u_p4": "0"}
    assert d["free_multipliers"] == ["u_p3"]
    assert d["extended_equals_total"] is True
    assert {s["name"]: s["verdict"] for s in d["symmetries"]} == {
        "time_translation": "verified", "q1_shift": "verified", "q3_gauge": "verified"}


def test_analyze_is_deterministic(capsys):
    paths = sorted(MODELS.glob("*.json"))
    paths = [p for p in paths if "lagrangian" in p.read_text() or "hamiltonian" in p.read_text()]
    first = run(capsys, "analyze", *paths)
    second = run(capsys, "--jobs", "2", "analyze", *paths)
    assert first[0] == 0 and first == second


def test_schema_round_trip(capsys, tmp_path):
    code, out, _ = run(capsys, "analyze", M("diracce"))
    d = json.loads(out)
    m = build_model(json.loads(M("diracce").read_text()))
    tb = m.table
    assert tb.parse(d["hamiltonian"]) == m.hamiltonian.H
    assert d["caveats"]
    # a re-serialized model analyzes identically
    data = json.loads(M("para4").read_text())
    p = tmp_path / "copy.json"
    p.write_text(json.dumps(data, indent=None), encoding="utf-8")
    a = run(capsys, "analyze", M("para4"))[1]
    b = run(capsys, "analyze", p)[1]
    assert a == b


def test_text_format(capsys):
    code, out, _ = run(capsys, "--format", "text", "analyze", M("harmonic"))
    assert code == 0 and "model: harmonic" in out


def test_output_file(capsys, tmp_path):
    target = tmp_path / "r.json"
    code, out, _ = run(capsys, "analyze", M("harmonic"), "--output", target)
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["model"] == "harmonic"


def test_input_errors(capsys, tmp_path):
    code, _, err = run(capsys, "analyze", tmp_path / "missing.json")
    assert code == 1 and "input error" in err
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"name": "x", "variables": [{"name": "q"}], "lagrangian": {"expr": "q +"}}))
    assert run(capsys, "analyze", bad)[0] == 1
    both = tmp_path / "both.json"
    both.write_text(json.dumps({"name": "x", "variables": [], "lagrangian": {"expr": "0"},
                                "hamiltonian": {"expr": "0"}}))
    assert run(capsys, "analyze", both)[0] == 1
    with pytest.raises(SystemExit) as info:
        main(["nosuch"])
    assert info.value.code == 1


def test_analysis_error_exit_code(capsys, tmp_path):
    p = tmp_path / "nonaffine.json"
    p.write_text(json.dumps({"name": "na", "variables": [{"name": "q"}, {"name": "r"}],
                             "hamiltonian": {"expr": "1/2*p_q^2 + 1/2*r^2*q^2", "primary_constraints": ["p_r"]}}))
    code, _, err = run(capsys, "analyze", p)
    assert code == 2 and "residual" in err


def test_bracket(capsys):
    code, out, _ = run(capsys, "bracket", M("para4"), "--lhs", "q1", "--rhs", "p1")
    assert code == 0 and json.loads(out)["result"] == "1"
    code, out, _ = run(capsys, "bracket", M("fermion_pair"), "--lhs", "p_psi1", "--rhs", "psi1", "--dirac")
    assert json.loads(out)["result"] == "-1/2"
    code, out, _ = run(capsys, "bracket", M("fermion_pair"), "--lhs", "psi1", "--rhs", "psi1", "--dirac")
    assert json.loads(out)["result"] == "-1"
    assert run(capsys, "bracket", M("para4"), "--lhs", "q1 +", "--rhs", "p1")[0] == 1


def _ndjson(out):
    return [json.loads(line) for line in out.splitlines() if line.strip()]


def test_evolve_stream(capsys):
    code, out, _ = run(capsys, "evolve", M("harmonic"), "--dt", "0.01", "--steps", "100", "--every", "50")
    recs = _ndjson(out)
    assert code == 0
    assert [r["type"] for r in recs] == ["header", "state", "state", "state", "summary"]
    assert recs[-1]["conservation_drift"]["1/2*q^2 + 1/2*p^2"] < 1e-8


def test_evolve_zero_steps(capsys):
    code, out, _ = run(capsys, "evolve", M("harmonic"), "--steps", "0")
    assert code == 0
    assert [r["type"] for r in _ndjson(out)] == ["header"]


def test_evolve_compare(capsys):
    code, out, _ = run(capsys, "evolve", M("para4"), "--steps", "10", "--compare", "--every", "10")
    summary = _ndjson(out)[-1]
    assert code == 0
    assert len(summary["gauge_difference"]["rows"]) == 3
    assert max(summary["constraint_drift"].values()) < 1e-12


def test_evolve_scheme_mismatch(capsys):
    code, _, _ = run(capsys, "evolve", M("diracce"), "--scheme", "exact-linear", "--steps", "1", "--dt", "0.1")
    assert code == 2


def test_canon(capsys, tmp_path):
    code, out, _ = run(capsys, "canon", "[[0,1],[-1,0]]", "--kind", "antisym")
    d = json.loads(out)
    assert code == 0 and d["reconstructs"] is True
    assert read_matrix(d["canonical"]) == read_matrix(d["input"])
    code, out, _ = run(capsys, "canon", M("para4"), "--kind", "antihermitian")
    assert code == 0
    f = tmp_path / "soul.json"
    f.write_text(json.dumps({"grassmann_generators": 2, "entries": [[{"1,2": 1}]]}))
    assert run(capsys, "canon", f, "--kind", "desoul")[0] == 2


def test_brst(capsys):
    code, out, _ = run(capsys, "brst", M("su2"), "--check", "homotopy", "--samples", "20")
    assert code == 0 and json.loads(out)["passed"]
    code, out, _ = run(capsys, "brst", M("corrupted"))
    d = json.loads(out)
    assert code == 2 and d["jacobi_ok"] is False and d["witness"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "artifact", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip()


@pytest.mark.parametrize("flag_first", [True, False])
def test_global_flag_position(capsys, flag_first):
    argv = ["--format", "text", "analyze", M("harmonic")] if flag_first else \
        ["analyze", M("harmonic"), "--format", "text"]
    code, out, _ = run(capsys, *argv)
    assert code == 0 and out.startswith("schema_version: 1")
