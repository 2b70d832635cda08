import json
import subprocess
import sys

import pytest

from homcirc.circuit import dump_circuit, load_circuit
from homcirc.cli import main
from homcirc.fixtures import example_database, example_query, example_td, triangle_circuit


@pytest.fixture
def files(tmp_path):
    example_query().dump(tmp_path / "a.json")
    example_database().dump(tmp_path / "b.json")
    example_td().dump(tmp_path / "td.json")
    dump_circuit(triangle_circuit(), tmp_path / "tri.circ")
    return tmp_path


def test_widths(files, capsys):
    assert main(["widths", "--structure", str(files / "a.json"), "--td", str(files / "td.json")]) == 0
    assert capsys.readouterr().out.splitlines() == ["tw 2", "rho* 2/1", "fhtw 3/2"]


def test_compile_then_count(files, capsys):
    out = files / "c.circ"
    stats = files / "stats.json"
    args = ["compile", "--structure", str(files / "a.json"), "--data", str(files / "b.json"), "--td", str(files / "td.json")]
    assert main(args + ["--out", str(out), "--stats", str(stats)]) == 0
    assert json.loads(stats.read_text())["fhtw"] == "3/2"
    assert main(["circuit", "validate", str(out)]) == 0
    assert main(["circuit", "count", str(out), "--check"]) == 0
    assert capsys.readouterr().out.splitlines()[-1] == "48"


def test_circuit_transforms(files, capsys):
    tri = str(files / "tri.circ")
    assert main(["circuit", "eval", tri]) == 0
    evaluated = json.loads(capsys.readouterr().out)
    assert evaluated["variables"] == ["x", "y", "z"] and len(evaluated["functions"]) == 8
    assert main(["circuit", "smooth", tri, "--out", str(files / "s.circ")]) == 0
    assert main(["circuit", "fanin2", str(files / "s.circ"), "--out", str(files / "f.circ")]) == 0
    assert load_circuit(files / "f.circ").sink is not None


def test_invalid_circuit_exit_code(tmp_path):
    p = tmp_path / "bad.circ"
    p.write_text("vars 1\nvar x\ng0 input x a\ng1 input x b\ng2 times g0 g1\noutput g2\n")
    assert main(["circuit", "validate", str(p)]) == 2
    (tmp_path / "junk.circ").write_text("nonsense\n")
    assert main(["circuit", "validate", str(tmp_path / "junk.circ")]) == 1


def test_cover(files, capsys):
    (files / "w.json").write_text(json.dumps({"W": ["x", "y", "z"]}))
    args = ["cover", "--circuit", str(files / "tri.circ"), "--weights", str(files / "w.json")]
    assert main(args + ["--check-bound", "--k", "1", "--n", "7"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["target_size"] == 8 and rep["bound"]["violations"] == []


def test_gen_hard_and_gen_flow(tmp_path, capsys):
    out = tmp_path / "h.json"
    assert main(["gen-hard", "--t", "3", "--n", "16", "--seed", "2", "--out", str(out)]) == 0
    obj = json.loads(out.read_text())
    assert obj["certificate"]["edges_ok"] and obj["certificate"]["cliques_ok"]
    tri = tmp_path / "tri.json"
    tri.write_text(json.dumps({
        "signature": [{"name": n, "arity": 2} for n in "RST"],
        "universe": ["x", "y", "z"],
        "relations": {"R": [["x", "y"]], "S": [["y", "z"]], "T": [["x", "z"]]},
    }))
    flow = tmp_path / "f.json"
    flow.write_text(json.dumps([{"path": p, "weight": "1/3"} for p in (["x", "y"], ["y", "z"], ["x", "z"])]))
    fout = tmp_path / "fs.json"
    assert main(["gen-flow", "--structure", str(tri), "--flow", str(flow), "--N", "16", "--seed", "0", "--out", str(fout)]) == 0
    assert json.loads(fout.read_text())["certificate"]["checks"]["scattered"]


def test_experiment_exit_codes(tmp_path):
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"family": "clique", "k": 3, "sizes": [8], "seeds": [0]}))
    assert main(["experiment", "tw", "--config", str(good), "--out", str(tmp_path / "o1")]) == 0
    assert (tmp_path / "o1" / "report.csv").exists()
    partial = tmp_path / "partial.json"
    partial.write_text(json.dumps({"family": "clique", "k": 3, "sizes": [2, 8], "seeds": [0]}))
    assert main(["experiment", "tw", "--config", str(partial), "--out", str(tmp_path / "o2")]) == 2
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert main(["experiment", "subw", "--config", str(broken), "--out", str(tmp_path / "o3")]) == 1


def test_entry_point_runs():
    res = subprocess.run([sys.executable, "-m", "homcirc.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == "0.1.0"
