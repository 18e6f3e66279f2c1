import json
import subprocess
import sys

import pytest

from nestedigl.cli import main
from nestedigl.grammar import AxiomSet

T4 = {"paths": [{"lhs": "a", "rhs": ["a", "a"]}]}


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def t4(tmp_path):
    path = tmp_path / "t4.json"
    path.write_text(json.dumps(T4))
    return str(path)


def test_prove_then_check(capsys, tmp_path, t4):
    code, out, _ = run(capsys, "prove", "--axioms", t4, "[a]p -> [a][a]p")
    assert code == 0
    doc = json.loads(out)
    assert doc["conclusion"] == "- => [a]p -> [a][a]p"
    path = tmp_path / "proof.json"
    path.write_text(out)
    assert run(capsys, "check", "--axioms", t4, str(path))[0] == 0
    # without --axioms the file's own axiom set is used
    assert run(capsys, "check", str(path))[0] == 0
    # the same proof is rejected without the transitivity axiom
    empty = tmp_path / "empty.json"
    empty.write_text("{}")
    code, _, err = run(capsys, "check", "--axioms", str(empty), str(path))
    assert code == 1 and "boxLprop" in err


def test_prove_negative(capsys):
    code, _, err = run(capsys, "prove", "--max-branch", "3", "[a]p -> [a][a]p")
    assert code == 1
    assert json.loads(err)["error"]


def test_output_is_deterministic(capsys, t4):
    first = run(capsys, "prove", "--axioms", t4, "[a]p -> [a][a]p")[1]
    second = run(capsys, "prove", "--axioms", t4, "[a]p -> [a][a]p")[1]
    assert first == second


def test_check_reports_location(capsys, tmp_path):
    out = run(capsys, "prove", "p & q -> q")[1]
    doc = json.loads(out)

    def corrupt(node):
        if not node["premises"]:
            node["rule"] = "botL"
            node["principal"] = {"side": "ant", "index": 0}
        for s in node["premises"]:
            corrupt(s)

    corrupt(doc["proof"])
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "check", str(path))
    assert code == 1
    report = json.loads(err)
    assert report["rule"] == "botL" and report["path"]


def test_interpolate(capsys):
    code, out, _ = run(capsys, "interpolate", "(p & q) -> (q | r)")
    assert code == 0
    doc = json.loads(out)
    assert doc["interpolant"] == "q"
    assert doc["signature_check"] == "pass"
    assert {"proof_A_to_I", "proof_I_to_B"} <= set(doc)


def test_interpolate_rejects_non_implication(capsys):
    assert run(capsys, "interpolate", "p & q")[0] == 2


def test_cutelim(capsys, tmp_path):
    left = tmp_path / "left.json"
    right = tmp_path / "right.json"
    left.write_text(run(capsys, "prove", "q, q -> p => p | r")[1])
    right.write_text(run(capsys, "prove", "p | r, q, q -> p => r | p")[1])
    code, out, _ = run(capsys, "cutelim", str(left), str(right), "--at", "w0", "--formula", "p | r")
    assert code == 0
    doc = json.loads(out)
    cut_free = tmp_path / "out.json"
    cut_free.write_text(out)
    assert run(capsys, "check", str(cut_free))[0] == 0
    assert "p | r" not in doc["conclusion"]


def test_countermodel(capsys):
    code, out, _ = run(capsys, "countermodel", "[a]p -> p")
    assert code == 0
    doc = json.loads(out)
    assert len(doc["countermodel"]["worlds"]) <= 3
    code, out, _ = run(capsys, "countermodel", "p -> p")
    assert code == 1 and json.loads(out)["countermodel"] is None


def test_grammar_reach(capsys, tmp_path):
    ax = tmp_path / "ax.json"
    ax.write_text(json.dumps(AxiomSet.of(paths=[("z", ["y", "x^"])]).to_json()))
    code, out, _ = run(capsys, "grammar-reach", "--axioms", str(ax),
                       "w: p => -, (x)[u: - => -, (y^)[v: [z]p => -]]", "--from", "v", "--char", "z")
    assert code == 0
    doc = json.loads(out)
    assert {"lhs": "z", "rhs": ["y", "x^"]} in doc["productions"]
    assert doc["reach"] == [{"from": "v", "char": "z", "to": ["w"]}]


@pytest.mark.parametrize("argv", [
    ["prove", "p &"],
    ["prove", "--axioms", "/nonexistent.json", "p"],
    ["check", "/nonexistent.json"],
    ["grammar-reach", "p => p", "--from", "nowhere"],
])
def test_input_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert json.loads(err)["error"]


def test_pretty(capsys):
    code, out, _ = run(capsys, "prove", "--pretty", "p -> p")
    assert code == 0 and "[impR @w0]" in out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "nestedigl", "prove", "p -> p"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["height"] == 1
