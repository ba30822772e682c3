import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import scenario_log
from flowrep.cli import main, parse_grid, parse_s_spec
from flowrep.errors import ValidationError
from flowrep.evidence import EvidenceMatrix, format_ratings_csv


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def matrix_path(tmp_path, capsys):
    code, _, _ = run(capsys, "generate", "--n", 12, "--seed", 4, "--out", tmp_path / "m")
    assert code == 0
    return tmp_path / "m.json"


def test_aggregate_scenario_a(tmp_path, capsys):
    log = tmp_path / "a.csv"
    log.write_text(format_ratings_csv(scenario_log("a").events))
    code, out, _ = run(capsys, "aggregate", log, "--out", tmp_path / "A")
    assert code == 0
    info = json.loads(out)
    assert info["events"] == 3000 and info["n"] == 4
    A = EvidenceMatrix.load(tmp_path / "A.csv").entries
    np.testing.assert_allclose(A[1:, 0], [0.5005, 0.5045, 0.05], atol=1e-12)
    assert EvidenceMatrix.load(tmp_path / "A.json") == EvidenceMatrix.load(tmp_path / "A.csv")


def test_malformed_log_exit_2(tmp_path, capsys):
    log = tmp_path / "bad.csv"
    log.write_text("rater,ratee,rating,weight\n1,2,1,1\n2,1,2,1\n")
    code, _, err = run(capsys, "aggregate", log, "--out", tmp_path / "A")
    assert code == 2 and "line 3" in err


def test_generate_is_deterministic(tmp_path, capsys):
    for name in ("x", "y"):
        run(capsys, "generate", "--n", 15, "--seed", 8, "--out", tmp_path / name)
    assert (tmp_path / "x.csv").read_text() == (tmp_path / "y.csv").read_text()


def test_generate_seed_from_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("FLOWREP_SEED", "8")
    code, out, _ = run(capsys, "generate", "--n", 15, "--out", tmp_path / "e")
    assert code == 0 and json.loads(out)["config"]["seed"] == 8


@pytest.mark.parametrize("method", ["iterative", "direct"])
def test_solve(matrix_path, tmp_path, capsys, method):
    out = tmp_path / f"r_{method}.json"
    code, _, _ = run(capsys, "solve", matrix_path, "--alpha", 0.4, "--method", method,
                     "--s-spec", "pretrusted:3", "--out", out)
    assert code == 0
    d = json.loads(out.read_text())
    assert d["config"]["alpha"] == 0.4 and d["method"] == method
    r = np.array(d["r"])
    assert r.shape == (12,) and r.min() >= 0 and r.max() <= 1


def test_solve_methods_agree(matrix_path, capsys):
    rs = []
    for method in ("iterative", "direct"):
        _, out, _ = run(capsys, "solve", matrix_path, "--method", method)
        rs.append(np.array(json.loads(out)["r"]))
    assert np.abs(rs[0] - rs[1]).sum() < 1e-12


def test_solve_s_from_file(matrix_path, tmp_path, capsys):
    vec = tmp_path / "s.json"
    vec.write_text(json.dumps([0.2] * 12))
    code, out, _ = run(capsys, "solve", matrix_path, "--s-spec", vec)
    assert code == 0


def test_non_convergence_exit_3(matrix_path, capsys):
    code, _, err = run(capsys, "solve", matrix_path, "--alpha", 0.9, "--max-iterations", 2)
    assert code == 3 and "NonConvergenceError" in err


def test_theorem_violation_exit_4(tmp_path, capsys):
    path = tmp_path / "red.csv"
    path.write_text("0,1,0.5\n1,0,0.5\n0,0,0\n")
    vec = tmp_path / "s.csv"
    vec.write_text("0,0,1\n")
    code, _, _ = run(capsys, "solve", path, "--method", "direct", "--s-spec", vec)
    assert code == 4


@pytest.mark.parametrize("argv", [
    ["--alpha", "1.5"], ["--s-spec", "uniform:2"], ["--s-spec", "pretrusted:99"],
    ["--s-spec", "nonsense"],
])
def test_validation_exit_2(matrix_path, capsys, argv):
    code, _, _ = run(capsys, "solve", matrix_path, *argv)
    assert code == 2


def test_missing_file_exit_2(tmp_path, capsys):
    code, _, _ = run(capsys, "solve", tmp_path / "nope.csv")
    assert code == 2


@pytest.mark.parametrize("kind,extra", [
    ("self_promotion", []), ("slandering", ["--target", 2]),
    ("sybil", ["--target", 2, "--m", 0.5]),
])
def test_attack(matrix_path, capsys, kind, extra):
    code, out, _ = run(capsys, "attack", matrix_path, "--kind", kind, "--attacker", 5,
                       "--alpha", 0.8, *extra)
    assert code == 0
    d = json.loads(out)
    if kind == "self_promotion":
        assert d["delta"]["delta_attacker"] >= 0
    else:
        assert d["delta"]["delta_target"] < 0
    if kind == "sybil":
        assert d["delta"]["added_accounts"] == 6


def test_attack_user_out_of_range(matrix_path, capsys):
    code, _, err = run(capsys, "attack", matrix_path, "--kind", "self_promotion",
                       "--attacker", 13)
    assert code == 2 and "attacker" in err


def test_sensitivity(matrix_path, tmp_path, capsys):
    dump = tmp_path / "E.csv"
    code, out, _ = run(capsys, "sensitivity", matrix_path, "--target", 1, "--attacker", 2,
                       "--k", 4, "--dump-e", dump)
    assert code == 0
    ch = json.loads(out)["channels"]
    assert len(ch) == 4 and all(c["z"] != 2 and 1 <= c["z"] <= 12 for c in ch)
    assert len(dump.read_text().splitlines()) == 12


def test_experiment_outputs(tmp_path, capsys):
    prefix = tmp_path / "mc"
    argv = ["experiment", "--kind", "method_comparison", "--trials", 2, "--seed", 1,
            "--grid", "n=10", "--grid", "alpha=0.2,0.8", "--out", prefix]
    assert run(capsys, *argv)[0] == 0
    first = json.loads((tmp_path / "mc.json").read_text())
    assert first["grid"] == {"n": [10], "alpha": [0.2, 0.8]}
    assert first["config"]["seed"] == 1
    csv1 = (tmp_path / "mc.csv").read_text()
    run(capsys, *argv)
    assert (tmp_path / "mc.csv").read_text() == csv1


def test_experiment_csv_to_stdout(capsys):
    code, out, _ = run(capsys, "experiment", "--kind", "selfref_study", "--trials", 1,
                       "--grid", "n=10,20", "--grid", "alpha=0.5")
    assert code == 0 and out.startswith("experiment,")


def test_baseline_scenario_b(tmp_path, capsys):
    log = tmp_path / "b.csv"
    log.write_text(format_ratings_csv(scenario_log("b").events))
    code, out, _ = run(capsys, "baseline", log)
    assert code == 0
    d = json.loads(out)
    assert d["normalized"][0][1:] == [0.1, 0.9, 0.0]
    assert sum(d["r"]) == pytest.approx(1.0)


def test_parsers():
    assert parse_grid(["n=10,20", "tau-max=0.5"]) == {"n": [10, 20], "tau_max": [0.5]}
    np.testing.assert_array_equal(parse_s_spec("uniform:0.3", 3), [0.3] * 3)
    with pytest.raises(ValidationError):
        parse_grid(["n"])


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "flowrep", "generate", "--n", "5",
                          "--out", str(tmp_path / "g")], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert json.loads(res.stdout)["n"] == 5
