import json

import numpy as np

from paraproduct_lab.cli import main
from paraproduct_lab.sequences import column_example, save_matrix


def test_hadamard_json(capsys):
    assert main(["hadamard-gap", "--m-max", "2", "--quiet"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["experiment"] == "hadamard-gap" and out["pass"] and len(out["rows"]) == 3


def test_global_flags_before_subcommand(capsys):
    assert main(["--seed", "5", "--format", "csv", "random-norms", "--n", "4", "--trials", "2"]) == 0
    cap = capsys.readouterr()
    assert cap.out.splitlines()[0] == "trial,n,norm,ratio,pass"
    assert "verdict: PASS" in cap.err


def test_out_file_and_config(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"seed": 9, "d_max": 2}))
    out = tmp_path / "r.json"
    assert main(["bmo-identity", "--config", str(conf), "--out", str(out), "--quiet"]) == 0
    rep = json.loads(out.read_text())
    assert rep["config"]["seed"] == 9 and len(rep["rows"]) == 3


def test_bad_cap_exit_code(capsys):
    assert main(["column-example", "--d-max", "20"]) == 2
    assert "error" in capsys.readouterr().err


def test_exit_codes(tmp_path, capsys):
    p = tmp_path / "A.csv"
    save_matrix(np.array([[1.0, 2.0], [0.0, -1.0]]), p)
    assert main(["verify-thm1", "--matrix", str(p), "--quiet"]) == 0
    # too short a sweep to show M_lambda growth: the check fails
    assert main(["column-example", "--d-max", "5", "--quiet"]) == 1
    capsys.readouterr()


def test_norms_subcommand(tmp_path, capsys):
    p = tmp_path / "lam.json"
    column_example(3).save(p)
    assert main(["norms", "--lambda", str(p)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert abs(out["mlambda_norm"] - 2.0) < 1e-12
    assert {"x_norm", "xprime_norm", "rect_bmo", "mixed_bmo_x", "mixed_bmo_y"} <= set(out)
    m = tmp_path / "A.csv"
    save_matrix(np.eye(3), m)
    assert main(["norms", "--matrix", str(m), "--depth", "2"]) == 0
    assert abs(json.loads(capsys.readouterr().out)["x_norm"] - 1.0) < 1e-9
    assert main(["norms", "--lambda", str(p), "--depth", "1"]) == 2


def test_missing_file_exit_code(tmp_path, capsys):
    assert main(["norms", "--lambda", str(tmp_path / "nope.json")]) == 2
    assert main(["verify-thm1", "--matrix", str(tmp_path / "nope.csv")]) == 2
    assert "error" in capsys.readouterr().err
