import csv
import json

import pytest

from bubble_lab.cli import main


def test_unknown_subcommand(capsys):
    assert main(["frobnicate"]) == 2
    capsys.readouterr()


def test_ground_state_artifacts(tmp_path, capsys):
    code = main(["ground-state", "--n", "4", "--p0", "3",
                 "-o", str(tmp_path)])
    assert code == 0
    with open(tmp_path / "profile.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["r", "U", "V"]
    meta = json.loads((tmp_path / "profile.json").read_text())
    assert meta["n"] == 4
    assert meta["v0"] == pytest.approx(1.0)
    capsys.readouterr()


def test_csv_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["ground-state", "--n", "4", "--p0", "3",
                     "-o", str(out)]) == 0
    assert (a / "profile.csv").read_bytes() == (b / "profile.csv").read_bytes()
    capsys.readouterr()


def test_tail_slow_pair(tmp_path, capsys):
    code = main(["tail", "--n", "5", "--p0", "7/5", "-o", str(tmp_path)])
    assert code == 0
    data = json.loads((tmp_path / "tail.json").read_text())
    assert data["regime"] == "SLOW"
    assert data["slow_identity_rel_gap"] < 0.02
    assert "seed" in data
    capsys.readouterr()


def test_off_hyperbola_is_usage_error(tmp_path, capsys):
    assert main(["ground-state", "--n", "4", "--p0", "7",
                 "-o", str(tmp_path)]) == 2
    assert main(["ground-state", "--n", "4", "--p0", "zebra",
                 "-o", str(tmp_path)]) == 2
    capsys.readouterr()


def test_regime_mismatch_is_usage_error(tmp_path, capsys):
    assert main(["residual-sweep", "--regime", "fast", "--n", "5",
                 "--p0", "7/5", "-o", str(tmp_path)]) == 2
    capsys.readouterr()


def test_residual_sweep_csv(tmp_path, capsys):
    code = main(["residual-sweep", "--regime", "fast", "--n", "4",
                 "--p0", "5/2", "--side", "V", "-o", str(tmp_path)])
    assert code == 0
    with open(tmp_path / "sweep.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["epsilon", "delta", "eta", "measured_norm",
                       "predicted_exponent", "fitted_slope"]
    assert len(rows) == 10
    # the fitted-slope column is constant and close to the prediction
    slope = float(rows[1][5])
    pred = float(rows[1][4])
    assert abs(slope - pred) / pred < 0.05
    capsys.readouterr()


def test_malformed_domain_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["reduce", "--domain", str(bad), "--kappa", "2",
                 "--epsilon", "0.01", "-o", str(tmp_path)]) == 2
    missing = tmp_path / "missing.json"
    assert main(["reduce", "--domain", str(missing), "--kappa", "2",
                 "--epsilon", "0.01", "-o", str(tmp_path)]) == 2
    capsys.readouterr()


def test_reduce_configuration(tmp_path, capsys):
    dom = tmp_path / "annulus.json"
    dom.write_text(json.dumps({"shape": "shifted_annulus", "n": 4,
                               "center": [3, 0, 0, 0], "radii": [1.0, 2.0],
                               "weight_exponents": [2]}))
    code = main(["reduce", "--domain", str(dom), "--kappa", "2",
                 "--epsilon", "0.01", "-o", str(tmp_path)])
    assert code == 0
    data = json.loads((tmp_path / "configuration.json").read_text())
    assert sorted(round(x[0]) for x in data["xi_list"]) == [1, 4]
    assert len(data["delta_pred"]) == 2
    capsys.readouterr()


def test_threads_env_validation(monkeypatch, capsys):
    monkeypatch.setenv("BUBBLE_LAB_THREADS", "zero")
    assert main(["green-check", "--samples", "5"]) == 2
    monkeypatch.setenv("BUBBLE_LAB_THREADS", "-3")
    assert main(["green-check", "--samples", "5"]) == 2
    capsys.readouterr()
