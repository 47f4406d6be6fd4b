from __future__ import annotations

import json

import pytest

from combidla.cli import main
from combidla.harness import ExperimentConfig, read_csv, run_experiment, write_csv
from combidla.harness.calibration import timestamp


def test_config_validation_and_hash():
    a = ExperimentConfig("green", {"rho_grid": [3]}, seed=1)
    b = ExperimentConfig.from_dict(json.loads(a.to_json()))
    assert a.hash == b.hash
    assert a.hash != ExperimentConfig("green", {"rho_grid": [3]}, seed=2).hash
    assert ExperimentConfig("green", {"rho_grid": [3]}, seed=1, out="x", threads=3).hash == a.hash
    with pytest.raises(ValueError):
        ExperimentConfig("plot")
    with pytest.raises(ValueError):
        ExperimentConfig("green", {"bogus": 1})
    with pytest.raises(ValueError):
        ExperimentConfig("idla", replicas=0)


def test_csv_round_trip(tmp_path):
    p = write_csv(tmp_path / "t.csv", ["a", "b"], [[1, 0.5], [True, None]], "abc")
    text = p.read_bytes()
    assert text.startswith(b"# comb-idla/v1 config=abc\n")
    assert b"\r" not in text
    cols, rows = read_csv(p)
    assert cols == ["a", "b"] and rows == [["1", "0.5"], ["true", ""]]
    with pytest.raises(ValueError):
        write_csv(tmp_path / "u.csv", ["a"], [[1, 2]], "abc")


def _bytes(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_same_seed_same_bytes(tmp_path):
    params = {"R_grid": [6, 8]}
    for sub in ("a", "b"):
        run_experiment(ExperimentConfig("crossing", params, seed=5, replicas=2000, out=str(tmp_path / sub)))
    assert _bytes(tmp_path / "a") == _bytes(tmp_path / "b")
    run_experiment(ExperimentConfig("crossing", params, seed=6, replicas=2000, out=str(tmp_path / "c")))
    assert _bytes(tmp_path / "a")["crossing.csv"] != _bytes(tmp_path / "c")["crossing.csv"]


def test_threads_do_not_change_results(tmp_path):
    params = {"n_grid": [5, 6]}
    run_experiment(ExperimentConfig("idla", params, seed=3, replicas=6, out=str(tmp_path / "a"), threads=1))
    run_experiment(ExperimentConfig("idla", params, seed=3, replicas=6, out=str(tmp_path / "b"), threads=2))
    assert _bytes(tmp_path / "a") == _bytes(tmp_path / "b")


def test_green_experiment(tmp_path):
    res = run_experiment(ExperimentConfig("green", {"rho_grid": [3, 5.5]}, out=str(tmp_path)))
    assert res.passed
    summary = json.loads((tmp_path / "green_summary.json").read_text())
    assert summary["passed"] and summary["config_hash"]


def test_calibration_timestamp(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "86400")
    assert timestamp() == "1970-01-02T00:00:00+00:00"
    monkeypatch.delenv("SOURCE_DATE_EPOCH")
    assert timestamp() == "1970-01-01T00:00:00+00:00"


def test_cli_usage_error(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"kind": "flash", "params": {}}))
    assert main(["green", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    cfg.write_text(json.dumps({"params": {"nope": 1}}))
    assert main(["green", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    with pytest.raises(SystemExit):
        main(["nonsense"])


def test_cli_exit_codes(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"params": {"rho_grid": [3, 10]}}))
    assert main(["green", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    # the rough lower exit bound is violated at tooth sites, a hard failure
    cfg.write_text(json.dumps({"params": {"rho_grid": [3], "mc_rho": [3]}}))
    assert main(["exit-dist", "--config", str(cfg), "--replicas", "20000", "--out", str(tmp_path)]) == 1
    summary = json.loads((tmp_path / "exit_dist_summary.json").read_text())
    assert summary["failures"] == ["rough_lower"]
