import json

import pytest

from hostile_pac.cli import main

CONFIG = """
experiment:
  seed: 3
  n: 100
  replications: 50
  p: 2.0
  delta: 0.1
  loss: squared
  probes: 5
  gamma_grid: {lo: 0.05, hi: 0.8, points: 5}
generator:
  kind: iid_regression
  theta_star: [0.5, -0.3]
  x_law: {kind: gaussian, scale: 1.0}
  noise: {kind: gaussian, variance: 0.25}
prior:
  kind: iid_sample
  count: 15
  dim: 2
  scale: 1.0
regime:
  kind: variance
  s2: kappa
"""


@pytest.fixture()
def config_path(tmp_path):
    path = tmp_path / "experiment.yaml"
    path.write_text(CONFIG)
    return path


def test_selftest_exit_code(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert "checks passed" in out


def test_bound_stdout(config_path, capsys):
    assert main(["bound", "--config", str(config_path)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    records = [json.loads(line) for line in lines]
    assert records[-1]["type"] == "summary"
    assert any(r.get("rho") == "rho_hat" for r in records)


def test_bound_output_files(config_path, tmp_path, capsys):
    prefix = tmp_path / "out" / "run1"
    assert main(["bound", "--config", str(config_path), "--out", str(prefix)]) == 0
    records_path = prefix.with_suffix(".records.jsonl")
    summary_path = prefix.with_suffix(".summary.json")
    assert records_path.exists() and summary_path.exists()
    summary = json.loads(summary_path.read_text())
    assert summary["command"] == "bound"


def test_aggregate_and_coverage(config_path, capsys):
    assert main(["aggregate", "--config", str(config_path)]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert json.loads(out[0])["type"] == "atom"

    assert main(["coverage", "--config", str(config_path)]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    summary = json.loads(out[-1])
    assert summary["command"] == "coverage"
    assert summary["replications"] == 50


def test_sweep_csv(config_path, tmp_path, capsys):
    prefix = tmp_path / "sweep"
    code = main(["sweep", "--config", str(config_path), "--axis", "n",
                 "--values", "100,400", "--out", str(prefix),
                 "--set", "experiment.probes=0"])
    assert code == 0
    csv_lines = prefix.with_suffix(".csv").read_text().splitlines()
    assert csv_lines[0].split(",")[0] == "axis"
    assert len(csv_lines) == 3


def test_seed_flag_overrides(config_path, capsys):
    assert main(["bound", "--config", str(config_path), "--seed", "9"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert json.loads(lines[-1])["seed"] == 9


def test_config_error_exit_code(config_path, tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text(CONFIG.replace("kind: variance", "kind: nonsense"))
    assert main(["bound", "--config", str(bad)]) == 1
    assert "config error" in capsys.readouterr().err

    missing = tmp_path / "nope.yaml"
    assert main(["bound", "--config", str(missing)]) == 1


def test_assumption_violation_exit_code(tmp_path, capsys):
    cfg = """
experiment:
  seed: 3
  n: 100
  replications: 50
  p: 2.0
  delta: 0.1
  loss: squared
  probes: 0
  gamma_grid: [0.9]
  require_complexity: true
generator:
  kind: iid_regression
  theta_star: [0.5, -0.3]
  x_law: {kind: gaussian, scale: 1.0}
  noise: {kind: gaussian, variance: 0.0}
prior:
  kind: explicit
  atoms: [[0.5, -0.3], [9.0, 9.0]]
  weights: [0.001, 0.999]
regime:
  kind: variance
  s2: kappa
"""
    path = tmp_path / "rigged.yaml"
    path.write_text(cfg)
    assert main(["bound", "--config", str(path)]) == 3
    assert "assumption violated" in capsys.readouterr().err
