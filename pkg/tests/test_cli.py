import json
import os
import subprocess
import sys

import pytest

from priorbai.cli import main

MAB_CONFIG = {
    "model": {"family": "mab", "k": 2, "mu0": [0.0, 0.0],
              "sigma0": [1.0, 1.0], "sigma": 1.0},
    "allocation": {"strategy": "uniform"},
    "algorithm": {"name": "pibai"},
    "experiment": {"setting": "t", "budgets": [10], "trials": 20, "seed": 1},
}


def write_config(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_bound_symmetric_zero_budget(tmp_path, capsys):
    path = write_config(tmp_path, MAB_CONFIG)
    assert main(["bound", "--config", path, "--budgets", "0"]) == 0
    out = capsys.readouterr().out
    assert "total=2" in out


def test_bound_missing_model_section(tmp_path, capsys):
    path = write_config(tmp_path, {"allocation": {"strategy": "uniform"}})
    assert main(["bound", "--config", path]) == 2
    assert "model" in capsys.readouterr().err


def test_bound_wrong_length_omega(tmp_path, capsys):
    cfg = json.loads(json.dumps(MAB_CONFIG))
    cfg["model"].update({"k": 3, "mu0": [0, 0, 0], "sigma0": [1, 1, 1]})
    path = write_config(tmp_path, cfg)
    assert main(["bound", "--config", path, "--omega", "0.3,0.7"]) == 2


def test_unknown_keys_rejected(tmp_path, capsys):
    cfg = json.loads(json.dumps(MAB_CONFIG))
    cfg["experiment"]["bogus"] = 1
    path = write_config(tmp_path, cfg)
    assert main(["bound", "--config", path]) == 2
    assert "bogus" in capsys.readouterr().err


def test_invalid_json(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert main(["bound", "--config", str(path)]) == 2


def test_alloc_uniform_output(tmp_path, capsys):
    cfg = json.loads(json.dumps(MAB_CONFIG))
    cfg["model"].update({"k": 4, "mu0": [0, 0, 0, 0],
                         "sigma0": [1, 1, 1, 1]})
    path = write_config(tmp_path, cfg)
    assert main(["alloc", "--config", path, "--budgets", "8"]) == 0
    out = capsys.readouterr().out
    assert out.count("0.250000") == 4


def test_alloc_opt_reproducible(tmp_path, capsys):
    cfg = json.loads(json.dumps(MAB_CONFIG))
    cfg["model"].update({"mu0": [0.2, 0.8], "sigma0": [0.3, 0.6]})
    cfg["allocation"] = {"strategy": "opt", "multistarts": 2}
    path = write_config(tmp_path, cfg)
    outs = []
    for _ in range(2):
        assert main(["alloc", "--config", path, "--budgets", "50"]) == 0
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]


def test_simulate_writes_csv(tmp_path):
    cfg = json.loads(json.dumps(MAB_CONFIG))
    out_csv = str(tmp_path / "out.csv")
    path = write_config(tmp_path, cfg)
    assert main(["simulate", "--config", path, "--out", out_csv]) == 0
    lines = open(out_csv).read().splitlines()
    assert len(lines) == 2
    assert lines[0].startswith("setting,model,algorithm")


def test_simulate_byte_identical(tmp_path):
    path = write_config(tmp_path, MAB_CONFIG)
    a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    assert main(["simulate", "--config", path, "--out", a]) == 0
    assert main(["simulate", "--config", path, "--out", b,
                 "--threads", "4"]) == 0
    assert open(a, "rb").read() == open(b, "rb").read()


def test_sweep_row_count(tmp_path):
    cfg = json.loads(json.dumps(MAB_CONFIG))
    cfg["experiment"]["budgets"] = [10, 20, 30, 40]
    cfg["sweep"] = [
        {"algorithm": "pibai", "allocation": "uniform"},
        {"algorithm": "pibai", "allocation": "opt"},
        {"algorithm": "pibai", "allocation": "g-opt"},
        {"algorithm": "sh"},
        {"algorithm": "sr"},
    ]
    out_csv = str(tmp_path / "sweep.csv")
    path = write_config(tmp_path, cfg)
    assert main(["sweep", "--config", path, "--out", out_csv]) == 0
    lines = open(out_csv).read().splitlines()
    assert len(lines) == 1 + 20


def test_runtime_error_exit_code(tmp_path, capsys):
    cfg = json.loads(json.dumps(MAB_CONFIG))
    cfg["algorithm"] = {"name": "sh"}
    cfg["experiment"]["budgets"] = [1]  # below the halving minimum
    path = write_config(tmp_path, cfg)
    out_csv = str(tmp_path / "broken.csv")
    assert main(["simulate", "--config", path, "--out", out_csv]) == 3
    assert not os.path.exists(out_csv)


def test_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "priorbai.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "bound" in proc.stdout
