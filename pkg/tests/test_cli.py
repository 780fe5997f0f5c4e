import json

import numpy as np
import pytest

from scalewin.cli import main


def run(argv):
    return main(argv)


# ---------------------------------------------------------------------------
# exit codes
# ---------------------------------------------------------------------------

def test_unknown_flag_exits_1(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["simulate-fbm", "--no-such-flag"])
    assert exc.value.code == 1
    assert "usage" in capsys.readouterr().err


def test_unknown_subcommand_exits_1():
    with pytest.raises(SystemExit) as exc:
        run(["frobnicate"])
    assert exc.value.code == 1


def test_bad_shape_exits_1(tmp_path, capsys):
    code = run(["simulate-ensemble", "--hurst", "0.35", "--shape", "wat",
                "--paths", "200", "--out", str(tmp_path)])
    assert code == 1


def test_missing_input_exits_2_and_names_file(tmp_path, capsys):
    code = run(["ingest", "--input", str(tmp_path / "absent.csv"), "--out", str(tmp_path)])
    assert code == 2
    assert "absent.csv" in capsys.readouterr().err


def test_budget_violation_exits_3(tmp_path, capsys):
    code = run(["simulate-path", "--hurst", "0.5", "--shape", "constant",
                "--t-max", "1e9", "--interval", "1", "--out", str(tmp_path)])
    assert code == 3


# ---------------------------------------------------------------------------
# outputs and manifests
# ---------------------------------------------------------------------------

def test_fbm_run_writes_data_and_manifest(tmp_path):
    out = tmp_path / "run"
    assert run(["simulate-fbm", "--hurst", "0.7", "--n", "256",
                "--seed", "5", "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "simulate-fbm"
    assert manifest["parameters"]["seed"] == 5
    assert "fbm.csv" in manifest["outputs"]
    assert (out / "fbm.csv").exists()
    assert manifest["duration_seconds"] >= 0


def test_reruns_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run(["simulate-fbm", "--hurst", "0.7", "--n", "256",
                    "--seed", "5", "--out", str(out)]) == 0
    assert (a / "fbm.csv").read_bytes() == (b / "fbm.csv").read_bytes()


def test_json_format_output(tmp_path):
    assert run(["simulate-fbm", "--hurst", "0.7", "--n", "64", "--seed", "1",
                "--format", "json", "--out", str(tmp_path)]) == 0
    payload = json.loads((tmp_path / "fbm.json").read_text())
    assert len(payload["values"]) == 64


# ---------------------------------------------------------------------------
# pipelines
# ---------------------------------------------------------------------------

def test_simulate_then_analyze_ensemble(tmp_path):
    sim = tmp_path / "sim"
    ana = tmp_path / "ana"
    assert run(["simulate-ensemble", "--hurst", "0.35", "--paths", "3000",
                "--times", "10,100,1000", "--seed", "3", "--out", str(sim)]) == 0
    assert run(["analyze-ensemble", "--input", str(sim / "ensemble.csv"),
                "--hurst", "0.35", "--cond-t", "100", "--cond-lag", "900",
                "--out", str(ana)]) == 0
    fit = json.loads((ana / "hurst_ensemble.json").read_text())
    assert abs(fit["exponent"] - 0.35) < 0.03
    assert (ana / "collapse.csv").exists()
    assert (ana / "conditional_mean.json").exists()


def test_simulate_then_analyze_sliding(tmp_path):
    sim = tmp_path / "sim"
    ana = tmp_path / "ana"
    assert run(["simulate-path", "--hurst", "0.35", "--t-max", "100000",
                "--seed", "4", "--out", str(sim)]) == 0
    assert run(["analyze-sliding", "--input", str(sim / "path.csv"),
                "--out", str(ana)]) == 0
    fit = json.loads((ana / "hurst_sliding.json").read_text())
    assert abs(fit["exponent"] - 0.5) < 0.05
    assert (ana / "fs_density.csv").exists()
    assert (ana / "tails.json").exists()


def test_daily_then_diagnose(tmp_path):
    sim = tmp_path / "sim"
    diag = tmp_path / "diag"
    assert run(["simulate-daily", "--days", "60", "--seed", "6",
                "--steps-per-unit-time", "400", "--out", str(sim)]) == 0
    assert run(["diagnose", "--input", str(sim / "daily.csv"), "--lag",
                str(1.0 / 144.0), "--day-length", "1.0", "--out", str(diag)]) == 0
    verdict = json.loads((diag / "verdict.json").read_text())
    assert verdict["verdict"] == "nonstationary-increments"


def test_demo_contrast_small_scale(tmp_path):
    out = tmp_path / "demo"
    assert run(["demo-fig2", "--paths", "3000", "--path-length", "100000",
                "--seed", "12", "--out", str(out)]) == 0
    ens = json.loads((out / "hurst_ensemble.json").read_text())
    sli = json.loads((out / "hurst_sliding.json").read_text())
    assert abs(ens["exponent"] - 0.35) < 0.04
    assert abs(sli["exponent"] - 0.5) < 0.05
    for name in ("f_table.csv", "fs_table.csv", "reference_density.csv", "manifest.json"):
        assert (out / name).exists()
