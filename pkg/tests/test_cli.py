"""CLI surface: determinism, exit codes, artifact formats."""

import json
import math

import pytest

from convexwave.cli import main


def run(args):
    return main([str(a) for a in args])


def test_airy_command_writes_zero_table(tmp_path):
    out = tmp_path / "run"
    assert run(["airy", "--count", 5, "--out", out]) == 0
    lines = (out / "airy_zeros.csv").read_text().strip().splitlines()
    assert lines[0].startswith("# manifest=")
    assert lines[1] == "k,omega_k"
    assert len(lines) == 7
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["versions"]["convexwave"]
    assert lines[0].split("=")[1] == manifest["config_hash"]


def test_airy_command_deterministic_bytes(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert run(["airy", "--count", 6, "--out", out1, "--seed", 3]) == 0
    assert run(["airy", "--count", 6, "--out", out2, "--seed", 3]) == 0
    assert (out1 / "airy_zeros.csv").read_bytes() == (out2 / "airy_zeros.csv").read_bytes()


def test_airy_usage_error(tmp_path):
    assert run(["airy", "--count", 0, "--out", tmp_path / "x"]) == 2


def test_billiard_trajectory_and_identity(tmp_path):
    out = tmp_path / "b"
    assert run(["billiard", "--eta", 1.0, "--tau", math.sqrt(2.0), "--sign", "+",
                "--n", 3, "--out", out]) == 0
    rows = (out / "billiard.csv").read_text().strip().splitlines()[2:]
    assert len(rows) == 4
    first = rows[0].split(",")
    assert float(first[1]) == 0.0  # n = 0 echoes the input point


def test_billiard_gliding_exit_code(tmp_path):
    assert run(["billiard", "--eta", 1.0, "--tau", 0.5, "--out", tmp_path / "g"]) == 3


def test_dispersion_usage_error_empty_range(tmp_path):
    assert run(["dispersion", "--flow", "wave", "--lambda-min", 100, "--lambda-max", 50,
                "--out", tmp_path / "d"]) == 2


def test_dispersion_schrodinger_small_run(tmp_path):
    out = tmp_path / "disp"
    code = run(["dispersion", "--flow", "schrodinger", "--h-min", 1e-3, "--h-max", 1e-2,
                "--h-steps", 2, "--lambda-min", 60, "--lambda-max", 2500,
                "--lambda-steps", 8, "--out", out])
    assert code == 0
    fit = json.loads((out / "dispersion_fit.json").read_text())
    assert fit["lambda_exponent"] == pytest.approx(-0.5, abs=0.1)
    assert abs(fit["h_exponent"]) <= 0.1  # no h^{-1/3} factor for the Schroedinger flow
    rows = (out / "dispersion.csv").read_text().strip().splitlines()
    assert rows[1] == "flow,d,h,lambda,mu,gamma"


def test_cusp_requires_epsilon(tmp_path):
    assert run(["cusp", "--h-list", "0.0001", "--out", tmp_path / "c"]) == 2


def test_cusp_not_applicable_for_small_r(tmp_path):
    out = tmp_path / "c3"
    code = run(["cusp", "--h-list", "0.00048828125", "--epsilon", 0.1, "--r-list", "3",
                "--out", out])
    assert code == 0
    verdicts = json.loads((out / "verdict.json").read_text())["verdicts"]
    assert verdicts[0]["verdict"] == "NOT-APPLICABLE"


def test_cusp_single_h_reports_norms(tmp_path):
    out = tmp_path / "c1"
    code = run(["cusp", "--h-list", "0.00048828125", "--epsilon", 0.1, "--r", "6",
                "--t-resolution", "9", "--out", out])
    assert code == 0
    verdicts = json.loads((out / "verdict.json").read_text())["verdicts"]
    assert verdicts[0]["verdict"] is None
    assert len(verdicts[0]["samples"]) == 1


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"airy": {"count": 3}}))
    out = tmp_path / "r"
    assert run(["airy", "--config", cfg, "--count", 4, "--out", out]) == 0
    lines = (out / "airy_zeros.csv").read_text().strip().splitlines()
    assert len(lines) == 6  # flag overrides config


def test_report_summarizes_run(tmp_path, capsys):
    out = tmp_path / "run"
    run(["airy", "--count", 3, "--out", out])
    assert run(["report", "--out", out]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert "airy_branch" in summary


def test_report_missing_directory(tmp_path):
    assert run(["report", "--out", tmp_path / "nope"]) == 2


def test_cusp_region_csv_columns(tmp_path):
    out = tmp_path / "creg"
    code = run(["cusp", "--h-list", "0.00048828125", "--epsilon", 0.1, "--r", "6",
                "--t-resolution", "9", "--out", out])
    assert code == 0
    lines = (out / "region_norms.csv").read_text().strip().splitlines()
    assert lines[1] == "h,n,t,r,region,norm"
    assert len(lines) == 5  # three regions + header + manifest line


def test_dispersion_wave_fit_near_half(tmp_path):
    out = tmp_path / "dw"
    code = run(["dispersion", "--flow", "wave", "--h-min", 1e-3, "--h-max", 1e-2,
                "--h-steps", 2, "--lambda-min", 30, "--lambda-max", 3000,
                "--lambda-steps", 12, "--out", out])
    assert code == 0
    fit = json.loads((out / "dispersion_fit.json").read_text())
    assert fit["lambda_exponent"] == pytest.approx(-0.5, abs=0.12)
