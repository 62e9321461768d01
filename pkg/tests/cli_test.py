"""
Tests for the command-line front end.

Tests:
- test_solve_writes_artifacts: a real 17x17 solve writes every artifact and a manifest with its exit code
- test_solve_all_checks_pass: exit 0 when the checks pass
- test_solve_failed_check: exit 4 naming the failed check
- test_solve_angle_too_large: a wing angle at the critical angle exits 2
- test_solve_out_is_file: an output path that is a regular file exits 3
- test_solve_continuation_stuck: a newton budget too small to start the run exits 3 with the stage recorded
- test_solve_unexpected_error: a numpy error inside a stage exits 3 with the stage recorded
- test_verify_exit_codes: verify exits 0, and 4 with a broken residual
- test_sweep_too_few_levels: sweep with two eps levels exits 2
- test_sweep_writes_levels: sweep writes one field pair per level plus Cauchy data
- test_sweep_continuation_stuck: a stuck three-level sweep exits 3
- test_main_argument_errors: missing --config and unknown subcommands exit 2
- test_exit_code_for: ConfigError maps to 2, other library errors to 3
"""

import dataclasses
import json
import os

import numpy as np

from modules import cli, discretization
from modules.consts import (CAUCHY_CSV, EXIT_CHECKS, EXIT_CONFIG, EXIT_OK,
                            EXIT_SOLVER, FIELDS_CSV, FIELDS_VTK,
                            MANIFEST_JSON, REPORT_JSON, SHOCK_CSV)
from modules.diagnostics import SANDWICH, run_checks
from modules.errors import ContinuationStuck, NonSupersonic
from modules.geometry import critical_angle
from modules.run_manifest import load_manifest

from .small_problem import SIGMA, V3INF, solved_run


def _config_file(tmp_path, **overrides):
    values = {"sigma1": SIGMA, "sigma2": SIGMA, "v3inf": V3INF, "eps_schedule": [0.1, 0.05],
              "grid": {"n_u": 17, "n_v": 17}}
    values.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(values), encoding="utf-8")
    return str(path)


def _last_stage(out):
    return load_manifest(str(out / MANIFEST_JSON))["stages"][-1]


def _patch_checks(monkeypatch, failing=()):
    monkeypatch.setattr(cli, "continuation_run", lambda config, mesh: solved_run(17))

    def checks(solution, domain):
        report = run_checks(solution, domain)
        records = [dataclasses.replace(record, passed=record.name not in failing) for record in report.records]
        return dataclasses.replace(report, records=records)

    monkeypatch.setattr(cli, "run_checks", checks)


def test_solve_writes_artifacts(tmp_path):
    """
    Test that solve writes the four artifacts and a manifest whose exit code matches the return value.
    """
    out = tmp_path / "out"
    code = cli.main(["solve", "--config", _config_file(tmp_path), "--out", str(out), "--log-level", "WARNING"])
    assert code == EXIT_OK
    for name in (FIELDS_CSV, FIELDS_VTK, REPORT_JSON, SHOCK_CSV, MANIFEST_JSON):
        assert os.path.isfile(out / name)
    manifest = load_manifest(str(out / MANIFEST_JSON))
    assert manifest["exit_code"] == code
    assert manifest["command"] == "solve"
    assert [stage["stage"] for stage in manifest["stages"]] == [
        "config", "output", "domain", "mesh", "continuation", "diagnostics", "export"]
    assert len(manifest["outputs"]) == 4


def test_solve_all_checks_pass(tmp_path, monkeypatch):
    """
    Test exit 0 when every check passes.
    """
    _patch_checks(monkeypatch)
    out = tmp_path / "out"
    assert cli.cmd_solve(_config_file(tmp_path), str(out)) == EXIT_OK
    assert load_manifest(str(out / MANIFEST_JSON))["exit_code"] == EXIT_OK


def test_solve_failed_check(tmp_path, monkeypatch, capsys):
    """
    Test exit 4 with the failed check named on stderr, and that the artifacts are still written.
    """
    _patch_checks(monkeypatch, failing=(SANDWICH,))
    out = tmp_path / "out"
    assert cli.cmd_solve(_config_file(tmp_path), str(out)) == EXIT_CHECKS
    assert "sandwich" in capsys.readouterr().err
    assert os.path.isfile(out / REPORT_JSON)


def test_solve_angle_too_large(tmp_path, capsys):
    """
    Test that sigma1 equal to sigma_inf exits 2 before anything is written.
    """
    out = tmp_path / "out"
    config = _config_file(tmp_path, sigma1=critical_angle(V3INF))
    assert cli.cmd_solve(config, str(out)) == EXIT_CONFIG
    assert "sigma_inf" in capsys.readouterr().err
    assert not os.path.exists(out)


def test_solve_out_is_file(tmp_path, monkeypatch):
    """
    Test that --out naming a regular file exits 3.
    """
    monkeypatch.setattr(cli, "continuation_run", lambda config, mesh: solved_run(17))
    blocker = tmp_path / "blocker"
    blocker.write_text("x", encoding="utf-8")
    assert cli.cmd_solve(_config_file(tmp_path), str(blocker)) == EXIT_SOLVER


def test_solve_continuation_stuck(tmp_path, capsys):
    """
    Test that one newton iteration against a 1e-15 tolerance exits 3 and records the failed continuation stage.
    """
    out = tmp_path / "out"
    config = _config_file(tmp_path, newton={"tol": 1e-15, "max_iter": 1})
    assert cli.cmd_solve(config, str(out)) == EXIT_SOLVER
    assert "error:" in capsys.readouterr().err
    stage = _last_stage(out)
    assert stage["stage"] == "continuation"
    assert stage["status"] == "failed"
    assert stage["error_type"] == "ContinuationStuck"
    assert load_manifest(str(out / MANIFEST_JSON))["exit_code"] == EXIT_SOLVER
    assert not os.path.exists(out / REPORT_JSON)


def test_solve_unexpected_error(tmp_path, monkeypatch):
    """
    Test that a LinAlgError raised inside the continuation exits 3 and is recorded in the manifest.
    """
    def broken(config, mesh):
        raise np.linalg.LinAlgError("singular matrix")

    monkeypatch.setattr(cli, "continuation_run", broken)
    out = tmp_path / "out"
    assert cli.cmd_solve(_config_file(tmp_path), str(out)) == EXIT_SOLVER
    stage = _last_stage(out)
    assert stage["stage"] == "continuation"
    assert stage["status"] == "failed"
    assert stage["error_type"] == "LinAlgError"


def test_verify_exit_codes(tmp_path, monkeypatch, capsys):
    """
    Test that verify passes on the standard wing and exits 4 naming linear_annihilation when the residual is broken.
    """
    config = _config_file(tmp_path)
    assert cli.main(["verify", "--config", config, "--log-level", "WARNING"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("check")
    original = discretization.interior_residual
    monkeypatch.setattr(discretization, "interior_residual", lambda *args: original(*args) + 1.0)
    assert cli.cmd_verify(config) == EXIT_CHECKS
    assert "linear_annihilation" in capsys.readouterr().err


def test_sweep_too_few_levels(tmp_path):
    """
    Test that two eps levels are refused with exit 2.
    """
    assert cli.cmd_sweep(_config_file(tmp_path), str(tmp_path / "out")) == EXIT_CONFIG


def test_sweep_writes_levels(tmp_path):
    """
    Test that a three-level sweep writes two Cauchy rows, a field pair per level and the extrapolated pair.
    """
    out = tmp_path / "out"
    code = cli.cmd_sweep(_config_file(tmp_path, eps_schedule=[0.1, 0.05, 0.025]), str(out))
    assert code == EXIT_OK
    with open(out / CAUCHY_CSV, "r", encoding="utf-8") as f:
        assert len(f.read().splitlines()) == 3
    for name in ("fields_eps0_0.1", "fields_eps1_0.05", "fields_eps2_0.025", "fields_extrapolated"):
        assert os.path.isfile(out / f"{name}.csv")
        assert os.path.isfile(out / f"{name}.vtk")
    assert load_manifest(str(out / MANIFEST_JSON))["exit_code"] == code


def test_sweep_continuation_stuck(tmp_path):
    """
    Test that a three-level sweep that cannot start exits 3 without writing Cauchy data.
    """
    out = tmp_path / "out"
    config = _config_file(tmp_path, eps_schedule=[0.1, 0.05, 0.025], newton={"tol": 1e-15, "max_iter": 1})
    assert cli.cmd_sweep(config, str(out)) == EXIT_SOLVER
    assert _last_stage(out)["error_type"] == "ContinuationStuck"
    assert not os.path.exists(out / CAUCHY_CSV)


def test_main_argument_errors(tmp_path):
    """
    Test that argparse failures map to exit 2.
    """
    assert cli.main(["verify"]) == EXIT_CONFIG
    assert cli.main(["integrate", "--config", _config_file(tmp_path)]) == EXIT_CONFIG
    assert cli.main([]) == EXIT_CONFIG


def test_exit_code_for():
    """
    Test the error to exit code mapping.
    """
    assert cli.exit_code_for(NonSupersonic("v3inf")) == EXIT_CONFIG
    assert cli.exit_code_for(ContinuationStuck("stuck", 0.5, 0.1)) == EXIT_SOLVER
