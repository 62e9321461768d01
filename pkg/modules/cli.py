"""
Command-line front end.

Subcommands:
- solve: continuation run, checks on the final solution, artifacts.
- verify: solver-free checks, printed as a table.
- sweep: continuation run with Cauchy differences between eps levels and the extrapolated field.

Exit codes: 0 success, 2 config error, 3 solver or output failure, 4 failed checks.

Functions:
- cmd_solve, cmd_verify, cmd_sweep: the subcommands, each returning an exit code.
- build_parser: the argparse parser.
- main: parses arguments, configures logging and dispatches.
"""

import argparse
import logging
import os
import sys
from typing import Callable, List, Optional

from modules.consts import (CAUCHY_CSV, COMMAND_DOCUMENTATION, EXIT_CHECKS,
                            EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, FIELDS_CSV,
                            FIELDS_VTK, MANIFEST_JSON, REPORT_JSON, SHOCK_CSV)
from modules.diagnostics import run_checks
from modules.errors import ChaplyginError, ConfigError
from modules.export import (ensure_directory, write_cauchy_csv,
                            write_fields_csv, write_fields_vtk,
                            write_report_json, write_shock_csv)
from modules.geometry import build_domain
from modules.mesh import build_mesh
from modules.problem_config import ProblemConfig, load_config
from modules.run_manifest import (STATUS_FAILED, STATUS_OK, RunManifest,
                                  save_manifest)
from modules.solver import continuation_run
from modules.verify import format_table, run_verify

logger = logging.getLogger(__name__)

MIN_SWEEP_LEVELS = 3


class StageFailed(Exception):
    """A stage ended with an error; carries the exit code it maps to."""

    def __init__(self, exit_code: int, error: BaseException):
        super().__init__(str(error))
        self.exit_code = exit_code
        self.error = error


def exit_code_for(error: BaseException) -> int:
    """ConfigError -> 2, any other solver-module error -> 3."""
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    return EXIT_SOLVER


def _stage(manifest: RunManifest, name: str, action: Callable):
    """Runs one stage, records its outcome and converts any error to StageFailed (non-library errors exit 3)."""
    try:
        result = action()
    except ChaplyginError as e:
        manifest.record_stage(name, STATUS_FAILED, e)
        logger.error("%s failed: %s", name, e)
        raise StageFailed(exit_code_for(e), e) from e
    except Exception as e:
        # numpy and scipy failures surfacing from inside a stage
        manifest.record_stage(name, STATUS_FAILED, e)
        logger.exception("%s failed with an unexpected %s", name, type(e).__name__)
        raise StageFailed(EXIT_SOLVER, e) from e
    manifest.record_stage(name, STATUS_OK)
    return result


def _load(manifest: RunManifest, config_path: str, grid: Optional[int]) -> ProblemConfig:
    def action():
        config = load_config(config_path)
        return config.with_grid(grid) if grid is not None else config

    config = _stage(manifest, "config", action)
    manifest.config = config.to_dict()
    return config


def _finish(manifest: RunManifest, out_dir: Optional[str], exit_code: int) -> int:
    manifest.finish(exit_code)
    if out_dir is None or not os.path.isdir(out_dir):
        return exit_code
    try:
        save_manifest(manifest, os.path.join(out_dir, MANIFEST_JSON))
    except ChaplyginError as e:
        logger.error("%s", e)
        return EXIT_SOLVER
    return exit_code


def _write(manifest: RunManifest, path: str, writer: Callable[[str], None]):
    writer(path)
    manifest.add_output(path)


def cmd_solve(config_path: str, out_dir: str, grid: Optional[int] = None, seed: int = 0) -> int:
    """
    Runs build_domain, build_mesh, continuation_run, all checks on the final solution and the exports.

    Returns:
        int: 0 if every check passes, 2 config error, 3 solver or output failure, 4 failed checks.
    """
    manifest = RunManifest("solve", seed=seed)
    try:
        config = _load(manifest, config_path, grid)
        _stage(manifest, "output", lambda: ensure_directory(out_dir))
        domain = _stage(manifest, "domain", lambda: build_domain(config))
        mesh = _stage(manifest, "mesh", lambda: build_mesh(domain, config.n_u, config.n_v))
        sweep = _stage(manifest, "continuation", lambda: continuation_run(config, mesh))
        final = sweep.final()
        report = _stage(manifest, "diagnostics", lambda: run_checks(final, domain))

        def export_all():
            _write(manifest, os.path.join(out_dir, FIELDS_CSV), lambda p: write_fields_csv(p, final.field, config))
            _write(manifest, os.path.join(out_dir, FIELDS_VTK), lambda p: write_fields_vtk(p, final.field, config))
            _write(manifest, os.path.join(out_dir, REPORT_JSON), lambda p: write_report_json(p, report, config, sweep))
            _write(manifest, os.path.join(out_dir, SHOCK_CSV), lambda p: write_shock_csv(p, config))

        _stage(manifest, "export", export_all)
    except StageFailed as e:
        print(f"error: {e.error}", file=sys.stderr)
        return _finish(manifest, out_dir, e.exit_code)

    for record in report.records:
        print(f"{record.name:<18} {'pass' if record.passed else 'FAIL'}  value={record.value:.6g} "
              f"threshold={record.threshold:.6g} node={record.node} ({record.tag})")
    if not report.passed:
        print(f"failed checks: {', '.join(report.failed_names())}", file=sys.stderr)
        return _finish(manifest, out_dir, EXIT_CHECKS)
    return _finish(manifest, out_dir, EXIT_OK)


def cmd_verify(config_path: str, grid: Optional[int] = None, seed: int = 0) -> int:
    """
    Runs the solver-free suite and prints its table.

    Returns:
        int: 0 if all checks pass, 4 if any fails, 2 on a config error.
    """
    manifest = RunManifest("verify", seed=seed)
    try:
        config = _load(manifest, config_path, grid)
        rows = _stage(manifest, "verify", lambda: run_verify(config, seed))
    except StageFailed as e:
        print(f"error: {e.error}", file=sys.stderr)
        return e.exit_code

    print(format_table(rows))
    failed = [row.name for row in rows if not row.passed]
    if failed:
        print(f"failed checks: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECKS
    return EXIT_OK


def _level_name(stem: str, index: int, eps: float, extension: str) -> str:
    return f"{stem}_eps{index}_{eps:g}{extension}"


def cmd_sweep(config_path: str, out_dir: str, grid: Optional[int] = None, seed: int = 0) -> int:
    """
    Runs the continuation over at least three eps levels and writes the Cauchy data.

    Returns:
        int: 0 if the Cauchy differences strictly decrease, 4 if not, 3 on a stuck continuation or an
        output failure, 2 on a config error or a schedule shorter than three levels.
    """
    manifest = RunManifest("sweep", seed=seed)
    try:
        config = _load(manifest, config_path, grid)
        if len(config.eps_schedule) < MIN_SWEEP_LEVELS:
            error = ConfigError(f"sweep needs at least {MIN_SWEEP_LEVELS} eps levels, got {len(config.eps_schedule)}")
            manifest.record_stage("precondition", STATUS_FAILED, error)
            raise StageFailed(EXIT_CONFIG, error)
        _stage(manifest, "output", lambda: ensure_directory(out_dir))
        domain = _stage(manifest, "domain", lambda: build_domain(config))
        mesh = _stage(manifest, "mesh", lambda: build_mesh(domain, config.n_u, config.n_v))
        sweep = _stage(manifest, "continuation", lambda: continuation_run(config, mesh))
        finals = sweep.level_finals()

        def export_all():
            _write(manifest, os.path.join(out_dir, CAUCHY_CSV),
                   lambda p: write_cauchy_csv(p, [s.eps for s in finals], sweep.cauchy_deltas))
            stem = os.path.splitext(FIELDS_CSV)[0]
            for index, solution in enumerate(finals):
                _write(manifest, os.path.join(out_dir, _level_name(stem, index, solution.eps, ".csv")),
                       lambda p, s=solution: write_fields_csv(p, s.field, config))
                _write(manifest, os.path.join(out_dir, _level_name(stem, index, solution.eps, ".vtk")),
                       lambda p, s=solution: write_fields_vtk(p, s.field, config))
            _write(manifest, os.path.join(out_dir, f"{stem}_extrapolated.csv"),
                   lambda p: write_fields_csv(p, sweep.extrapolated, config))
            _write(manifest, os.path.join(out_dir, f"{stem}_extrapolated.vtk"),
                   lambda p: write_fields_vtk(p, sweep.extrapolated, config))

        _stage(manifest, "export", export_all)
    except StageFailed as e:
        print(f"error: {e.error}", file=sys.stderr)
        return _finish(manifest, out_dir, e.exit_code)

    deltas = sweep.cauchy_deltas
    for solution, delta in zip(finals[1:], deltas):
        print(f"eps={solution.eps:<10g} sup_delta={delta:.6e}")
    decreasing = all(b < a for a, b in zip(deltas, deltas[1:]))
    if not decreasing:
        print("cauchy differences do not decrease strictly", file=sys.stderr)
        return _finish(manifest, out_dir, EXIT_CHECKS)
    return _finish(manifest, out_dir, EXIT_OK)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chaplyginwing",
                                     description="Conical Chaplygin-gas flow past a diamond wing.")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in ["solve", "verify", "sweep"]:
        sub = subparsers.add_parser(name, help=COMMAND_DOCUMENTATION.get(name, "").split(".")[0],
                                    description=COMMAND_DOCUMENTATION.get(name))
        sub.add_argument("--config", required=True, help="path of the JSON config")
        sub.add_argument("--out", default="out", help="output directory (solve, sweep)")
        sub.add_argument("--grid", type=int, default=None, help="override grid n_u and n_v")
        sub.add_argument("--seed", type=int, default=0, help="seed of the random samples")
        sub.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                         help="logging level")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parses arguments and runs a subcommand.

    Returns:
        int: the exit code.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK

    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    if args.command == "solve":
        return cmd_solve(args.config, args.out, args.grid, args.seed)
    if args.command == "verify":
        return cmd_verify(args.config, args.grid, args.seed)
    return cmd_sweep(args.config, args.out, args.grid, args.seed)
