"""
Writers for the run artifacts.

- fields.csv: one row per node, FIELDS_CSV_HEADER (plus "pressure" when rho* is configured).
- fields.vtk: legacy ASCII STRUCTURED_GRID with the same point data.
- report.json: InvariantReport, config echo and residual histories, validated against the shipped schema.
- shock.csv: the shock cone at unit height.
- cauchy.csv: sup-differences between consecutive eps levels.

Floats in the csv and vtk files are written with 17 significant digits. report.json uses the json
module, whose float repr is the shortest string that reads back to the same double: never more than 17
significant digits and exact on reload, the same information as the 17-digit format. Reruns of the
same config produce identical files. Every OSError is reported as IoFailure.
"""

import csv
import json
import logging
import os
from typing import Iterable, List, Optional

import jsonschema
import numpy as np

from modules.consts import (CAUCHY_CSV_HEADER, FIELDS_CSV_HEADER,
                            FLOAT_FORMAT, REPORT_SCHEMA_PATH,
                            SHOCK_CSV_HEADER, SHOCK_SAMPLES, VERSION)
from modules.diagnostics import InvariantReport
from modules.discretization import build_operators
from modules.errors import BadParameter, IoFailure
from modules.fields import derived_state
from modules.geometry import shock_cone_sample
from modules.mesh import ScalarField
from modules.problem_config import ProblemConfig
from modules.solver import Solution, SweepResult

logger = logging.getLogger(__name__)

CSV = "csv"
JSON = "json"
VTK = "vtk-legacy"
FORMATS = [CSV, JSON, VTK]

PRESSURE = "pressure"


def _fmt(value) -> str:
    return FLOAT_FORMAT.format(float(value))


def _write_text(path: str, text: str):
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e
    logger.debug("wrote %s", path)


def _write_rows(path: str, header: List[str], rows: Iterable[List[str]]):
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e
    logger.debug("wrote %s", path)


def field_columns(field: ScalarField, config: ProblemConfig) -> dict:
    """
    Nodal columns of a phi field: the fields.csv layout as arrays.

    Returns:
        dict: column name -> array of length n_u * n_v; "tag" holds tag names.
    """
    mesh = field.mesh
    grad = build_operators(mesh).gradient(field.values)
    state = derived_state(field.values, grad, mesh.points, config.chaplygin_A, config.rho_star)
    columns = {
        "xi1": mesh.points[:, 0],
        "xi2": mesh.points[:, 1],
        "phi": field.values,
        "dphi1": grad[:, 0],
        "dphi2": grad[:, 1],
        "chi": state.chi,
        "c2": state.c2,
        "L2": state.L2,
        "rho": state.rho,
        "tag": [mesh.tag_name(k) for k in range(mesh.size)],
    }
    if state.pressure is not None:
        columns[PRESSURE] = state.pressure
    return columns


def write_fields_csv(path: str, field: ScalarField, config: ProblemConfig):
    columns = field_columns(field, config)
    header = list(FIELDS_CSV_HEADER) + ([PRESSURE] if PRESSURE in columns else [])
    numeric = [name for name in header if name != "tag"]
    rows = []
    for k in range(field.mesh.size):
        row = {name: _fmt(columns[name][k]) for name in numeric}
        row["tag"] = columns["tag"][k]
        rows.append([row[name] for name in header])
    _write_rows(path, header, rows)


def write_fields_vtk(path: str, field: ScalarField, config: ProblemConfig):
    """
    Legacy ASCII VTK structured grid, points at (xi1, xi2, 0), point data as in fields.csv.

    VTK orders points with the first index fastest, so j (along sy) is the slow index here.
    """
    mesh = field.mesh
    columns = field_columns(field, config)
    order = np.arange(mesh.size).reshape(mesh.n_u, mesh.n_v).T.reshape(-1)
    title = f"conical potential mu={field.mu} eps={field.eps}" + (" (estimate)" if field.estimate else "")

    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET STRUCTURED_GRID",
        f"DIMENSIONS {mesh.n_u} {mesh.n_v} 1",
        f"POINTS {mesh.size} double",
    ]
    lines += [f"{_fmt(mesh.points[k, 0])} {_fmt(mesh.points[k, 1])} 0" for k in order]
    lines.append(f"POINT_DATA {mesh.size}")
    for name in ["phi", "dphi1", "dphi2", "chi", "c2", "L2", "rho", PRESSURE]:
        if name not in columns:
            continue
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [_fmt(columns[name][k]) for k in order]
    lines += ["SCALARS tag int 1", "LOOKUP_TABLE default"]
    lines += [str(int(mesh.flat_tags[k])) for k in order]
    _write_text(path, "\n".join(lines) + "\n")


def report_document(report: InvariantReport, config: ProblemConfig, sweep: Optional[SweepResult] = None) -> dict:
    """The report.json content: report, config echo, residual histories and sweep data."""
    document = {
        "version": VERSION,
        "report": report.to_dict(),
        "config": config.to_dict(),
        "residual_histories": [],
        "cauchy_deltas": [],
        "membership_failures": [],
        "halvings": 0,
    }
    if sweep is not None:
        document["residual_histories"] = [_history(solution) for solution in sweep.solutions]
        document["cauchy_deltas"] = [float(delta) for delta in sweep.cauchy_deltas]
        document["membership_failures"] = [
            {"mu": float(record.mu), "eps": float(record.eps), "node": int(record.node),
             "deficit": float(record.deficit)} for record in sweep.membership_failures]
        document["halvings"] = int(sweep.halvings)
    return document


def _history(solution: Solution) -> dict:
    return {
        "mu": float(solution.mu),
        "eps": float(solution.eps),
        "variable": solution.variable,
        "converged": bool(solution.converged),
        "history": [float(value) for value in solution.residual_history],
    }


def validate_report(document: dict):
    """
    Validates a report document against the shipped schema.

    Raises:
        jsonschema.ValidationError: if the document does not match.
    """
    with open(REPORT_SCHEMA_PATH, "r", encoding="utf-8") as f:
        schema = json.load(f)
    jsonschema.validate(instance=document, schema=schema)


def write_report_json(path: str, report: InvariantReport, config: ProblemConfig,
                      sweep: Optional[SweepResult] = None):
    document = report_document(report, config, sweep)
    validate_report(document)
    _write_text(path, json.dumps(document, sort_keys=True, indent=2, allow_nan=False) + "\n")


def write_shock_csv(path: str, config: ProblemConfig, n: int = SHOCK_SAMPLES):
    points = shock_cone_sample(config, n)
    _write_rows(path, SHOCK_CSV_HEADER, [[_fmt(x) for x in point] for point in points])


def write_cauchy_csv(path: str, eps_levels: List[float], deltas: List[float]):
    """
    One row per consecutive pair of levels: the smaller eps and sup |phi_prev - phi_next| at mu=1.
    """
    if len(deltas) != max(len(eps_levels) - 1, 0):
        raise BadParameter(f"{len(deltas)} deltas do not match {len(eps_levels)} eps levels")
    _write_rows(path, CAUCHY_CSV_HEADER, [[_fmt(eps), _fmt(delta)] for eps, delta in zip(eps_levels[1:], deltas)])


def export(solution: Solution, report: Optional[InvariantReport], fmt: str, path: str, config: ProblemConfig,
           sweep: Optional[SweepResult] = None):
    """
    Writes one artifact of a solution.

    Args:
        solution (Solution): the field.
        report (Optional[InvariantReport]): required for json.
        fmt (str): "csv", "json" or "vtk-legacy".
        path (str): output file.
        config (ProblemConfig): echoed into json, supplies A and rho*.
        sweep (Optional[SweepResult]): residual histories for json.

    Raises:
        IoFailure: if the file cannot be written.
    """
    if fmt == CSV:
        write_fields_csv(path, solution.field, config)
    elif fmt == VTK:
        write_fields_vtk(path, solution.field, config)
    elif fmt == JSON:
        if report is None:
            raise BadParameter("json export needs a report")
        write_report_json(path, report, config, sweep)
    else:
        raise BadParameter(f"format must be one of {FORMATS}, got {fmt!r}")


def ensure_directory(path: str):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        raise IoFailure(f"cannot create output directory {path}: {e}") from e
