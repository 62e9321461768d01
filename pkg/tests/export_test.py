"""
Tests for the artifact writers.

Tests:
- test_fields_csv_layout: header, one row per node and the 17-digit float format
- test_fields_csv_pressure_column: the pressure column appears only with rho_star
- test_fields_vtk_layout: structured-grid header, point order and data sections
- test_fields_vtk_estimate_title: extrapolated fields are marked in the title
- test_report_json_validates: the written report matches the schema and reloads
- test_report_json_floats_exact: floats in report.json reload to the same doubles
- test_report_schema_rejects_unknown_check: the schema refuses unknown check names
- test_shock_csv: 181 samples on the cone at unit height
- test_cauchy_csv: rows pair the smaller eps with its difference
- test_cauchy_csv_mismatch: delta count must match the levels
- test_export_dispatch: format names and the json report requirement
- test_write_into_file_path: writing below a regular file raises IoFailure
- test_deterministic_output: writing twice gives identical bytes
"""

import csv
import json
import os

import jsonschema
import numpy as np
import pytest

from modules.consts import FIELDS_CSV_HEADER
from modules.diagnostics import run_checks
from modules.errors import BadParameter, IoFailure
from modules.export import (CSV, JSON, VTK, PRESSURE, ensure_directory,
                            export, report_document, validate_report,
                            write_cauchy_csv, write_fields_csv,
                            write_fields_vtk, write_report_json,
                            write_shock_csv)
from modules.mesh import ScalarField
from modules.problem_config import config_from_dict

from .small_problem import (SIGMA, V3INF, small_config, small_mesh,
                            solved_run)


def _read_csv(path):
    with open(path, "r", encoding="utf-8", newline="") as f:
        return list(csv.reader(f))


def test_fields_csv_layout(tmp_path):
    """
    Test the header, the row count and that floats carry 17 significant digits.
    """
    final = solved_run(17).final()
    path = str(tmp_path / "fields.csv")
    write_fields_csv(path, final.field, small_config())
    rows = _read_csv(path)
    assert rows[0] == FIELDS_CSV_HEADER
    assert len(rows) == 1 + 17 * 17
    first = dict(zip(rows[0], rows[1]))
    assert first["tag"] == "corner_P3"
    assert float(first["phi"]) == final.values[0]
    assert float(first["xi1"]) == final.field.mesh.points[0, 0]


def test_fields_csv_pressure_column(tmp_path):
    """
    Test that configuring rho_star adds a trailing pressure column.
    """
    final = solved_run(17).final()
    config = config_from_dict({"sigma1": SIGMA, "sigma2": SIGMA, "v3inf": V3INF, "rho_star": 1.0,
                               "grid": {"n_u": 17, "n_v": 17}})
    path = str(tmp_path / "fields.csv")
    write_fields_csv(path, final.field, config)
    header = _read_csv(path)[0]
    assert header == FIELDS_CSV_HEADER + [PRESSURE]


def test_fields_vtk_layout(tmp_path):
    """
    Test the legacy header, that the first index runs fastest and that every point-data section is complete.
    """
    final = solved_run(17).final()
    mesh = final.field.mesh
    path = str(tmp_path / "fields.vtk")
    write_fields_vtk(path, final.field, small_config())
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0"
    assert lines[2] == "ASCII"
    assert lines[3] == "DATASET STRUCTURED_GRID"
    assert lines[4] == "DIMENSIONS 17 17 1"
    assert lines[5] == f"POINTS {mesh.size} double"
    second = [float(x) for x in lines[7].split()]
    assert second[:2] == list(mesh.nodes[1, 0])
    assert f"POINT_DATA {mesh.size}" in lines
    scalars = [line for line in lines if line.startswith("SCALARS")]
    assert scalars[0] == "SCALARS phi double 1"
    assert scalars[-1] == "SCALARS tag int 1"
    start = lines.index("SCALARS tag int 1") + 2
    assert len(lines[start:]) == mesh.size
    assert lines[start] == "7"


def test_fields_vtk_estimate_title(tmp_path):
    """
    Test that an extrapolated field is written with an estimate marker in the title line.
    """
    run = solved_run(17)
    path = str(tmp_path / "extrapolated.vtk")
    write_fields_vtk(path, run.extrapolated, small_config())
    with open(path, "r", encoding="utf-8") as f:
        title = f.read().splitlines()[1]
    assert title.endswith("(estimate)")


def test_report_json_validates(tmp_path):
    """
    Test that report.json validates against the schema, reloads and echoes the config.
    """
    run = solved_run(17)
    final = run.final()
    report = run_checks(final, final.field.mesh.domain)
    config = small_config()
    path = str(tmp_path / "report.json")
    write_report_json(path, report, config, run)
    with open(path, "r", encoding="utf-8") as f:
        document = json.load(f)
    validate_report(document)
    assert document["config"]["sigma1"] == SIGMA
    assert len(document["residual_histories"]) == 22
    assert len(document["cauchy_deltas"]) == 1
    assert [check["name"] for check in document["report"]["checks"]][0] == "ellipticity"


def test_report_json_floats_exact(tmp_path):
    """
    Test that residual histories, Cauchy differences and check values reload bit for bit.
    """
    run = solved_run(17)
    final = run.final()
    report = run_checks(final, final.field.mesh.domain)
    path = str(tmp_path / "report.json")
    write_report_json(path, report, small_config(), run)
    with open(path, "r", encoding="utf-8") as f:
        document = json.load(f)
    for written, solution in zip(document["residual_histories"], run.solutions):
        assert written["history"] == [float(value) for value in solution.residual_history]
    assert document["cauchy_deltas"] == run.cauchy_deltas
    expected = report_document(report, small_config(), run)
    assert [check["value"] for check in document["report"]["checks"]] == \
        [check["value"] for check in expected["report"]["checks"]]


def test_report_schema_rejects_unknown_check():
    """
    Test that renaming a check breaks schema validation.
    """
    run = solved_run(17)
    final = run.final()
    document = report_document(run_checks(final, final.field.mesh.domain), small_config(), run)
    document["report"]["checks"][0]["name"] = "made_up"
    with pytest.raises(jsonschema.ValidationError):
        validate_report(document)


def test_shock_csv(tmp_path):
    """
    Test 181 shock samples with x1^2 + x2^2 = 3 at x3 = 1.
    """
    path = str(tmp_path / "shock.csv")
    write_shock_csv(path, small_config())
    rows = _read_csv(path)
    assert rows[0] == ["x1", "x2", "x3"]
    points = np.array(rows[1:], dtype=float)
    assert points.shape == (181, 3)
    assert np.all(points[:, 2] == 1.0)
    assert np.max(np.abs(points[:, 0] ** 2 + points[:, 1] ** 2 - 3.0)) <= 1e-13


def test_cauchy_csv(tmp_path):
    """
    Test that each row holds the smaller eps of a pair and its difference.
    """
    path = str(tmp_path / "cauchy.csv")
    write_cauchy_csv(path, [0.1, 0.05, 0.025], [0.02, 0.01])
    rows = _read_csv(path)
    assert rows[0] == ["eps", "sup_delta"]
    assert [[float(x) for x in row] for row in rows[1:]] == [[0.05, 0.02], [0.025, 0.01]]


def test_cauchy_csv_mismatch(tmp_path):
    """
    Test that two levels with two deltas raise BadParameter.
    """
    with pytest.raises(BadParameter):
        write_cauchy_csv(str(tmp_path / "cauchy.csv"), [0.1, 0.05], [0.02, 0.01])


def test_export_dispatch(tmp_path):
    """
    Test that export writes csv and vtk, refuses json without a report and rejects unknown formats.
    """
    final = solved_run(17).final()
    config = small_config()
    export(final, None, CSV, str(tmp_path / "a.csv"), config)
    export(final, None, VTK, str(tmp_path / "a.vtk"), config)
    assert os.path.isfile(tmp_path / "a.csv")
    assert os.path.isfile(tmp_path / "a.vtk")
    with pytest.raises(BadParameter):
        export(final, None, JSON, str(tmp_path / "a.json"), config)
    with pytest.raises(BadParameter):
        export(final, None, "hdf5", str(tmp_path / "a.h5"), config)


def test_write_into_file_path(tmp_path):
    """
    Test that a regular file in place of the output directory raises IoFailure.
    """
    blocker = tmp_path / "blocker"
    blocker.write_text("x", encoding="utf-8")
    with pytest.raises(IoFailure):
        ensure_directory(str(blocker))
    mesh = small_mesh(17)
    with pytest.raises(IoFailure):
        write_fields_csv(str(blocker / "fields.csv"), ScalarField(mesh, np.full(mesh.size, V3INF)), small_config())


def test_deterministic_output(tmp_path):
    """
    Test that writing the same field twice gives byte-identical csv files.
    """
    final = solved_run(17).final()
    first = tmp_path / "first.csv"
    second = tmp_path / "second.csv"
    write_fields_csv(str(first), final.field, small_config())
    write_fields_csv(str(second), final.field, small_config())
    assert first.read_bytes() == second.read_bytes()
