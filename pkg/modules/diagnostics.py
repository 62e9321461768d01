"""
Verification checks on a computed solution and the report they are collected in.

Each check compares the discrete field against a property the continuous solution has, relaxed by a
fixed discretization allowance from consts. Every record carries the node where the property is worst,
so a failure can be located on the mesh.

Classes:
- CheckRecord: outcome of one check.
- InvariantReport: all records of a run with the allowances they were judged by.

Functions:
- check_ellipticity: L^2 <= 1 everywhere, strictly inside the interior band, L^2 -> 1 at the cone.
- check_sandwich: lower <= phi <= upper for the comparison envelopes.
- check_corner_gradients: discrete gradients at P3 and P4 against the corner formulas.
- wing_corner_halo: nodes next to the wing corners P3 and P4, skipped by the two checks below.
- check_boundary_max: |D phi|^2 peaks at the cone edge.
- check_grad_L2_identity: closed-form D(L^2) against differences of the nodal L^2 field.
- run_checks: all of the above on the worker threads, assembled in a fixed order.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from modules.check_queue import CheckTask, run_checks_parallel
from modules.comparison import envelope, psi_lift
from modules.consts import (BOUNDARY_MAX_CELLS, CONE_EDGE_C, CORNER_C,
                            ELLIPTIC_SLACK, GRAD_L2_EXCLUSION_CELLS,
                            GRAD_L2_MAX_REL, GRAD_L2_MEDIAN_REL,
                            INTERIOR_BAND, SANDWICH_C, TIE_REL,
                            WING_CORNER_CELLS, worker_count)
from modules.discretization import build_operators
from modules.fields import corner_gradients, derived_state, grad_L2
from modules.geometry import Domain
from modules.mesh import INTERIOR, TAG_CONE, TAG_P1, TAG_P2, Mesh
from modules.solver import Solution

logger = logging.getLogger(__name__)

ELLIPTICITY = "ellipticity"
SANDWICH = "sandwich"
CORNER_GRADIENTS = "corner_gradients"
BOUNDARY_MAX = "boundary_max"
GRAD_L2_IDENTITY = "grad_L2_identity"

CHECK_ORDER = [ELLIPTICITY, SANDWICH, CORNER_GRADIENTS, BOUNDARY_MAX, GRAD_L2_IDENTITY]

ALLOWANCES = {
    "elliptic_slack": ELLIPTIC_SLACK,
    "interior_band": INTERIOR_BAND,
    "cone_edge_C": CONE_EDGE_C,
    "sandwich_C": SANDWICH_C,
    "corner_C": CORNER_C,
    "grad_L2_max_rel": GRAD_L2_MAX_REL,
    "grad_L2_median_rel": GRAD_L2_MEDIAN_REL,
    "grad_L2_exclusion_cells": GRAD_L2_EXCLUSION_CELLS,
    "boundary_max_cells": BOUNDARY_MAX_CELLS,
    "tie_rel": TIE_REL,
    "wing_corner_cells": WING_CORNER_CELLS,
}


def _finite(value) -> Optional[float]:
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


@dataclass(frozen=True)
class CheckRecord:
    """
    Attributes:
        name (str): check name.
        passed (bool): outcome.
        value (float): the measured quantity the threshold applies to.
        threshold (float): bound the measured quantity was compared with.
        node (Optional[int]): flat index of the worst node.
        xi (Optional[tuple]): its coordinates.
        tag (Optional[str]): its boundary tag name.
        details (dict): further measured values, JSON-compatible.
    """
    name: str
    passed: bool
    value: float
    threshold: float
    node: Optional[int] = None
    xi: Optional[tuple] = None
    tag: Optional[str] = None
    details: Dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "value": _finite(self.value),
            "threshold": _finite(self.threshold),
            "node": None if self.node is None else int(self.node),
            "xi": None if self.xi is None else [float(x) for x in self.xi],
            "tag": self.tag,
            "details": {key: (_finite(val) if isinstance(val, float) else val) for key, val in self.details.items()},
        }


@dataclass(frozen=True)
class InvariantReport:
    """
    Attributes:
        records (List[CheckRecord]): one per check, in CHECK_ORDER.
        allowances (dict): the discretization allowances the checks used.
        mu (float): mu of the checked solution.
        eps (float): eps of the checked solution.
        n_u (int): mesh nodes across.
        n_v (int): mesh nodes along.
        h (float): mesh size.
    """
    records: List[CheckRecord]
    allowances: Dict
    mu: float
    eps: float
    n_u: int
    n_v: int
    h: float

    @property
    def passed(self) -> bool:
        return all(record.passed for record in self.records)

    def record(self, name: str) -> CheckRecord:
        for record in self.records:
            if record.name == name:
                return record
        raise KeyError(name)

    def failed_names(self) -> List[str]:
        return [record.name for record in self.records if not record.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [record.to_dict() for record in self.records],
            "allowances": dict(self.allowances),
            "solution": {"mu": float(self.mu), "eps": float(self.eps), "n_u": self.n_u, "n_v": self.n_v,
                         "h": float(self.h)},
        }


def _located(mesh: Mesh, node: int) -> dict:
    return {"node": int(node), "xi": tuple(float(x) for x in mesh.points[node]), "tag": mesh.tag_name(node)}


def _state(solution: Solution, mesh: Mesh):
    ops = build_operators(mesh)
    values = solution.values
    grad = ops.gradient(values)
    return ops, values, grad, derived_state(values, grad, mesh.points)


def check_ellipticity(solution: Solution, mesh: Mesh) -> CheckRecord:
    """
    L^2 <= 1 + slack at all nodes, L^2 <= 1 - delta_int with delta_int > slack on the interior band,
    and |L^2 - 1| <= C (h + eps) on the cone edge.

    The worst node is that of the first failing condition, or the node of largest L^2 on a pass.
    """
    _, _, _, state = _state(solution, mesh)
    if np.any(state.subsonic):
        node = int(np.argmin(state.c2))
        return CheckRecord(ELLIPTICITY, False, float(state.c2[node]), 0.0, **_located(mesh, node),
                           details={"reason": "c2 <= 0"})

    L2 = state.L2
    band = (mesh.flat_tags == INTERIOR) & (mesh.cone_distance() >= INTERIOR_BAND - 1e-12)
    edge = mesh.mask(TAG_CONE, TAG_P1, TAG_P2)
    edge_allowance = CONE_EDGE_C * (mesh.h + solution.eps)

    worst = int(np.argmax(L2))
    band_node = int(np.argmax(np.where(band, L2, -np.inf)))
    delta_int = float(1.0 - L2[band_node]) if np.any(band) else math.nan
    deviation = np.where(edge, np.abs(L2 - 1.0), -np.inf)
    edge_node = int(np.argmax(deviation))

    conditions = [
        (L2[worst] <= 1.0 + ELLIPTIC_SLACK, worst),
        (delta_int > ELLIPTIC_SLACK, band_node),
        (deviation[edge_node] <= edge_allowance, edge_node),
    ]
    passed = all(ok for ok, _ in conditions)
    node = next((node for ok, node in conditions if not ok), worst)
    return CheckRecord(
        ELLIPTICITY, bool(passed), float(L2[worst]), 1.0 + ELLIPTIC_SLACK, **_located(mesh, node),
        details={
            "delta_int": delta_int,
            "delta_int_node": band_node,
            "cone_edge_deviation": float(deviation[edge_node]),
            "cone_edge_allowance": float(edge_allowance),
        })


def check_sandwich(solution: Solution, domain: Domain, eps: float, eta_family: Optional[Sequence],
                   mesh: Mesh) -> CheckRecord:
    """
    lower - C h^2 <= phi <= upper + C h^2 at every node and delta0 > 0.

    Args:
        eta_family: candidates, or None for the default families.

    Raises:
        EmptyFamily: if the family lacks sub or super members.
    """
    bounds = envelope(domain, eps, eta_family, mesh)
    slack = SANDWICH_C * mesh.h ** 2
    values = solution.values
    below = bounds.lower.values - slack - values
    above = values - bounds.upper.values - slack
    violation = np.maximum(below, above)
    node = int(np.argmax(violation))

    q = build_operators(mesh).q
    cone = mesh.mask(TAG_CONE, TAG_P1, TAG_P2)
    cone_gap = float(np.max(np.abs(bounds.upper.values[cone] - q[cone] * (1.0 + psi_lift(domain, eps)))))

    passed = violation[node] <= 0.0 and bounds.delta0 > 0.0
    if violation[node] <= 0.0 and not bounds.delta0 > 0.0:
        node = bounds.delta0_node
    return CheckRecord(
        SANDWICH, bool(passed), float(violation[node]), 0.0, **_located(mesh, node),
        details={
            "delta0": float(bounds.delta0),
            "delta0_node": int(bounds.delta0_node),
            "max_below_lower": float(np.max(below)),
            "max_above_upper": float(np.max(above)),
            "slack": float(slack),
            "cone_upper_gap": cone_gap,
            "sub_members": len(bounds.sub),
            "super_members": len(bounds.super),
        })


def check_corner_gradients(solution: Solution, domain: Domain) -> CheckRecord:
    """Discrete D phi at P3 and P4 against the gradients the two meeting conditions force, within C h."""
    mesh = solution.field.mesh
    ops = build_operators(mesh)
    grad = ops.gradient(solution.values)
    p3 = mesh.index(0, 0)
    p4 = mesh.index(0, mesh.n_v - 1)
    expected3, expected4 = corner_gradients(domain, float(solution.values[p3]), float(solution.values[p4]))
    error3 = float(np.linalg.norm(grad[p3] - expected3))
    error4 = float(np.linalg.norm(grad[p4] - expected4))
    node = p3 if error3 >= error4 else p4
    value = max(error3, error4)
    threshold = CORNER_C * mesh.h
    return CheckRecord(
        CORNER_GRADIENTS, value <= threshold, value, threshold, **_located(mesh, node),
        details={
            "error_P3": error3,
            "error_P4": error4,
            "expected_P3": [float(x) for x in expected3],
            "expected_P4": [float(x) for x in expected4],
        })


def wing_corner_halo(mesh: Mesh) -> np.ndarray:
    """Mask of the nodes within WING_CORNER_CELLS cells of P3 (i=0, j=0) or P4 (i=0, j=n_v-1)."""
    i_index, j_index = np.divmod(np.arange(mesh.size), mesh.n_v)
    near_wing = i_index <= WING_CORNER_CELLS
    near_p3 = j_index <= WING_CORNER_CELLS
    near_p4 = j_index >= mesh.n_v - 1 - WING_CORNER_CELLS
    return near_wing & (near_p3 | near_p4)


def check_boundary_max(solution: Solution, mesh: Mesh) -> CheckRecord:
    """
    The maximum of |D phi|^2 over the nodes sits on the cone edge or within one cell of it.

    Nodes in the wing-corner halo are skipped: the corner gradients there are fixed by the two meeting
    wing conditions, not by the maximum principle. Nodes within a relative TIE_REL of the maximum all
    count as attaining it; the check passes if any of them is near the cone.
    """
    grad = build_operators(mesh).gradient(solution.values)
    speed2 = np.sum(grad * grad, axis=-1)
    considered = ~wing_corner_halo(mesh)
    peak = float(np.max(speed2[considered]))
    tied = considered & (speed2 >= peak - TIE_REL * max(abs(peak), 1.0))
    i_index = np.arange(mesh.size) // mesh.n_v
    near_cone = i_index >= mesh.n_u - 1 - BOUNDARY_MAX_CELLS
    winners = np.flatnonzero(tied & near_cone)
    passed = len(winners) > 0
    node = int(winners[0]) if passed else int(np.argmax(np.where(considered, speed2, -np.inf)))
    cells = int(mesh.n_u - 1 - mesh.ij(node)[0])
    return CheckRecord(BOUNDARY_MAX, passed, float(cells), float(BOUNDARY_MAX_CELLS), **_located(mesh, node),
                       details={"max_grad_squared": peak, "tied_nodes": int(np.sum(tied)),
                                "excluded_nodes": int(np.sum(~considered))})


def check_grad_L2_identity(solution: Solution, mesh: Mesh) -> CheckRecord:
    """
    grad_L2 from the discrete derivatives against differences of the nodal L^2 field.

    Tested nodes are interior nodes more than GRAD_L2_EXCLUSION_CELLS cells from the cone and outside
    the wing-corner halo. The error at a node is |formula - differences| divided by one global scale,
    the largest difference-gradient norm over the tested nodes (not the norm at that node); the check
    bounds the maximum and the median of these errors.
    """
    ops, values, grad, state = _state(solution, mesh)
    i_index = np.arange(mesh.size) // mesh.n_v
    tested = ((mesh.flat_tags == INTERIOR) & (i_index < mesh.n_u - 1 - GRAD_L2_EXCLUSION_CELLS)
              & ~wing_corner_halo(mesh))
    if np.any(state.subsonic):
        node = int(np.argmin(state.c2))
        return CheckRecord(GRAD_L2_IDENTITY, False, math.nan, GRAD_L2_MAX_REL, **_located(mesh, node),
                           details={"reason": "c2 <= 0"})
    if not np.any(tested):
        return CheckRecord(GRAD_L2_IDENTITY, False, math.nan, GRAD_L2_MAX_REL, details={"reason": "no tested nodes"})

    idx = np.flatnonzero(tested)
    formula = grad_L2(values[idx], grad[idx], ops.hessian(values)[idx], mesh.points[idx])
    differenced = ops.gradient(state.L2)[idx]
    scale = max(float(np.max(np.linalg.norm(differenced, axis=-1))), 1e-300)
    errors = np.linalg.norm(formula - differenced, axis=-1) / scale
    worst = int(np.argmax(errors))
    median = float(np.median(errors))
    passed = errors[worst] <= GRAD_L2_MAX_REL and median <= GRAD_L2_MEDIAN_REL
    return CheckRecord(GRAD_L2_IDENTITY, bool(passed), float(errors[worst]), GRAD_L2_MAX_REL,
                       **_located(mesh, int(idx[worst])),
                       details={"median_rel": median, "median_threshold": GRAD_L2_MEDIAN_REL,
                                "tested_nodes": int(len(idx)), "scale": scale,
                                "normalization": "largest difference-gradient norm over the tested nodes"})


def run_checks(solution: Solution, domain: Domain, eta_family: Optional[Sequence] = None,
               workers: Optional[int] = None) -> InvariantReport:
    """
    Runs every check on worker threads and assembles the report in CHECK_ORDER.

    Args:
        solution (Solution): the field to check, normally mu=1 at the smallest eps.
        domain (Domain): its flow region.
        eta_family: comparison candidates, None for the defaults.
        workers (Optional[int]): thread cap, defaults to worker_count().

    Returns:
        InvariantReport: one record per check.
    """
    mesh = solution.field.mesh
    tasks = [
        CheckTask(ELLIPTICITY, lambda: check_ellipticity(solution, mesh)),
        CheckTask(SANDWICH, lambda: check_sandwich(solution, domain, solution.eps, eta_family, mesh)),
        CheckTask(CORNER_GRADIENTS, lambda: check_corner_gradients(solution, domain)),
        CheckTask(BOUNDARY_MAX, lambda: check_boundary_max(solution, mesh)),
        CheckTask(GRAD_L2_IDENTITY, lambda: check_grad_L2_identity(solution, mesh)),
    ]
    # operators are cached per mesh; build them once before the threads share them
    build_operators(mesh)
    results = run_checks_parallel(tasks, workers if workers is not None else worker_count())
    records = [results[name] for name in CHECK_ORDER]
    for record in records:
        logger.info("check %-18s %s (value %.6g, threshold %.6g)", record.name,
                    "pass" if record.passed else "FAIL", record.value, record.threshold)
    return InvariantReport(records, dict(ALLOWANCES), solution.mu, solution.eps, mesh.n_u, mesh.n_v, mesh.h)
