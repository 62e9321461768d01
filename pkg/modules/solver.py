"""
Newton solver with continuation in mu and a vanishing-viscosity sweep in eps.

The mu=0 problem is linear once c^2 is frozen, so the initial guess comes from one frozen-coefficient
solve finished by Newton at mu=0. Each later (mu, eps) stage is a damped Newton solve warm-started from
the previous stage; a failing mu step is halved up to MAX_MU_HALVINGS times before the run gives up.

Classes:
- Solution: a converged (or not) field with its Newton history.
- MembershipRecord: a node where phi dropped below the lifted cone data beyond the allowance.
- SweepResult: all stage solutions, Cauchy differences between eps levels and the extrapolated field.

Functions:
- initial_guess: solution of the mu=0 problem.
- newton_solve: damped Newton for one (mu, eps) stage.
- continuation_run: the full mu/eps schedule.
- extrapolate: first-order eps -> 0 estimate from two levels.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import MatrixRankWarning, splu

from modules.consts import (MAX_MU_HALVINGS, MEMBERSHIP_SLACK, VARIABLE_PHI,
                            VARIABLE_S)
from modules.discretization import (assemble_jacobian, assemble_s_jacobian,
                                    build_operators, cone_s_value,
                                    discrete_residual, discrete_s_residual,
                                    mu0_system)
from modules.errors import (ContinuationStuck, DegenerateValue, Diverged,
                            LinearSolveFailure, SingularJacobian,
                            SolverError, StartViolatesBoundary)
from modules.fields import derived_state, principal_coefficients
from modules.mesh import Mesh, ScalarField
from modules.problem_config import NewtonOptions, ProblemConfig
from modules.transforms import FROM_S, TO_S, s_transform

logger = logging.getLogger(__name__)

CONE_ROW_TOL = 1e-12


@dataclass(frozen=True)
class Solution:
    """
    Attributes:
        field (ScalarField): nodal phi values.
        mu (float): continuation parameter.
        eps (float): viscosity lift.
        converged (bool): final residual sup-norm <= tol.
        residual_history (List[float]): sup-norm of the residual before each iteration and at the end.
        variable (str): unknown the iteration worked in, "phi" or "s".
    """
    field: ScalarField
    mu: float
    eps: float
    converged: bool
    residual_history: List[float]
    variable: str = "phi"

    @property
    def iterations(self) -> int:
        return max(len(self.residual_history) - 1, 0)

    @property
    def values(self) -> np.ndarray:
        return self.field.values


@dataclass(frozen=True)
class MembershipRecord:
    """
    Attributes:
        mu (float): stage parameter.
        eps (float): stage lift.
        node (int): flat index of the worst node.
        deficit (float): (q + eps - allowance) - phi at that node, > 0.
    """
    mu: float
    eps: float
    node: int
    deficit: float


@dataclass
class SweepResult:
    """
    Attributes:
        solutions (List[Solution]): one per scheduled (mu, eps), eps-major order.
        cauchy_deltas (List[float]): sup |phi_{1,eps_k} - phi_{1,eps_k+1}|.
        extrapolated (Optional[ScalarField]): eps -> 0 estimate, flagged as an estimate.
        membership_failures (List[MembershipRecord]): stages that left the lifted admissible set.
        halvings (int): number of mu-step halvings the run needed.
    """
    solutions: List[Solution] = field(default_factory=list)
    cauchy_deltas: List[float] = field(default_factory=list)
    extrapolated: Optional[ScalarField] = None
    membership_failures: List[MembershipRecord] = field(default_factory=list)
    halvings: int = 0

    def final(self) -> Solution:
        """The mu=1 solution at the smallest eps."""
        return self.solutions[-1]

    def at(self, mu: float, eps: float) -> Optional[Solution]:
        for solution in self.solutions:
            if solution.mu == mu and solution.eps == eps:
                return solution
        return None

    def level_finals(self) -> List[Solution]:
        """The last (mu=1) solution of every eps level, in schedule order."""
        finals = {}
        for solution in self.solutions:
            finals[solution.eps] = solution
        return list(finals.values())


def _cone_data(mesh: Mesh, eps: float) -> np.ndarray:
    ops = build_operators(mesh)
    return ops.q[ops.cone] + eps


def with_cone_data(mesh: Mesh, values: np.ndarray, eps: float) -> np.ndarray:
    """Copy of values with the cone nodes set to sqrt(1+|xi|^2) + eps."""
    values = np.array(values, dtype=float)
    values[build_operators(mesh).cone] = _cone_data(mesh, eps)
    return values


def _factor_solve(jacobian: sp.csr_matrix, rhs: np.ndarray, on_failure: Callable[[], SingularJacobian]) -> np.ndarray:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", MatrixRankWarning)
            step = splu(jacobian.tocsc()).solve(rhs)
    except (RuntimeError, MatrixRankWarning) as e:
        raise on_failure() from e
    if not np.all(np.isfinite(step)):
        raise on_failure()
    return step


def _singular(mesh: Mesh, mu: float, values: np.ndarray) -> SingularJacobian:
    ops = build_operators(mesh)
    grad = ops.gradient(values)
    eigenvalues = principal_coefficients(mu, values, grad, mesh.points).eigenvalues[:, 0]
    eigenvalues = np.where(ops.interior, eigenvalues, np.inf)
    node = int(np.argmin(eigenvalues))
    i, j = mesh.ij(node)
    return SingularJacobian(
        f"jacobian is singular at mu={mu}; principal part least positive at node ({i}, {j}), "
        f"xi={tuple(mesh.points[node])}, eigenvalue {eigenvalues[node]:.3e}",
        node=node, xi=tuple(mesh.points[node]))


def initial_guess(mesh: Mesh, eps: float, opts: NewtonOptions) -> Solution:
    """
    Solves the mu=0 problem: one frozen-coefficient solve, then Newton at mu=0.

    At mu=0 the interior equation is c^2 (lap phi + D^2 phi[xi, xi]) = 0. The first step freezes c^2 at
    phi0 = max(v3inf, sqrt(1+|xi|^2) + eps) and solves the resulting linear system together with the
    (linear) boundary rows. Repeating that sweep stalls at the round-off floor of a direct solve, which
    lies above tol on fine meshes, so the stage is finished by Newton iterations in phi from there.

    Args:
        mesh (Mesh): the mesh.
        eps (float): viscosity lift.
        opts (NewtonOptions): Newton controls; the mu=0 stage always iterates in phi.

    Returns:
        Solution: converged mu=0 solution; its history starts with the residual of phi0.

    Raises:
        LinearSolveFailure: if the frozen system is singular or Newton does not reach tol.
        SingularJacobian, Diverged: from the Newton iterations.
    """
    ops = build_operators(mesh)
    v3inf = mesh.domain.v3inf
    values = with_cone_data(mesh, np.maximum(v3inf, ops.q + eps), eps)
    start_norm = float(np.max(np.abs(discrete_residual(mesh, 0.0, eps, ScalarField(mesh, values, 0.0, eps)))))
    logger.debug("mu=0 start residual %.3e", start_norm)
    if start_norm <= opts.tol:
        return Solution(ScalarField(mesh, values, 0.0, eps), 0.0, eps, True, [start_norm])

    rhs = np.zeros(mesh.size)
    rhs[ops.cone] = _cone_data(mesh, eps)
    c2 = derived_state(values, ops.gradient(values), mesh.points).c2
    frozen = np.where(c2 > 0.0, c2, 1.0)
    values = _factor_solve(mu0_system(mesh, frozen), rhs,
                           lambda: LinearSolveFailure("frozen-coefficient system is singular"))
    values[ops.cone] = _cone_data(mesh, eps)

    solution = newton_solve(mesh, 0.0, eps, ScalarField(mesh, values, 0.0, eps), replace(opts, variable=VARIABLE_PHI))
    history = [start_norm] + solution.residual_history
    if not solution.converged:
        raise LinearSolveFailure(f"mu=0 problem stalled at residual {history[-1]:.3e}")
    return Solution(solution.field, 0.0, eps, True, history)


def _check_start(mesh: Mesh, eps: float, values: np.ndarray):
    ops = build_operators(mesh)
    defect = np.abs(values[ops.cone] - _cone_data(mesh, eps))
    if np.any(defect > CONE_ROW_TOL * (1.0 + np.abs(values[ops.cone]))):
        raise StartViolatesBoundary(f"start field misses the cone data by {float(defect.max()):.3e}")


def _newton(residual_fn, jacobian_fn, values, cone, opts: NewtonOptions, on_singular, label: str):
    history = []
    residual = residual_fn(values)
    norm = float(np.max(np.abs(residual)))
    history.append(norm)
    for iteration in range(opts.max_iter):
        if norm <= opts.tol:
            return values, True, history

        step = _factor_solve(jacobian_fn(values), -residual, lambda: on_singular(values))
        step[cone] = 0.0

        scale = 1.0
        for _ in range(opts.max_backtracks + 1):
            trial = values + scale * step
            try:
                trial_residual = residual_fn(trial)
            except DegenerateValue:
                trial_residual = None
            if trial_residual is not None and np.all(np.isfinite(trial_residual)):
                trial_norm = float(np.max(np.abs(trial_residual)))
                if trial_norm < norm:
                    break
            scale *= 0.5
        else:
            raise Diverged(f"{label}: line search failed at iteration {iteration}, residual {norm:.3e}")

        values, residual, norm = trial, trial_residual, trial_norm
        history.append(norm)
        logger.debug("%s: iteration %d, residual %.3e, step %.3g", label, iteration + 1, norm, scale)

    return values, norm <= opts.tol, history


def newton_solve(mesh: Mesh, mu: float, eps: float, start: ScalarField, opts: NewtonOptions) -> Solution:
    """
    Damped Newton iteration for one (mu, eps) stage.

    Each step solves J d = -r with a sparse LU factorization and halves the step until the residual
    sup-norm decreases. Cone rows are kept exact. With opts.variable == "s" the iteration runs on
    s = arcosh(phi / sqrt(1+|xi|^2)) with colored-difference Jacobians and the result is mapped back.

    Args:
        mesh (Mesh): the mesh.
        mu (float): continuation parameter.
        eps (float): viscosity lift.
        start (ScalarField): phi start values, must meet the cone data.
        opts (NewtonOptions): Newton controls.

    Returns:
        Solution: the final iterate, converged or not.

    Raises:
        StartViolatesBoundary: if start misses the cone data.
        SingularJacobian: if a Jacobian cannot be factored.
        Diverged: if the line search cannot reduce the residual.
    """
    values = np.array(start.values, dtype=float)
    _check_start(mesh, eps, values)
    ops = build_operators(mesh)
    label = f"newton mu={mu:.6g} eps={eps:.6g}"

    if opts.variable == VARIABLE_S:
        try:
            s_start = s_transform(values, mesh.points, TO_S)
        except DegenerateValue as e:
            raise Diverged(f"{label}: start is not above the cone data, s undefined") from e
        s_start[ops.cone] = cone_s_value(ops.q[ops.cone], eps)
        s_values, converged, history = _newton(
            lambda x: discrete_s_residual(mesh, mu, eps, x),
            lambda x: assemble_s_jacobian(mesh, mu, eps, x),
            s_start, ops.cone, opts,
            lambda x: _singular(mesh, mu, s_transform(x, mesh.points, FROM_S)), label)
        values = with_cone_data(mesh, s_transform(s_values, mesh.points, FROM_S), eps)
        return Solution(ScalarField(mesh, values, mu, eps), mu, eps, converged, history, VARIABLE_S)

    values, converged, history = _newton(
        lambda x: discrete_residual(mesh, mu, eps, ScalarField(mesh, x, mu, eps)),
        lambda x: assemble_jacobian(mesh, mu, eps, ScalarField(mesh, x, mu, eps), opts.jacobian_mode),
        values, ops.cone, opts, lambda x: _singular(mesh, mu, x), label)
    return Solution(ScalarField(mesh, values, mu, eps), mu, eps, converged, history)


def membership_deficit(solution: Solution) -> Tuple[float, int]:
    """
    Largest violation of phi >= sqrt(1+|xi|^2) + eps - 10 h^2.

    Returns:
        tuple: (deficit, node); deficit <= 0 means the field is admissible.
    """
    mesh = solution.field.mesh
    floor = build_operators(mesh).q + solution.eps - MEMBERSHIP_SLACK * mesh.h ** 2
    gap = floor - solution.values
    node = int(np.argmax(gap))
    return float(gap[node]), node


def extrapolate(previous: Solution, last: Solution) -> ScalarField:
    """
    First-order eps -> 0 estimate from two levels, (e_p phi_l - e_l phi_p) / (e_p - e_l).

    For a halving schedule this is 2 phi_{eps/2} - phi_eps.
    """
    e_p, e_l = previous.eps, last.eps
    values = (e_p * last.values - e_l * previous.values) / (e_p - e_l)
    return ScalarField(last.field.mesh, values, mu=last.mu, eps=0.0, kind="phi", estimate=True)


def _stage(mesh: Mesh, start: Solution, mu: float, eps: float, opts: NewtonOptions,
           depth: int, counter: List[int]) -> Solution:
    """Solves at mu from start, halving the mu step on failure."""
    failure: Optional[Exception] = None
    try:
        solution = newton_solve(mesh, mu, eps, start.field, opts)
        if solution.converged:
            return solution
        failure = Diverged(f"no convergence within {opts.max_iter} iterations, residual {solution.residual_history[-1]:.3e}")
    except (Diverged, SingularJacobian) as e:
        failure = e

    if depth >= MAX_MU_HALVINGS or mu == start.mu:
        raise ContinuationStuck(f"mu={mu:.6g}, eps={eps:.6g} failed after {depth} halvings: {failure}", mu, eps) \
            from failure

    middle = 0.5 * (start.mu + mu)
    counter[0] += 1
    logger.warning("mu step %.6g -> %.6g failed at eps=%.6g (%s), halving", start.mu, mu, eps, failure)
    halfway = _stage(mesh, start, middle, eps, opts, depth + 1, counter)
    return _stage(mesh, halfway, mu, eps, opts, depth + 1, counter)


def _fresh_start(mesh: Mesh, eps: float, opts: NewtonOptions) -> Solution:
    try:
        return initial_guess(mesh, eps, opts)
    except SolverError as e:
        raise ContinuationStuck(f"mu=0 problem failed at eps={eps:.6g}: {e}", 0.0, eps) from e


def _warm_start(mesh: Mesh, base: Solution, eps: float, opts: NewtonOptions, counter: List[int]) -> Solution:
    """mu=0 at a new eps from the previous level's mu=0 field; a fresh initial_guess if that fails."""
    moved = ScalarField(mesh, with_cone_data(mesh, base.values, eps), 0.0, eps)
    warm = Solution(moved, 0.0, eps, False, [])
    try:
        return _stage(mesh, warm, 0.0, eps, opts, MAX_MU_HALVINGS, counter)
    except ContinuationStuck as e:
        logger.warning("warm start at eps=%.6g failed (%s), solving the mu=0 problem from scratch", eps, e)
        return _fresh_start(mesh, eps, opts)


def continuation_run(config: ProblemConfig, mesh: Mesh,
                     on_solution: Optional[Callable[[Solution], None]] = None) -> SweepResult:
    """
    Runs the mu continuation for every eps level.

    The eps loop is outer and the mu loop inner; each stage is warm-started from the previous one and
    the mu=0 stage of each new eps level from the previous level's mu=0 solution, falling back to a fresh
    initial_guess when that warm start fails (there is no mu step to halve at mu=0). After every stage
    the lifted admissibility phi >= sqrt(1+|xi|^2) + eps - 10 h^2 is checked and violations recorded.

    Args:
        config (ProblemConfig): schedules and Newton options.
        mesh (Mesh): the mesh.
        on_solution: optional callback for every scheduled solution.

    Returns:
        SweepResult: solutions, Cauchy differences and the extrapolated estimate.

    Raises:
        ContinuationStuck: if a stage fails after MAX_MU_HALVINGS halvings.
    """
    result = SweepResult()
    counter = [0]
    opts = config.newton
    base: Optional[Solution] = None

    for eps in config.eps_schedule:
        logger.info("eps=%.6g: starting mu continuation over %d values", eps, len(config.mu_schedule))
        if base is None:
            current = _fresh_start(mesh, eps, opts)
        else:
            current = _warm_start(mesh, base, eps, opts, counter)
        base = current

        for mu in config.mu_schedule:
            if mu != current.mu:
                current = _stage(mesh, current, mu, eps, opts, 0, counter)
            result.solutions.append(current)
            if on_solution is not None:
                on_solution(current)

            deficit, node = membership_deficit(current)
            if deficit > 0:
                logger.warning("mu=%.6g eps=%.6g: phi below lifted cone data by %.3e at node %s",
                               mu, eps, deficit, mesh.ij(node))
                result.membership_failures.append(MembershipRecord(mu, eps, node, deficit))
            logger.info("mu=%.6g eps=%.6g solved in %d iterations, residual %.3e",
                        mu, eps, current.iterations, current.residual_history[-1])

    finals = result.level_finals()
    result.cauchy_deltas = [a.field.sup_distance(b.field) for a, b in zip(finals, finals[1:])]
    if len(finals) >= 2:
        result.extrapolated = extrapolate(finals[-2], finals[-1])
    elif finals:
        last = finals[-1]
        result.extrapolated = ScalarField(mesh, last.values.copy(), mu=last.mu, eps=0.0, estimate=True)
    result.halvings = counter[0]
    logger.info("continuation done: %d stages, %d halvings, cauchy deltas %s",
                len(result.solutions), result.halvings, ["%.3e" % d for d in result.cauchy_deltas])
    return result


def rerun_change(solution: Solution, opts: NewtonOptions) -> float:
    """Largest nodal change when Newton is restarted on its own output."""
    again = newton_solve(solution.field.mesh, solution.mu, solution.eps, solution.field, opts)
    return float(np.max(np.abs(again.values - solution.values)))


def sup_norm(values: np.ndarray) -> float:
    return float(np.max(np.abs(values))) if len(values) else math.nan
