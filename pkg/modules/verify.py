"""
Solver-free verification suite.

Every check here compares a kernel against a closed form and needs no Newton solve, so the whole
suite runs in about a second on the configured mesh.

Classes:
- VerifyRow: outcome of one check, printed as one table row.

Functions:
- run_verify: runs all checks for a config and seed.
- format_table: the printed summary.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from modules.consts import (GRAD_L2_ORACLE_REL, LINEAR_RESIDUAL_TOL,
                            ON_BOUNDARY_TOL, ROUND_TRIP_TOL,
                            VERIFY_MUS, VERIFY_RANDOM_ETAS,
                            VERIFY_RANDOM_POINTS)
from modules.discretization import build_operators, discrete_residual, stencil_scale
from modules.errors import ChaplyginError
from modules.fields import (characteristic_form, conical_to_3d, derived_state,
                            grad_L2, interior_residual, linear_exact,
                            mach_cone_conormal, mach_cone_generator,
                            potential_operator_3d, s_interior_residual)
from modules.geometry import (CONE, PY, SY1, SY2, Domain, build_domain,
                              contains, critical_angle, on_side)
from modules.mesh import Mesh, ScalarField, build_mesh
from modules.problem_config import ProblemConfig
from modules.transforms import (FROM_S, TO_S, hat_inverse, hat_transform,
                                s_transform, spherical_lift, spherical_unlift)

logger = logging.getLogger(__name__)

MONOTONE_STATES = 1000
MONOTONE_ROUNDING = 1e-14
IDENTITY_TOL = 1e-12
ORACLE_STEP = 1e-5


@dataclass(frozen=True)
class VerifyRow:
    """
    Attributes:
        name (str): check name.
        passed (bool): outcome.
        value (float): measured quantity.
        threshold (float): its bound.
        note (str): extra text for the table.
    """
    name: str
    passed: bool
    value: float
    threshold: float
    note: str = ""


def _random_points(domain: Domain, rng: np.random.Generator, n: int) -> np.ndarray:
    """n points of the closed region, by rejection from its bounding box."""
    radius = domain.mach_radius
    points = []
    while len(points) < n:
        candidate = np.array([-radius * rng.random(), radius * rng.random()])
        if contains(domain, candidate):
            points.append(candidate)
    return np.array(points)


def _random_etas(rng: np.random.Generator, n: int) -> np.ndarray:
    """Vectors with |eta|^2 uniform in (1.1, 25)."""
    directions = rng.normal(size=(n, 3))
    directions /= np.linalg.norm(directions, axis=-1, keepdims=True)
    return directions * np.sqrt(rng.uniform(1.1, 25.0, size=n))[:, None]


def check_sigma_inf(config: ProblemConfig, **_) -> VerifyRow:
    sigma_inf = critical_angle(config.v3inf)
    error = abs(sigma_inf - math.atan(math.sqrt(config.v3inf ** 2 - 1.0)))
    return VerifyRow("sigma_inf", error <= 1e-12, error, 1e-12, f"sigma_inf = {sigma_inf:.7f}")


def check_domain(config: ProblemConfig, domain: Domain, mesh: Mesh, **_) -> VerifyRow:
    """Corner values, corners on their two sides, and every mesh node inside the region."""
    radius = domain.mach_radius
    expected = {
        "P1": np.array([0.0, radius]),
        "P2": np.array([-radius, 0.0]),
        "P3": np.array([-math.tan(config.sigma2), 0.0]),
        "P4": np.array([0.0, math.tan(config.sigma1)]),
    }
    error = max(float(np.max(np.abs(getattr(domain, name) - point))) for name, point in expected.items())
    sides = [(domain.P1, CONE, SY1), (domain.P2, CONE, SY2), (domain.P3, PY, SY2), (domain.P4, PY, SY1)]
    on_sides = all(on_side(domain, a, point) and on_side(domain, b, point) for point, a, b in sides)
    inside = all(contains(domain, point, ON_BOUNDARY_TOL) for point in mesh.points)
    passed = error <= 1e-12 and on_sides and inside and bool(np.all(mesh.jacobian > 0))
    return VerifyRow("domain", passed, error, 1e-12, f"{mesh.n_u}x{mesh.n_v} mesh, orientation {mesh.orientation:+d}")


def check_linear_annihilation(mesh: Mesh, rng: np.random.Generator, **_) -> VerifyRow:
    """Discrete interior residual of exact linear solutions, relative to the stencil scale."""
    ops = build_operators(mesh)
    worst = 0.0
    for eta in _random_etas(rng, VERIFY_RANDOM_ETAS):
        phi, _, _, c2 = linear_exact(eta, mesh.points)
        scale = stencil_scale(phi, np.full(mesh.size, c2), mesh)
        for mu in VERIFY_MUS:
            residual = discrete_residual(mesh, mu, 0.0, ScalarField(mesh, phi, mu, 0.0))
            worst = max(worst, float(np.max(np.abs(residual[ops.interior]))) / scale)
    return VerifyRow("linear_annihilation", worst <= LINEAR_RESIDUAL_TOL, worst, LINEAR_RESIDUAL_TOL,
                     f"{VERIFY_RANDOM_ETAS} eta x mu in {VERIFY_MUS}")


def check_round_trips(config: ProblemConfig, domain: Domain, rng: np.random.Generator, **_) -> VerifyRow:
    """s, spherical and hat transforms and their inverses, plus hat(P3) = 0."""
    points = _random_points(domain, rng, VERIFY_RANDOM_POINTS)
    q = np.sqrt(1.0 + np.sum(points ** 2, axis=-1))
    phis = q * rng.uniform(1.01, 3.0, size=len(points))

    errors = [np.abs(s_transform(s_transform(phis, points, TO_S), points, FROM_S) - phis) / (1.0 + np.abs(phis))]
    for xi, phi in zip(points, phis):
        back_xi, back_phi = spherical_unlift(*spherical_lift(xi, phi))
        errors.append(np.abs(np.append(back_xi - xi, back_phi - phi)) / (1.0 + np.abs(np.append(xi, phi))))
        hat_xi, hat_phi = hat_transform(xi, phi, config.sigma2)
        back_xi, back_phi = hat_inverse(hat_xi, hat_phi, config.sigma2)
        errors.append(np.abs(np.append(back_xi - xi, back_phi - phi)) / (1.0 + np.abs(np.append(xi, phi))))
    origin, _ = hat_transform(domain.P3, 1.0, config.sigma2)
    errors.append(np.abs(origin))
    worst = max(float(np.max(e)) for e in errors)
    return VerifyRow("round_trips", worst <= ROUND_TRIP_TOL, worst, ROUND_TRIP_TOL,
                     f"{VERIFY_RANDOM_POINTS} points, s/spherical/hat")


def _manufactured(v3inf: float, xi: np.ndarray):
    """A smooth test potential with analytic gradient and Hessian."""
    x1, x2 = xi[..., 0], xi[..., 1]
    phi = v3inf + 0.1 * np.sin(x1) * np.cos(x2) + 0.05 * (x1 * x1 + x2 * x2)
    grad = np.stack([0.1 * np.cos(x1) * np.cos(x2) + 0.1 * x1, -0.1 * np.sin(x1) * np.sin(x2) + 0.1 * x2], axis=-1)
    h11 = -0.1 * np.sin(x1) * np.cos(x2) + 0.1
    h12 = -0.1 * np.cos(x1) * np.sin(x2)
    h22 = -0.1 * np.sin(x1) * np.cos(x2) + 0.1
    hess = np.stack([np.stack([h11, h12], axis=-1), np.stack([h12, h22], axis=-1)], axis=-2)
    return phi, grad, hess


def check_grad_L2_oracle(config: ProblemConfig, domain: Domain, rng: np.random.Generator, **_) -> VerifyRow:
    """grad_L2 of a manufactured field against central differences of its L^2."""
    points = _random_points(domain, rng, VERIFY_RANDOM_POINTS)

    def L2_at(xi):
        phi, grad, _ = _manufactured(config.v3inf, xi)
        return derived_state(phi, grad, xi).L2

    phi, grad, hess = _manufactured(config.v3inf, points)
    formula = grad_L2(phi, grad, hess, points)
    differenced = np.empty_like(formula)
    for k in range(2):
        step = np.zeros(2)
        step[k] = ORACLE_STEP
        differenced[:, k] = (L2_at(points + step) - L2_at(points - step)) / (2.0 * ORACLE_STEP)
    scale = float(np.max(np.linalg.norm(differenced, axis=-1)))
    worst = float(np.max(np.linalg.norm(formula - differenced, axis=-1))) / scale
    return VerifyRow("grad_L2_oracle", worst <= GRAD_L2_ORACLE_REL, worst, GRAD_L2_ORACLE_REL, "manufactured field")


def check_mach_cone(config: ProblemConfig, **_) -> VerifyRow:
    """Q vanishes at the freestream Mach-cone conormals; the generators carry |grad Phi|^2 - c^2."""
    v = config.v3inf
    freestream = np.array([0.0, 0.0, v])
    worst = 0.0
    for angle in np.linspace(0.0, 2.0 * math.pi, 37):
        worst = max(worst, abs(characteristic_form(mach_cone_conormal(v, angle), freestream)))
        generator = mach_cone_generator(v, angle)
        worst = max(worst, abs(freestream @ freestream - (freestream @ generator) ** 2 - (v * v - 1.0)))
    return VerifyRow("mach_cone", worst <= IDENTITY_TOL * v * v, worst, IDENTITY_TOL * v * v, "37 angles")


def check_potential_3d(config: ProblemConfig, domain: Domain, rng: np.random.Generator, **_) -> VerifyRow:
    """The 3-D potential operator of x3 phi(x/x3) equals the conical residual at mu=1."""
    points = _random_points(domain, rng, VERIFY_RANDOM_POINTS)
    worst = 0.0
    for xi in points:
        phi = config.v3inf * rng.uniform(0.8, 1.2)
        grad = rng.uniform(-1.0, 1.0, size=2)
        sym = rng.uniform(-1.0, 1.0, size=(2, 2))
        hess = 0.5 * (sym + sym.T)
        grad3, hess3 = conical_to_3d(phi, grad, hess, xi)
        expected = float(interior_residual(1.0, phi, grad, hess, xi))
        scale = 1.0 + (grad3 @ grad3) * float(np.max(np.abs(hess3)))
        worst = max(worst, abs(potential_operator_3d(grad3, hess3) - expected) / scale)
    return VerifyRow("potential_3d", worst <= IDENTITY_TOL, worst, IDENTITY_TOL, f"{VERIFY_RANDOM_POINTS} states")


def check_s_monotone(domain: Domain, rng: np.random.Generator, **_) -> VerifyRow:
    """The s-form residual does not increase with s when D s and D^2 s are frozen."""
    points = _random_points(domain, rng, MONOTONE_STATES)
    grad = rng.uniform(-1.0, 1.0, size=(MONOTONE_STATES, 2))
    sym = rng.uniform(-1.0, 1.0, size=(MONOTONE_STATES, 2, 2))
    hess = 0.5 * (sym + np.swapaxes(sym, -1, -2))
    mu = rng.uniform(0.0, 1.0, size=MONOTONE_STATES)
    s = rng.uniform(0.05, 3.0, size=MONOTONE_STATES)
    larger = s + rng.uniform(1e-3, 1.0, size=MONOTONE_STATES)
    low = s_interior_residual(mu, s, grad, hess, points)
    high = s_interior_residual(mu, larger, grad, hess, points)
    increase = float(np.max((high - low) / (1.0 + np.abs(low))))
    return VerifyRow("s_monotone", increase <= MONOTONE_ROUNDING, increase, MONOTONE_ROUNDING,
                     f"{MONOTONE_STATES} frozen states")


CHECKS: List[Callable[..., VerifyRow]] = [
    check_sigma_inf,
    check_domain,
    check_linear_annihilation,
    check_round_trips,
    check_grad_L2_oracle,
    check_mach_cone,
    check_potential_3d,
    check_s_monotone,
]


def run_verify(config: ProblemConfig, seed: int = 0) -> List[VerifyRow]:
    """
    Runs every solver-free check.

    A check that raises is reported as failed with the error in its note.

    Args:
        config (ProblemConfig): angles, speed and grid.
        seed (int): seed of the random samples.

    Returns:
        List[VerifyRow]: one row per check, in a fixed order.
    """
    rng = np.random.default_rng(seed)
    domain = build_domain(config)
    mesh = build_mesh(domain, config.n_u, config.n_v)
    rows = []
    for check in CHECKS:
        name = check.__name__[len("check_"):]
        try:
            row = check(config=config, domain=domain, mesh=mesh, rng=rng)
        except ChaplyginError as e:
            row = VerifyRow(name, False, math.nan, math.nan, f"{type(e).__name__}: {e}")
        logger.debug("verify %s: %s", row.name, row)
        rows.append(row)
    return rows


def format_table(rows: List[VerifyRow]) -> str:
    lines = [f"{'check':<22}{'result':<8}{'value':>14}{'threshold':>14}  note"]
    for row in rows:
        lines.append(f"{row.name:<22}{'pass' if row.passed else 'FAIL':<8}{row.value:>14.4e}{row.threshold:>14.4e}"
                     f"  {row.note}")
    return "\n".join(lines)
