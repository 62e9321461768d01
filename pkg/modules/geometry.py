"""
Wing, Mach cone and self-similar domain in conical coordinates xi = (x1/x3, x2/x3).

The flow region is the quarter of the Mach disc |xi| <= R (R = sqrt(v^2-1)) cut off by the wing
edge Gamma_py. It has four sides: the cone arc P2->P1, the wing edge P3->P4 and the two symmetry
segments P3->P2 (sy2, on the x1 axis) and P4->P1 (sy1, on the x2 axis).

Classes:
- Domain: corner points, normals and the wing edge line.

Functions:
- critical_angle: the largest half-angle for which the shock stays detached.
- build_domain: Domain from a ProblemConfig.
- boundary_point: point on one of the four boundary pieces.
- boundary_points: vectorized boundary_point.
- contains: membership test with tolerance.
- on_side: whether a point lies on a given boundary piece.
- shock_cone_sample: points of the shock surface slice at x3 = 1.
- wing_normal_3d: the 3-D outward normal of the wing face.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, List, Tuple

import numpy as np

from modules.consts import BOUNDARY_TOL, ON_BOUNDARY_TOL
from modules.errors import AngleTooLarge, BadParameter, NonSupersonic

if TYPE_CHECKING:
    from modules.problem_config import ProblemConfig

CONE = "cone"
PY = "py"
SY1 = "sy1"
SY2 = "sy2"
SIDES = (CONE, PY, SY1, SY2)


def critical_angle(v3inf: float) -> float:
    """
    Half of the vertex angle of the Mach cone.

    Args:
        v3inf (float): freestream speed, > 1.

    Returns:
        float: arcsin(sqrt(v^2-1)/v), in (0, pi/2).

    Raises:
        NonSupersonic: if v3inf <= 1.
    """
    if not v3inf > 1:
        raise NonSupersonic(f"v3inf={v3inf} must exceed 1 (supersonic freestream)")
    return math.asin(math.sqrt(v3inf * v3inf - 1.0) / v3inf)


@dataclass(frozen=True)
class Domain:
    """
    The self-similar flow region.

    Attributes:
        sigma1 (float): half-angle of the wing in the x2 direction.
        sigma2 (float): half-angle of the wing in the x1 direction.
        v3inf (float): freestream speed.
        P1, P2, P3, P4 (np.ndarray): corner points (cone/sy1, cone/sy2, py/sy2, py/sy1).
        mach_radius (float): R = sqrt(v^2-1).
        nu_py, nu_sy1, nu_sy2 (np.ndarray): exterior normals, unnormalized.
        py_line (Tuple[float, float, float]): (a, b, c) with a xi1 + b xi2 + c = 0 on Gamma_py.
    """
    sigma1: float
    sigma2: float
    v3inf: float
    P1: np.ndarray
    P2: np.ndarray
    P3: np.ndarray
    P4: np.ndarray
    mach_radius: float
    nu_py: np.ndarray
    nu_sy1: np.ndarray
    nu_sy2: np.ndarray
    py_line: Tuple[float, float, float]

    @property
    def tan_sigma2(self) -> float:
        return math.tan(self.sigma2)

    def corners(self) -> List[np.ndarray]:
        return [self.P1, self.P2, self.P3, self.P4]


def _build_domain(sigma1: float, sigma2: float, v3inf: float) -> Domain:
    sigma_inf = critical_angle(v3inf)
    for name, sigma in (("sigma1", sigma1), ("sigma2", sigma2)):
        if not sigma > 0:
            raise BadParameter(f"{name}={sigma} must be positive")
        if sigma >= sigma_inf:
            raise AngleTooLarge(
                f"{name}={sigma:.7f} must be below sigma_inf={sigma_inf:.7f}, the shock would attach to the leading edges")

    radius = math.sqrt(v3inf * v3inf - 1.0)
    tan1 = math.tan(sigma1)
    tan2 = math.tan(sigma2)
    nu_py = np.array([1.0, -tan2 / tan1])

    return Domain(
        sigma1=sigma1,
        sigma2=sigma2,
        v3inf=v3inf,
        P1=np.array([0.0, radius]),
        P2=np.array([-radius, 0.0]),
        P3=np.array([-tan2, 0.0]),
        P4=np.array([0.0, tan1]),
        mach_radius=radius,
        nu_py=nu_py,
        nu_sy1=np.array([1.0, 0.0]),
        nu_sy2=np.array([0.0, -1.0]),
        py_line=(1.0, float(nu_py[1]), tan2),
    )


def build_domain(config: ProblemConfig) -> Domain:
    """
    Builds the flow region for a configuration.

    Args:
        config (ProblemConfig): wing angles and freestream speed.

    Returns:
        Domain: corners, normals and wing line.

    Raises:
        NonSupersonic: if v3inf <= 1.
        AngleTooLarge: if sigma1 or sigma2 >= sigma_inf.
    """
    return _build_domain(config.sigma1, config.sigma2, config.v3inf)


def domain_from_angles(sigma1: float, sigma2: float, v3inf: float) -> Domain:
    """Same as build_domain, without a full config."""
    return _build_domain(sigma1, sigma2, v3inf)


def boundary_points(domain: Domain, side: str, t: np.ndarray) -> np.ndarray:
    """
    Vectorized boundary_point.

    Args:
        domain (Domain): the flow region.
        side (str): one of cone, py, sy1, sy2.
        t (np.ndarray): parameters in [0, 1].

    Returns:
        np.ndarray: points, shape t.shape + (2,).
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0) or np.any(t > 1.0) or np.any(~np.isfinite(t)):
        raise BadParameter(f"boundary parameter must lie in [0, 1], got {t}")

    if side == CONE:
        theta = math.pi - t * (math.pi / 2)
        points = domain.mach_radius * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        # endpoints exact
        points = np.where((t == 0.0)[..., None], domain.P2, points)
        return np.where((t == 1.0)[..., None], domain.P1, points)

    if side == PY:
        start, end = domain.P3, domain.P4
    elif side == SY2:
        start, end = domain.P3, domain.P2
    elif side == SY1:
        start, end = domain.P4, domain.P1
    else:
        raise BadParameter(f"unknown boundary side {side!r}, expected one of {SIDES}")

    points = (1.0 - t)[..., None] * start + t[..., None] * end
    points = np.where((t == 0.0)[..., None], start, points)
    return np.where((t == 1.0)[..., None], end, points)


def boundary_point(domain: Domain, side: str, t: float) -> np.ndarray:
    """
    Point on a boundary piece.

    cone runs from P2 (t=0) to P1 (t=1) along |xi| = R, py from P3 to P4, sy2 from P3 to P2 and
    sy1 from P4 to P1. Endpoints are returned exactly.

    Args:
        domain (Domain): the flow region.
        side (str): one of cone, py, sy1, sy2.
        t (float): parameter in [0, 1].

    Returns:
        np.ndarray: the point.

    Raises:
        BadParameter: for t outside [0, 1] or an unknown side.
    """
    if not 0.0 <= t <= 1.0:
        raise BadParameter(f"boundary parameter must lie in [0, 1], got {t}")
    return boundary_points(domain, side, np.array(t))


def side_defect(domain: Domain, side: str, xi: np.ndarray) -> np.ndarray:
    """
    Violation of a side's defining equation, zero on the side.

    Args:
        domain (Domain): the flow region.
        side (str): one of cone, py, sy1, sy2.
        xi (np.ndarray): points, shape (..., 2).

    Returns:
        np.ndarray: absolute defect per point.
    """
    xi = np.asarray(xi, dtype=float)
    if side == CONE:
        return np.abs(np.hypot(xi[..., 0], xi[..., 1]) - domain.mach_radius)
    if side == PY:
        return np.abs(xi @ domain.nu_py + domain.tan_sigma2) / np.linalg.norm(domain.nu_py)
    if side == SY1:
        return np.abs(xi[..., 0])
    if side == SY2:
        return np.abs(xi[..., 1])
    raise BadParameter(f"unknown boundary side {side!r}, expected one of {SIDES}")


def on_side(domain: Domain, side: str, xi: np.ndarray, tol: float = ON_BOUNDARY_TOL) -> bool:
    """Whether every given point lies on the side within tol."""
    return bool(np.all(side_defect(domain, side, xi) <= tol))


def contains(domain: Domain, xi, tol: float = BOUNDARY_TOL) -> bool:
    """
    Membership in the closed flow region.

    Args:
        domain (Domain): the flow region.
        xi: point (xi1, xi2).
        tol (float): absolute tolerance in xi units.

    Returns:
        bool: True iff xi1 <= 0, xi2 >= 0, |xi| <= R and xi.nu_py + tan sigma2 <= 0, all within tol.
    """
    xi1, xi2 = float(xi[0]), float(xi[1])
    if xi1 > tol or xi2 < -tol:
        return False
    if math.hypot(xi1, xi2) > domain.mach_radius + tol:
        return False
    return xi1 * domain.nu_py[0] + xi2 * domain.nu_py[1] + domain.tan_sigma2 <= tol


def shock_cone_sample(config: ProblemConfig, n: int) -> np.ndarray:
    """
    Samples the shock surface at unit height.

    For a Chaplygin gas the detached shock is the Mach cone of the freestream, v^2 x3^2 = |x|^2.

    Args:
        config (ProblemConfig): provides v3inf.
        n (int): number of samples, >= 1. A single sample is the arc midpoint.

    Returns:
        np.ndarray: shape (n, 3), points (x1, x2, 1) with x1 <= 0, x2 >= 0.
    """
    if n < 1:
        raise BadParameter(f"need at least one shock sample, got {n}")
    radius = math.sqrt(config.v3inf ** 2 - 1.0)
    t = np.array([0.5]) if n == 1 else np.linspace(0.0, 1.0, n)
    theta = math.pi - t * (math.pi / 2)
    x1 = radius * np.cos(theta)
    x2 = radius * np.sin(theta)
    x1[t == 1.0] = 0.0
    x2[t == 0.0] = 0.0
    return np.stack([x1, x2, np.ones_like(t)], axis=-1)


def wing_normal_3d(domain: Domain) -> np.ndarray:
    """
    Outward normal of the wing face in physical space, (1, -cot s1 tan s2, tan s2).

    The conical point xi is in the region iff (xi, 1) . n_w <= 0.
    """
    return np.array([domain.nu_py[0], domain.nu_py[1], domain.tan_sigma2])
