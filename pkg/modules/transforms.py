"""
Changes of variables used by the solver and its checks.

Functions:
- s_transform: phi <-> s with phi = sqrt(1+|xi|^2) cosh s.
- spherical_lift / spherical_unlift: (xi, phi) <-> (angles, psi) with Phi = r psi on the unit sphere.
- hat_rotation: rotation about the x2 axis that brings the P3 ray onto the x3 axis.
- hat_transform / hat_inverse: conical coordinates and potential in the rotated frame.
"""

import math
from typing import Tuple

import numpy as np

from modules.errors import BadParameter, BehindApex, DegenerateValue

TO_S = "to_s"
FROM_S = "from_s"


def _q(xi: np.ndarray) -> np.ndarray:
    return np.sqrt(1.0 + np.sum(xi * xi, axis=-1))


def s_transform(phi, xi, direction: str):
    """
    Converts between phi and s, phi = sqrt(1+|xi|^2) cosh s.

    Args:
        phi: phi values for to_s, s values for from_s.
        xi: point(s), shape (..., 2).
        direction (str): "to_s" or "from_s".

    Returns:
        s for to_s (strictly positive), phi for from_s.

    Raises:
        DegenerateValue: in to_s, if phi <= sqrt(1+|xi|^2) anywhere.
    """
    value = np.asarray(phi, dtype=float)
    q = _q(np.asarray(xi, dtype=float))
    if direction == TO_S:
        ratio = value / q
        if np.any(ratio <= 1.0):
            raise DegenerateValue("phi must exceed sqrt(1+|xi|^2) for s to be defined")
        return np.arccosh(ratio)
    if direction == FROM_S:
        return q * np.cosh(value)
    raise BadParameter(f"direction must be {TO_S!r} or {FROM_S!r}, got {direction!r}")


def spherical_lift(xi, phi) -> Tuple[Tuple[float, float], float]:
    """
    Lifts a conical state to the unit sphere.

    With x = (xi1, xi2, 1) and r = |x|: psi = phi / r, theta = arccos(x1 / r), and varphi the polar
    angle of (x2, x3).

    Returns:
        tuple: ((theta, varphi), psi).
    """
    xi1, xi2 = float(xi[0]), float(xi[1])
    r = math.sqrt(1.0 + xi1 * xi1 + xi2 * xi2)
    theta = math.acos(xi1 / r)
    varphi = math.atan2(1.0, xi2)
    return (theta, varphi), float(phi) / r


def spherical_unlift(zeta, psi) -> Tuple[np.ndarray, float]:
    """
    Inverse of spherical_lift.

    Returns:
        tuple: (xi, phi).
    """
    theta, varphi = float(zeta[0]), float(zeta[1])
    x3 = math.sin(theta) * math.sin(varphi)
    if x3 <= 0.0:
        raise BehindApex(f"angles ({theta}, {varphi}) point away from the x3 > 0 half-space")
    xi = np.array([math.cos(theta) / x3, math.cos(varphi) / math.sin(varphi)])
    return xi, float(psi) / x3


def hat_rotation(sigma2: float) -> np.ndarray:
    """Rotation x -> x_hat about the x2 axis by sigma2, x_hat1 = x1 cos + x3 sin."""
    c, s = math.cos(sigma2), math.sin(sigma2)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def hat_transform(xi, phi, sigma2: float) -> Tuple[np.ndarray, float]:
    """
    Expresses a conical state in the rotated frame where P3 sits at the origin.

    Phi = x3 phi = x_hat3 phi_hat on each ray, so phi_hat = phi / x_hat3.

    Raises:
        BehindApex: if x_hat3 = -xi1 sin sigma2 + cos sigma2 <= 0.
    """
    x_hat = hat_rotation(sigma2) @ np.array([float(xi[0]), float(xi[1]), 1.0])
    if x_hat[2] <= 0.0:
        raise BehindApex(f"x_hat3 = {x_hat[2]:.6g} <= 0 for xi = {tuple(xi)}")
    return x_hat[:2] / x_hat[2], float(phi) / x_hat[2]


def hat_inverse(xi_hat, phi_hat, sigma2: float) -> Tuple[np.ndarray, float]:
    """
    Inverse of hat_transform.

    Raises:
        BehindApex: if the original x3 of the ray is <= 0.
    """
    x = hat_rotation(sigma2).T @ np.array([float(xi_hat[0]), float(xi_hat[1]), 1.0])
    if x[2] <= 0.0:
        raise BehindApex(f"x3 = {x[2]:.6g} <= 0 for xi_hat = {tuple(xi_hat)}")
    return x[:2] / x[2], float(phi_hat) / x[2]
