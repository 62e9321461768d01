"""
Tests for the changes of variables.

Tests:
- test_s_transform_values: phi <-> s at known points
- test_s_transform_degenerate: phi at or below the cone data has no s
- test_s_transform_bad_direction: unknown direction names are rejected
- test_spherical_lift: lift of the origin and inverse on random points
- test_spherical_unlift_behind_apex: angles with x3 <= 0 are rejected
- test_hat_transform_moves_p3_to_origin: the P3 ray becomes the x3 axis
- test_hat_inverse: inverse on random points of the region
- test_hat_transform_behind_apex: rays that leave the x3 > 0 side are rejected
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from modules.errors import BadParameter, BehindApex, DegenerateValue
from modules.transforms import (FROM_S, TO_S, hat_inverse, hat_rotation,
                                hat_transform, s_transform, spherical_lift,
                                spherical_unlift)

from .small_problem import SIGMA, standard_domain


def test_s_transform_values():
    """
    Test s = arccosh(phi/q) and its inverse at xi = 0 and at a point with q = 2.
    """
    assert float(s_transform(math.cosh(1.0), np.zeros(2), TO_S)) == pytest.approx(1.0, rel=1e-14)
    xi = np.array([-math.sqrt(3.0), 0.0])
    assert float(s_transform(0.5, xi, FROM_S)) == pytest.approx(2.0 * math.cosh(0.5))

    points = np.array([[-1.0, 0.2], [-0.3, 0.9], [-1.5, 0.1]])
    phi = np.array([2.0, 2.5, 3.0])
    s = s_transform(phi, points, TO_S)
    assert np.all(s > 0)
    assert_allclose(s_transform(s, points, FROM_S), phi, rtol=1e-14)


def test_s_transform_degenerate():
    """
    Test that phi = q raises DegenerateValue.
    """
    with pytest.raises(DegenerateValue):
        s_transform(1.0, np.zeros(2), TO_S)
    with pytest.raises(DegenerateValue):
        s_transform(np.array([2.0, 1.0]), np.zeros((2, 2)), TO_S)


def test_s_transform_bad_direction():
    """
    Test that a direction other than to_s or from_s raises BadParameter.
    """
    with pytest.raises(BadParameter):
        s_transform(2.0, np.zeros(2), "sideways")


def test_spherical_lift():
    """
    Test the lift of (0, 0) and that unlift inverts lift to 1e-13.
    """
    (theta, varphi), psi = spherical_lift([0.0, 0.0], 2.0)
    assert theta == pytest.approx(math.pi / 2)
    assert varphi == pytest.approx(math.pi / 2)
    assert psi == pytest.approx(2.0)

    rng = np.random.default_rng(5)
    for _ in range(20):
        xi = np.array([rng.uniform(-1.7, 0.0), rng.uniform(0.0, 1.7)])
        phi = rng.uniform(1.5, 3.0)
        zeta, psi = spherical_lift(xi, phi)
        back, phi_back = spherical_unlift(zeta, psi)
        assert_allclose(back, xi, atol=1e-13)
        assert phi_back == pytest.approx(phi, abs=1e-13)


def test_spherical_unlift_behind_apex():
    """
    Test that angles pointing into x3 < 0 raise BehindApex.
    """
    with pytest.raises(BehindApex):
        spherical_unlift((math.pi / 2, -math.pi / 2), 1.0)


def test_hat_transform_moves_p3_to_origin():
    """
    Test that P3 maps to xi_hat = 0 with phi_hat = phi cos sigma2, and that the rotation is orthogonal.
    """
    domain = standard_domain()
    xi_hat, phi_hat = hat_transform(domain.P3, 2.0, SIGMA)
    assert_allclose(xi_hat, [0.0, 0.0], atol=1e-15)
    assert phi_hat == pytest.approx(2.0 * math.cos(SIGMA))
    rotation = hat_rotation(SIGMA)
    assert_allclose(rotation @ rotation.T, np.eye(3), atol=1e-15)


def test_hat_inverse():
    """
    Test that hat_inverse undoes hat_transform on random points of the region.
    """
    rng = np.random.default_rng(9)
    for _ in range(20):
        xi = np.array([rng.uniform(-1.7, 0.0), rng.uniform(0.0, 1.7)])
        phi = rng.uniform(1.5, 3.0)
        xi_hat, phi_hat = hat_transform(xi, phi, SIGMA)
        back, phi_back = hat_inverse(xi_hat, phi_hat, SIGMA)
        assert_allclose(back, xi, atol=1e-13)
        assert phi_back == pytest.approx(phi, abs=1e-13)


def test_hat_transform_behind_apex():
    """
    Test that xi1 >= cot sigma2 leaves the rotated half-space and raises BehindApex.
    """
    with pytest.raises(BehindApex):
        hat_transform([2.0, 0.0], 1.0, SIGMA)
