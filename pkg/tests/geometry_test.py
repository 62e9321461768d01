"""
Tests for the domain geometry.

Tests:
- test_critical_angle: closed-form values of the critical angle
- test_critical_angle_subsonic: v3inf <= 1 is rejected
- test_standard_domain_corners: corners and normals of the standard wing
- test_asymmetric_domain_corners: corners for sigma2 = pi/4
- test_angle_too_large: sigma equal to the critical angle is rejected
- test_boundary_points_on_sides: sampled boundary points satisfy their side equations
- test_boundary_point_endpoints: endpoint conventions and the arc midpoint
- test_boundary_point_bad_parameter: t outside [0, 1] is rejected
- test_contains: membership examples and the four corners
- test_shock_cone_sample: shock samples lie on the Mach cone
- test_wing_normal_sign: interior points are on the negative side of the wing normal
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from modules.errors import AngleTooLarge, BadParameter, NonSupersonic
from modules.geometry import (CONE, PY, SY1, SY2, boundary_point,
                              boundary_points, contains, critical_angle,
                              domain_from_angles, on_side, shock_cone_sample,
                              side_defect, wing_normal_3d)
from modules.problem_config import ProblemConfig

from .small_problem import ROOT3, SIGMA, small_config, standard_domain


def test_critical_angle():
    """
    Test arcsin(sqrt(v^2-1)/v) at a few speeds.
    """
    assert critical_angle(2.0) == pytest.approx(math.pi / 3, abs=1e-12)
    assert critical_angle(math.sqrt(2.0)) == pytest.approx(math.pi / 4, abs=1e-12)


def test_critical_angle_subsonic():
    """
    Test that a freestream speed of at most 1 raises NonSupersonic.
    """
    with pytest.raises(NonSupersonic):
        critical_angle(1.0)
    with pytest.raises(NonSupersonic):
        critical_angle(0.5)


def test_standard_domain_corners():
    """
    Test the corners and normals for sigma1 = sigma2 = pi/6, v = 2.
    """
    domain = standard_domain()
    tan = math.tan(SIGMA)
    assert_allclose(domain.P1, [0.0, ROOT3], atol=1e-12)
    assert_allclose(domain.P2, [-ROOT3, 0.0], atol=1e-12)
    assert_allclose(domain.P3, [-tan, 0.0], atol=1e-12)
    assert_allclose(domain.P4, [0.0, tan], atol=1e-12)
    assert_allclose(domain.nu_py, [1.0, -1.0], atol=1e-12)
    assert_allclose(domain.nu_sy1, [1.0, 0.0])
    assert_allclose(domain.nu_sy2, [0.0, -1.0])
    assert domain.mach_radius == pytest.approx(ROOT3)

    for corner in (domain.P3, domain.P4):
        assert np.linalg.norm(corner) < domain.mach_radius
        assert on_side(domain, PY, corner, 1e-12)


def test_asymmetric_domain_corners():
    """
    Test the corners for sigma1 = pi/6, sigma2 = pi/4.
    """
    domain = domain_from_angles(math.pi / 6, math.pi / 4, 2.0)
    assert_allclose(domain.P3, [-1.0, 0.0], atol=1e-12)
    assert_allclose(domain.P4, [0.0, 0.5773502691896257], atol=1e-12)
    assert_allclose(domain.nu_py, [1.0, -ROOT3], atol=1e-12)


def test_angle_too_large():
    """
    Test that a half-angle equal to the critical angle raises AngleTooLarge naming sigma_inf.
    """
    with pytest.raises(AngleTooLarge, match="sigma_inf"):
        domain_from_angles(critical_angle(2.0), SIGMA, 2.0)


def test_boundary_points_on_sides():
    """
    Test that 100 sampled points of each side satisfy its equation to 1e-13.
    """
    domain = standard_domain()
    t = np.linspace(0.0, 1.0, 100)
    cone = boundary_points(domain, CONE, t)
    assert np.max(np.abs(np.sum(cone ** 2, axis=-1) - 3.0)) <= 1e-13
    py = boundary_points(domain, PY, t)
    assert np.max(np.abs(py @ domain.nu_py + domain.tan_sigma2)) <= 1e-13
    assert np.max(side_defect(domain, SY1, boundary_points(domain, SY1, t))) == 0.0
    assert np.max(side_defect(domain, SY2, boundary_points(domain, SY2, t))) == 0.0


def test_boundary_point_endpoints():
    """
    Test the endpoint conventions and the midpoint of the cone arc.
    """
    domain = standard_domain()
    assert_allclose(boundary_point(domain, CONE, 0.5), [-1.2247449, 1.2247449], atol=1e-7)
    assert_allclose(boundary_point(domain, PY, 1.0), [0.0, 0.5773503], atol=1e-7)
    assert np.array_equal(boundary_point(domain, SY2, 0.0), domain.P3)
    assert np.array_equal(boundary_point(domain, CONE, 0.0), domain.P2)
    assert np.array_equal(boundary_point(domain, CONE, 1.0), domain.P1)


def test_boundary_point_bad_parameter():
    """
    Test that parameters outside [0, 1] and unknown sides raise BadParameter.
    """
    domain = standard_domain()
    with pytest.raises(BadParameter):
        boundary_point(domain, PY, 1.5)
    with pytest.raises(BadParameter):
        boundary_point(domain, PY, -0.1)
    with pytest.raises(BadParameter):
        boundary_point(domain, "wing", 0.5)


def test_contains():
    """
    Test the membership examples and that every corner is contained.
    """
    domain = standard_domain()
    assert contains(domain, (-1.0, 0.3))
    assert not contains(domain, (0.0, 0.0))
    assert not contains(domain, (-2.0, 0.0))
    for corner in domain.corners():
        assert contains(domain, corner)


def test_shock_cone_sample():
    """
    Test the shock samples: endpoints for n = 2, unit radius for v = sqrt(2), cone equation for n = 5.
    """
    samples = shock_cone_sample(small_config(), 2)
    assert_allclose(samples[0], [-ROOT3, 0.0, 1.0], atol=1e-14)
    assert_allclose(samples[1], [0.0, ROOT3, 1.0], atol=1e-14)

    config = small_config()
    unit = shock_cone_sample(ProblemConfig(sigma1=0.3, sigma2=0.3, v3inf=math.sqrt(2.0)), 1)
    assert unit.shape == (1, 3)
    assert unit[0, 0] ** 2 + unit[0, 1] ** 2 == pytest.approx(1.0, abs=1e-14)

    five = shock_cone_sample(config, 5)
    assert_allclose(4.0 * five[:, 2] ** 2, np.sum(five ** 2, axis=-1), atol=1e-14)

    with pytest.raises(BadParameter):
        shock_cone_sample(config, 0)


def test_wing_normal_sign():
    """
    Test that (xi, 1) . n_w is negative inside the region and zero on the wing edge.
    """
    domain = standard_domain()
    normal = wing_normal_3d(domain)
    assert np.append([-1.0, 0.3], 1.0) @ normal < 0.0
    for t in np.linspace(0.0, 1.0, 7):
        point = boundary_point(domain, PY, t)
        assert np.append(point, 1.0) @ normal == pytest.approx(0.0, abs=1e-14)
