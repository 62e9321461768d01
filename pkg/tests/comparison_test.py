"""
Tests for the comparison functions and envelopes.

Tests:
- test_psi_eta: values and shapes for one and many eta
- test_psi_lift: eps at the psi level
- test_classify_super: a tilted fast member is a super-solution
- test_classify_freestream_neither: the freestream itself is neither
- test_classify_inadmissible: |eta| <= 1 is rejected
- test_classify_too_few_samples: fewer than 16 samples per side is rejected
- test_sub_member: members built at interior points are sub-solutions above the lifted cone value there
- test_default_family_roles: the default family has both roles
- test_tight_super_family: members approach the lifted cone speed and belong to the default family
- test_envelope_default: lower <= upper and delta0 > 0 on the standard wing
- test_envelope_explicit_family: envelope of a two-member family
- test_envelope_empty_family: a family without sub members raises EmptyFamily
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from modules.comparison import (NEITHER, SUB, SUPER, classify_eta,
                                classify_family, default_eta_family,
                                envelope, psi_eta, psi_lift, sub_member,
                                tight_super_family)
from modules.errors import BadParameter, EmptyFamily, InadmissibleEta

from .small_problem import V3INF, small_mesh, standard_domain

EPS = 0.05
TILTED = np.array([0.1, -0.1, 2.0 * V3INF])


def test_psi_eta():
    """
    Test psi = eta . x / |x| at the origin and the output shapes.
    """
    points = np.array([[0.0, 0.0], [-1.0, 0.0]])
    assert_allclose(psi_eta([0.0, 0.0, 2.0], points), [2.0, math.sqrt(2.0)])
    many = psi_eta(np.array([[0.0, 0.0, 2.0], [1.0, 0.0, 1.0]]), points)
    assert many.shape == (2, 2)
    assert many[1, 1] == pytest.approx(0.0)


def test_psi_lift():
    """
    Test that the psi-level lift is eps / v3inf.
    """
    assert psi_lift(standard_domain(), 0.1) == pytest.approx(0.05)


def test_classify_super():
    """
    Test that (0.1, -0.1, 4) is a super-solution of the standard wing.
    """
    assert classify_eta(TILTED, standard_domain(), psi_lift(standard_domain(), EPS)) == SUPER


def test_classify_freestream_neither():
    """
    Test that (0, 0, v3inf) equals the cone data and has zero symmetry derivatives, so it is neither.
    """
    assert classify_eta([0.0, 0.0, V3INF], standard_domain(), 0.0) == NEITHER


def test_classify_inadmissible():
    """
    Test that |eta| <= 1 raises InadmissibleEta.
    """
    with pytest.raises(InadmissibleEta):
        classify_eta([0.0, 0.0, 0.5], standard_domain(), 0.0)


def test_classify_too_few_samples():
    """
    Test that n_samples below 16 raises BadParameter.
    """
    with pytest.raises(BadParameter):
        classify_family(TILTED[None, :], standard_domain(), 0.0, n_samples=8)


def test_sub_member():
    """
    Test that sub members at interior points classify as sub and exceed 1 + eps at their point.
    """
    domain = standard_domain()
    eps_psi = psi_lift(domain, EPS)
    points = np.array([[-1.0, 0.3], [-0.9, 0.9], [-1.5, 0.2], [-0.3, 1.2]])
    members = sub_member(domain, points, eps_psi)
    roles = classify_family(members, domain, eps_psi)
    assert list(roles) == [SUB] * len(points)
    for point, eta in zip(points, members):
        assert float(psi_eta(eta, point[None, :])[0]) > 1.0 + eps_psi


def test_default_family_roles():
    """
    Test that the default family contains sub and super members and nothing inadmissible.
    """
    domain = standard_domain()
    family = default_eta_family(domain, EPS, small_mesh(17))
    assert np.all(np.einsum("ij,ij->i", family, family) > 1.0)
    roles = classify_family(family, domain, psi_lift(domain, EPS))
    assert np.any(roles == SUB)
    assert np.any(roles == SUPER)


def test_tight_super_family():
    """
    Test the (delta, -delta, v3inf + eps + 2 delta R) members and their presence in the default family.
    """
    domain = standard_domain()
    family = tight_super_family(domain, EPS)
    delta = family[:, 0]
    assert np.all(delta > 0.0)
    assert_allclose(family[:, 1], -delta)
    assert_allclose(family[:, 2], V3INF + EPS + 2.0 * delta * math.sqrt(3.0))
    default = default_eta_family(domain, EPS, small_mesh(17))
    assert_allclose(default[-len(family):], family)


def test_envelope_default():
    """
    Test that the default envelope is ordered, positive in the interior band and lifted on the cone.
    """
    domain = standard_domain()
    mesh = small_mesh(17)
    result = envelope(domain, EPS, None, mesh)
    assert np.all(result.lower.values <= result.upper.values + 1e-12)
    assert result.delta0 > 0.0
    assert mesh.flat_tags[result.delta0_node] == 0
    cone = mesh.mask(1, 5, 6)
    q = np.sqrt(1.0 + np.sum(mesh.points[cone] ** 2, axis=-1))
    assert np.all(result.lower.values[cone] < q * (1.0 + psi_lift(domain, EPS)))
    assert np.all(result.upper.values[cone] > q * (1.0 + psi_lift(domain, EPS)))
    assert result.lower.kind == "lower"
    assert result.upper.eps == EPS


def test_envelope_explicit_family():
    """
    Test that a family of one super and one sub member gives exactly their conical values.
    """
    domain = standard_domain()
    mesh = small_mesh(17)
    sub = sub_member(domain, np.array([[-1.0, 0.3]]), psi_lift(domain, EPS))[0]
    result = envelope(domain, EPS, [TILTED, sub], mesh)
    q = np.sqrt(1.0 + np.sum(mesh.points ** 2, axis=-1))
    assert_allclose(result.upper.values, q * psi_eta(TILTED, mesh.points), rtol=1e-14)
    assert_allclose(result.lower.values, q * psi_eta(sub, mesh.points), rtol=1e-14)
    assert len(result.sub) == 1
    assert len(result.super) == 1


def test_envelope_empty_family():
    """
    Test that a family with only super members raises EmptyFamily.
    """
    with pytest.raises(EmptyFamily):
        envelope(standard_domain(), EPS, [TILTED], small_mesh(17))
