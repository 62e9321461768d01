"""
Pointwise physics kernels for the conical potential equation.

All kernels take plain (value, gradient, Hessian, point) inputs and broadcast over leading array
dimensions: phi has shape (...), grad and xi shape (..., 2), hess shape (..., 2, 2). The same
kernels therefore serve manufactured-solution tests and the discrete solver.

Notation: q^2 = 1 + |xi|^2, chi = phi - grad.xi, c^2 = |grad|^2 + chi^2 - 1, w = grad - chi xi.
The mu-family operator is G(mu, phi) = c^2 (tr H + xi^T H xi) - mu w^T H w.

Classes:
- StateDerived: chi, c^2, L^2, density and pressure of a state.
- ResidualPartials: interior residual with its partial derivatives.
- PrincipalPart: principal coefficient matrix, eigenvalues and ellipticity flag.

Functions:
- derived_state, interior_residual, interior_residual_partials, principal_coefficients,
  mu_elliptic_threshold, boundary_residual, py_residual_rewritten, obliqueness, linear_exact,
  s_interior_residual, grad_L2, corner_gradients, characteristic_form, mach_cone_conormal,
  mach_cone_generator, conical_to_3d, potential_operator_3d
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from modules.consts import ON_BOUNDARY_TOL, UNIT_TOL
from modules.errors import (BadParameter, DegenerateValue, InadmissibleEta,
                            NotUnit, PointOffBoundary, SubsonicState)
from modules.geometry import CONE, PY, SY1, SY2, Domain, side_defect


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a * b, axis=-1)


def _quad(hess: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """a^T H b over the trailing axes."""
    return np.einsum("...i,...ij,...j->...", a, hess, b)


def _q2(xi: np.ndarray) -> np.ndarray:
    return 1.0 + _dot(xi, xi)


@dataclass(frozen=True)
class StateDerived:
    """
    Derived quantities of a state (phi, D phi) at xi.

    Attributes:
        chi: phi - D phi . xi
        c2: squared sound speed |D phi|^2 + chi^2 - 1
        L2: squared pseudo-Mach number, NaN where c2 <= 0
        rho: density sqrt(A)/sqrt(c2), NaN where c2 <= 0
        pressure: A (1/rho* - 1/rho), None unless rho* is given
        subsonic: True where c2 <= 0
    """
    chi: np.ndarray
    c2: np.ndarray
    L2: np.ndarray
    rho: np.ndarray
    pressure: Optional[np.ndarray]
    subsonic: np.ndarray


def derived_state(phi, grad, xi, A: float = 1.0, rho_star: Optional[float] = None) -> StateDerived:
    """
    Computes chi, c^2, L^2, rho and optionally the pressure.

    c2 <= 0 is reported through the subsonic flag, the caller decides whether that is a failure.

    Args:
        phi: potential value(s).
        grad: gradient(s), shape (..., 2).
        xi: point(s), shape (..., 2).
        A (float): Chaplygin constant.
        rho_star (Optional[float]): reference density, enables the pressure output.

    Returns:
        StateDerived: the derived state.
    """
    phi = np.asarray(phi, dtype=float)
    grad = np.asarray(grad, dtype=float)
    xi = np.asarray(xi, dtype=float)

    chi = phi - _dot(grad, xi)
    c2 = _dot(grad, grad) + chi * chi - 1.0
    subsonic = c2 <= 0.0
    safe_c2 = np.where(subsonic, 1.0, c2)
    L2 = np.where(subsonic, np.nan, 1.0 + (1.0 - phi * phi / _q2(xi)) / safe_c2)
    rho = np.where(subsonic, np.nan, math.sqrt(A) / np.sqrt(safe_c2))
    pressure = None
    if rho_star is not None:
        pressure = A * (1.0 / rho_star - 1.0 / rho)

    return StateDerived(chi=chi, c2=c2, L2=L2, rho=rho, pressure=pressure, subsonic=subsonic)


def interior_residual(mu, phi, grad, hess, xi) -> np.ndarray:
    """
    Evaluates G(mu, phi) = c^2 (lap phi + D^2 phi[xi, xi]) - mu D^2 phi[w, w].

    Args:
        mu: continuation parameter in [0, 1].
        phi, grad, hess, xi: the local state.

    Returns:
        np.ndarray: residual value(s).
    """
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    xi = np.asarray(xi, dtype=float)

    chi = np.asarray(phi, dtype=float) - _dot(grad, xi)
    c2 = _dot(grad, grad) + chi * chi - 1.0
    w = grad - chi[..., None] * xi
    trace_part = np.trace(hess, axis1=-2, axis2=-1) + _quad(hess, xi, xi)
    return c2 * trace_part - mu * _quad(hess, w, w)


@dataclass(frozen=True)
class ResidualPartials:
    """
    Interior residual and its partial derivatives in the local state.

    Attributes:
        value: G
        d_phi: dG/d phi
        d_grad: dG/d(D phi), shape (..., 2)
        d_hess: dG/d(H11, H12, H22), shape (..., 3); the H12 entry accounts for both H12 and H21
    """
    value: np.ndarray
    d_phi: np.ndarray
    d_grad: np.ndarray
    d_hess: np.ndarray


def interior_residual_partials(mu, phi, grad, hess, xi) -> ResidualPartials:
    """
    Closed-form derivatives of interior_residual, used for the analytic Newton Jacobian.

    With S = tr H + xi^T H xi:
    dG/dphi = 2 chi S + 2 mu (H w).xi,
    dG/dp = 2 w S - 2 mu (H w + xi (xi . H w)),
    dG/dH11 = c^2 (1 + xi1^2) - mu w1^2, dG/dH22 likewise, dG/dH12 = 2 (c^2 xi1 xi2 - mu w1 w2).
    """
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    xi = np.asarray(xi, dtype=float)

    chi = np.asarray(phi, dtype=float) - _dot(grad, xi)
    c2 = _dot(grad, grad) + chi * chi - 1.0
    w = grad - chi[..., None] * xi
    S = np.trace(hess, axis1=-2, axis2=-1) + _quad(hess, xi, xi)
    Hw = np.einsum("...ij,...j->...i", hess, w)
    xi_Hw = _dot(xi, Hw)

    value = c2 * S - mu * _dot(w, Hw)
    d_phi = 2.0 * chi * S + 2.0 * mu * xi_Hw
    d_grad = 2.0 * w * S[..., None] - 2.0 * mu * (Hw + xi * xi_Hw[..., None])
    d_hess = np.stack([
        c2 * (1.0 + xi[..., 0] ** 2) - mu * w[..., 0] ** 2,
        2.0 * (c2 * xi[..., 0] * xi[..., 1] - mu * w[..., 0] * w[..., 1]),
        c2 * (1.0 + xi[..., 1] ** 2) - mu * w[..., 1] ** 2,
    ], axis=-1)
    return ResidualPartials(value=value, d_phi=d_phi, d_grad=d_grad, d_hess=d_hess)


@dataclass(frozen=True)
class PrincipalPart:
    """
    Attributes:
        matrix: a = c^2 (I + xi xi^T) - mu w w^T, shape (..., 2, 2)
        eigenvalues: ascending, shape (..., 2)
        elliptic: smallest eigenvalue > 0
    """
    matrix: np.ndarray
    eigenvalues: np.ndarray
    elliptic: np.ndarray


def principal_coefficients(mu, phi, grad, xi) -> PrincipalPart:
    """
    Principal coefficients a_ij of G(mu, .), so that sum a_ij H_ij is its second-order part.

    Args:
        mu: continuation parameter.
        phi, grad, xi: the local state.

    Returns:
        PrincipalPart: matrix, ascending eigenvalues and ellipticity flag.
    """
    grad = np.asarray(grad, dtype=float)
    xi = np.asarray(xi, dtype=float)

    chi = np.asarray(phi, dtype=float) - _dot(grad, xi)
    c2 = _dot(grad, grad) + chi * chi - 1.0
    w = grad - chi[..., None] * xi
    eye = np.eye(2)
    matrix = c2[..., None, None] * (eye + xi[..., :, None] * xi[..., None, :]) \
        - mu * w[..., :, None] * w[..., None, :]
    eigenvalues = np.linalg.eigvalsh(matrix)
    return PrincipalPart(matrix=matrix, eigenvalues=eigenvalues, elliptic=eigenvalues[..., 0] > 0)


def mu_elliptic_threshold(mu: float, xi, c2) -> np.ndarray:
    """
    Value phi must exceed for G(mu, .) to be elliptic at a state with sound speed c2 > 0.

    The principal part is positive definite iff mu L^2 < 1, i.e. phi^2 > q^2 (1 + (mu - 1) c^2 / mu).
    For mu = 0 every state with c2 > 0 is elliptic and the threshold is -inf.
    """
    c2 = np.asarray(c2, dtype=float)
    q2 = _q2(np.asarray(xi, dtype=float))
    if mu <= 0:
        return np.full(np.broadcast(q2, c2).shape, -np.inf)
    return np.sqrt(np.maximum(q2 * (1.0 + (mu - 1.0) * c2 / mu), 0.0))


def _check_on_side(domain: Domain, side: str, xi: np.ndarray):
    defect = side_defect(domain, side, xi)
    if np.any(defect > ON_BOUNDARY_TOL):
        worst = float(np.max(defect))
        raise PointOffBoundary(f"point is {worst:.3g} off the {side} boundary")


def boundary_residual(side: str, eps: float, phi, grad, xi, domain: Domain) -> np.ndarray:
    """
    Boundary condition residuals.

    cone: phi - sqrt(1+|xi|^2) - eps; py: D phi . nu_py + chi tan sigma2; sy1: D phi . (1, 0);
    sy2: D phi . (0, -1).

    Raises:
        PointOffBoundary: if xi is more than 1e-10 off the named side.
    """
    phi = np.asarray(phi, dtype=float)
    grad = np.asarray(grad, dtype=float)
    xi = np.asarray(xi, dtype=float)
    _check_on_side(domain, side, xi)

    if side == CONE:
        return phi - np.sqrt(_q2(xi)) - eps
    if side == PY:
        chi = phi - _dot(grad, xi)
        return _dot(grad, domain.nu_py) + chi * domain.tan_sigma2
    if side == SY1:
        return _dot(grad, domain.nu_sy1)
    if side == SY2:
        return _dot(grad, domain.nu_sy2)
    raise BadParameter(f"unknown boundary side {side!r}")


def py_residual_rewritten(phi, grad, xi, domain: Domain) -> np.ndarray:
    """Wing-edge condition in the form D phi . (nu_py - tan sigma2 xi) + phi tan sigma2."""
    t = domain.tan_sigma2
    grad = np.asarray(grad, dtype=float)
    xi = np.asarray(xi, dtype=float)
    return _dot(grad, domain.nu_py - t * xi) + np.asarray(phi, dtype=float) * t


def obliqueness(domain: Domain) -> float:
    """
    |nu_py|^2 + tan^2 sigma2, the constant value of (nu_py - tan sigma2 xi) . nu_py on Gamma_py.
    """
    return float(_dot(domain.nu_py, domain.nu_py) + domain.tan_sigma2 ** 2)


def linear_exact(eta, xi) -> Tuple[np.ndarray, np.ndarray, float, float]:
    """
    The linear conical solution phi = eta1 xi1 + eta2 xi2 + eta3.

    Args:
        eta: 3-vector with |eta|^2 > 1.
        xi: point(s), shape (..., 2).

    Returns:
        tuple: (phi, grad, chi, c2) with grad broadcast to xi's shape.

    Raises:
        InadmissibleEta: if |eta|^2 <= 1.
    """
    eta = np.asarray(eta, dtype=float)
    norm2 = float(eta @ eta)
    if norm2 <= 1.0:
        raise InadmissibleEta(f"|eta|^2 = {norm2:.6g} must exceed 1")
    xi = np.asarray(xi, dtype=float)
    phi = xi @ eta[:2] + eta[2]
    grad = np.broadcast_to(eta[:2], xi.shape).copy()
    return phi, grad, float(eta[2]), norm2 - 1.0


def s_interior_residual(mu, s, grad_s, hess_s, xi) -> np.ndarray:
    """
    The equation in the variable s, phi = sqrt(1+|xi|^2) cosh s.

    With n = (1+|xi|^2)(|Ds|^2 + (Ds.xi)^2) and m = Ds + (Ds.xi) xi:
    (1+n)(lap s + D^2 s[xi,xi]) - mu (1+|xi|^2) D^2 s[m,m] + 2 (1+(1-mu) n) Ds.xi
    + (2+(1-mu) n)(1+n) / ((1+|xi|^2) tanh s).
    For phi above the cone data this equals G(mu, phi) / (q sinh^3 s).

    Raises:
        DegenerateValue: if s <= 0 anywhere.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0.0):
        raise DegenerateValue("s must be positive in the s-form equation")
    grad_s = np.asarray(grad_s, dtype=float)
    hess_s = np.asarray(hess_s, dtype=float)
    xi = np.asarray(xi, dtype=float)

    q2 = _q2(xi)
    ds_xi = _dot(grad_s, xi)
    n = q2 * (_dot(grad_s, grad_s) + ds_xi * ds_xi)
    m = grad_s + ds_xi[..., None] * xi
    trace_part = np.trace(hess_s, axis1=-2, axis2=-1) + _quad(hess_s, xi, xi)
    return (1.0 + n) * trace_part - mu * q2 * _quad(hess_s, m, m) \
        + 2.0 * (1.0 + (1.0 - mu) * n) * ds_xi \
        + (2.0 + (1.0 - mu) * n) * (1.0 + n) / (q2 * np.tanh(s))


def grad_L2(phi, grad, hess, xi) -> np.ndarray:
    """
    Gradient of the squared pseudo-Mach number.

    D(L^2) = (Dc^2/c^2)(1 - L^2) - [q^2 D(phi^2) - phi^2 D(|xi|^2)] / (q^4 c^2), with Dc^2 = 2 H w.

    Raises:
        SubsonicState: if c^2 <= 0 anywhere.
    """
    phi = np.asarray(phi, dtype=float)
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    xi = np.asarray(xi, dtype=float)

    chi = phi - _dot(grad, xi)
    c2 = _dot(grad, grad) + chi * chi - 1.0
    if np.any(c2 <= 0.0):
        raise SubsonicState("grad_L2 needs c^2 > 0")
    q2 = _q2(xi)
    L2 = 1.0 + (1.0 - phi * phi / q2) / c2
    w = grad - chi[..., None] * xi
    d_c2 = 2.0 * np.einsum("...ij,...j->...i", hess, w)
    d_ratio = (q2[..., None] * 2.0 * phi[..., None] * grad - (phi * phi)[..., None] * 2.0 * xi) \
        / (q2 * q2 * c2)[..., None]
    return d_c2 / c2[..., None] * (1.0 - L2)[..., None] - d_ratio


def corner_gradients(domain: Domain, phi_p3: float, phi_p4: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gradients forced at the wing corners by the two boundary conditions meeting there.

    At P3 (py and sy2): D phi = (phi tan s2 / (tan s2 xi1 - 1), 0) = (-phi sin(2 s2)/2, 0).
    At P4 (py and sy1): D phi = (0, phi / (cot s1 + xi2)) = (0, phi sin(2 s1)/2).

    Returns:
        tuple: (gradient at P3, gradient at P4).
    """
    t = domain.tan_sigma2
    at_p3 = np.array([phi_p3 * t / (t * domain.P3[0] - 1.0), 0.0])
    at_p4 = np.array([0.0, phi_p4 / (1.0 / math.tan(domain.sigma1) + domain.P4[1])])
    return at_p3, at_p4


def characteristic_form(kappa, grad_phi) -> float:
    """
    Q(kappa) = c^2 - (grad Phi . kappa)^2 with c^2 = |grad Phi|^2 - 1.

    Args:
        kappa: unit 3-vector.
        grad_phi: 3-D velocity.

    Raises:
        NotUnit: if |kappa| differs from 1 by more than 1e-12.
    """
    kappa = np.asarray(kappa, dtype=float)
    grad_phi = np.asarray(grad_phi, dtype=float)
    if abs(float(np.linalg.norm(kappa)) - 1.0) > UNIT_TOL:
        raise NotUnit(f"|kappa| = {np.linalg.norm(kappa):.15g} is not 1")
    return float(grad_phi @ grad_phi - 1.0 - (grad_phi @ kappa) ** 2)


def mach_cone_conormal(v3inf: float, angle: float) -> np.ndarray:
    """Unit conormal of the freestream Mach cone, a zero of Q for grad Phi = (0, 0, v)."""
    radius = math.sqrt(v3inf * v3inf - 1.0)
    return np.array([math.cos(angle), math.sin(angle), -radius]) / v3inf


def mach_cone_generator(v3inf: float, angle: float) -> np.ndarray:
    """Unit generator x/|x| of the freestream Mach cone, where |grad Phi|^2 - (grad Phi . x/|x|)^2 = c^2."""
    radius = math.sqrt(v3inf * v3inf - 1.0)
    return np.array([radius * math.cos(angle), radius * math.sin(angle), 1.0]) / v3inf


def conical_to_3d(phi, grad, hess, xi) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gradient and Hessian of Phi = x3 phi(x1/x3, x2/x3) at (xi, 1).

    Returns:
        tuple: (3-vector (D phi, chi), 3x3 Hessian).
    """
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    xi = np.asarray(xi, dtype=float)
    chi = float(phi - grad @ xi)
    h_xi = hess @ xi
    hess3 = np.empty((3, 3))
    hess3[:2, :2] = hess
    hess3[:2, 2] = -h_xi
    hess3[2, :2] = -h_xi
    hess3[2, 2] = xi @ h_xi
    return np.array([grad[0], grad[1], chi]), hess3


def potential_operator_3d(grad3, hess3) -> float:
    """Steady potential operator (|grad Phi|^2 - 1) lap Phi - grad Phi^T D^2 Phi grad Phi."""
    grad3 = np.asarray(grad3, dtype=float)
    hess3 = np.asarray(hess3, dtype=float)
    return float((grad3 @ grad3 - 1.0) * np.trace(hess3) - grad3 @ hess3 @ grad3)
