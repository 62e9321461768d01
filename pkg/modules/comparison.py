"""
Comparison functions built from the exact linear solutions.

Every 3-vector eta with |eta| > 1 gives an exact solution Phi = eta . x of the potential equation; on
the unit sphere it reads psi_eta = eta . x / |x|, and in conical form phi_eta = q psi_eta with
q = sqrt(1+|xi|^2). Classified against the boundary conditions, such vectors bound the solution from
above (super) and below (sub). On the cone the solution satisfies phi = q + eps, that is
psi = 1 + eps / v3inf, so comparisons at the psi level use that lift.

Classes:
- EtaSolution: a vector eta with its classification.
- Envelope: lower and upper envelopes on a mesh with the interior margin delta0.

Functions:
- psi_eta: psi of one or many eta at given points.
- classify_eta / classify_family: super, sub or neither, by sampling the defining inequalities.
- psi_lift: eps at the psi level.
- sub_family, super_family, tight_super_family, default_eta_family: candidate families.
- envelope: envelopes of a classified family on a mesh.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from modules.consts import (DEFAULT_ETA_SAMPLES, INTERIOR_BAND,
                            SUB_FAMILY_GRID, SUPER_FAMILY_DELTAS,
                            SUPER_FAMILY_SPEED_FACTORS,
                            TIGHT_SUPER_FAMILY_DELTAS)
from modules.errors import BadParameter, EmptyFamily, InadmissibleEta
from modules.geometry import (CONE, PY, SY1, SY2, Domain, boundary_points,
                              wing_normal_3d)
from modules.mesh import INTERIOR, Mesh, ScalarField, build_mesh

logger = logging.getLogger(__name__)

SUPER = "super"
SUB = "sub"
NEITHER = "neither"

MIN_SAMPLES = 16
# members processed per block when evaluating envelopes
ENVELOPE_BLOCK = 256


@dataclass(frozen=True)
class EtaSolution:
    """
    Attributes:
        eta (np.ndarray): the 3-vector.
        role (str): super, sub or neither relative to the (Domain, eps) it was classified for.
    """
    eta: np.ndarray
    role: str


@dataclass(frozen=True)
class Envelope:
    """
    Attributes:
        lower (ScalarField): q times the max of psi over the sub-solutions.
        upper (ScalarField): q times the min of psi over the super-solutions.
        delta0 (float): min over the interior band of lower/q - (1 + eps/v3inf).
        delta0_node (int): flat index where delta0 is attained.
        sub (List[np.ndarray]): the sub-solutions used.
        super (List[np.ndarray]): the super-solutions used.
    """
    lower: ScalarField
    upper: ScalarField
    delta0: float
    delta0_node: int
    sub: List[np.ndarray]
    super: List[np.ndarray]


def psi_lift(domain: Domain, eps: float) -> float:
    """eps at the psi level, eps / v3inf: the cone value of psi is 1 + eps / v3inf."""
    return eps / domain.v3inf


def _directions(points: np.ndarray) -> np.ndarray:
    x = np.concatenate([points, np.ones(points.shape[:-1] + (1,))], axis=-1)
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def psi_eta(etas, points) -> np.ndarray:
    """
    psi = eta . x / |x| with x = (xi, 1).

    Args:
        etas: shape (3,) or (m, 3).
        points: shape (n, 2).

    Returns:
        np.ndarray: shape (n,) or (n, m).
    """
    return _directions(np.asarray(points, dtype=float)) @ np.asarray(etas, dtype=float).T


def _normal_derivatives(etas: np.ndarray, points: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """Outward normal derivative of psi_eta at (xi, 1), grad psi = eta/|x| - (eta.x) x / |x|^3."""
    x = np.concatenate([points, np.ones((len(points), 1))], axis=-1)
    r = np.linalg.norm(x, axis=-1)
    n_hat = normal / np.linalg.norm(normal)
    eta_n = etas @ n_hat
    eta_x = x @ etas.T
    x_n = x @ n_hat
    return eta_n[None, :] / r[:, None] - eta_x * (x_n / r ** 3)[:, None]


def classify_family(etas, domain: Domain, eps: float, n_samples: int = DEFAULT_ETA_SAMPLES) -> np.ndarray:
    """
    Vectorized classify_eta.

    Args:
        etas: shape (m, 3), every row with |eta|^2 > 1.
        domain (Domain): the flow region.
        eps (float): lift of the cone value of psi, psi = 1 + eps there.
        n_samples (int): samples per boundary piece, >= 16.

    Returns:
        np.ndarray: array of role strings, length m.
    """
    etas = np.atleast_2d(np.asarray(etas, dtype=float))
    if n_samples < MIN_SAMPLES:
        raise BadParameter(f"need at least {MIN_SAMPLES} samples per boundary piece, got {n_samples}")
    norms = np.einsum("ij,ij->i", etas, etas)
    if np.any(norms <= 1.0):
        raise InadmissibleEta(f"|eta|^2 = {float(norms.min()):.6g} must exceed 1")

    t = np.linspace(0.0, 1.0, n_samples)
    cone_psi = psi_eta(etas, boundary_points(domain, CONE, t))

    normals = {
        PY: wing_normal_3d(domain),
        SY1: np.array([1.0, 0.0, 0.0]),
        SY2: np.array([0.0, -1.0, 0.0]),
    }
    derivatives = np.concatenate(
        [_normal_derivatives(etas, boundary_points(domain, side, t), normal) for side, normal in normals.items()])

    level = 1.0 + eps
    is_super = np.all(cone_psi > level, axis=0) & np.all(derivatives > 0.0, axis=0)
    is_sub = np.all(cone_psi < level, axis=0) & np.all(derivatives < 0.0, axis=0)
    return np.where(is_super, SUPER, np.where(is_sub, SUB, NEITHER))


def classify_eta(eta, domain: Domain, eps: float, n_samples: int = DEFAULT_ETA_SAMPLES) -> str:
    """
    Classifies psi_eta = eta . x / |x| against the boundary conditions.

    super iff psi_eta > 1 + eps at every cone sample and its outward normal derivative is positive
    at every sample of the wing edge and both symmetry lines; sub iff the reverse inequalities hold;
    neither otherwise.

    Args:
        eta: 3-vector with |eta|^2 > 1.
        domain (Domain): the flow region.
        eps (float): lift of the cone value of psi.
        n_samples (int): samples per boundary piece, >= 16.

    Returns:
        str: "super", "sub" or "neither".

    Raises:
        InadmissibleEta: if |eta|^2 <= 1.
    """
    return str(classify_family(np.asarray(eta, dtype=float)[None, :], domain, eps, n_samples)[0])


def sub_member(domain: Domain, xi_star, eps_psi: float) -> np.ndarray:
    """
    Sub-solution pointing at xi_star.

    With d = (xi_star, 1)/|.| and kappa = max over the cone arc of d . x/|x|, the member is
    eta = (1 + eps)(1 + kappa)/(2 kappa) d: its cone values stay below (1 + eps)(1 + kappa)/2 < 1 + eps
    and psi at xi_star exceeds 1 + eps by (1 + eps)(1 - kappa)/(2 kappa).
    """
    d = _directions(np.asarray(xi_star, dtype=float))
    # the arc maximum of d12 . xi is R |d12| since xi_star lies in the quadrant of the arc
    kappa = (domain.mach_radius * np.linalg.norm(d[..., :2], axis=-1) + d[..., 2]) / domain.v3inf
    scale = (1.0 + eps_psi) * (1.0 + kappa) / (2.0 * kappa)
    return scale[..., None] * d


def sub_family(domain: Domain, eps_psi: float, mesh: Optional[Mesh] = None) -> np.ndarray:
    """
    Sub-solution candidates: a 9x9 grid of interior points, plus one member per interior-band node
    of the mesh when one is given.
    """
    grid_mesh = build_mesh(domain, SUB_FAMILY_GRID + 2, SUB_FAMILY_GRID + 2)
    points = [grid_mesh.nodes[1:-1, 1:-1].reshape(-1, 2)]
    if mesh is not None:
        band = (mesh.flat_tags == INTERIOR) & (mesh.cone_distance() >= INTERIOR_BAND - 1e-12)
        points.append(mesh.points[band])
    return sub_member(domain, np.concatenate(points), eps_psi)


def super_family(domain: Domain, eps: float) -> np.ndarray:
    """(delta, -delta, M) for delta in {0.05, 0.1, 0.2} and M in {2 v3inf, 4 v3inf}."""
    v = domain.v3inf
    return np.array([[delta, -delta, factor * v]
                     for delta in SUPER_FAMILY_DELTAS for factor in SUPER_FAMILY_SPEED_FACTORS])


def tight_super_family(domain: Domain, eps: float) -> np.ndarray:
    """
    (delta, -delta, v3inf + eps + 2 delta R) for small delta; upper approaches the lifted cone data
    v3inf + eps on the cone as delta shrinks.
    """
    v = domain.v3inf
    radius = domain.mach_radius
    return np.array([[delta, -delta, v + eps + 2.0 * delta * radius] for delta in TIGHT_SUPER_FAMILY_DELTAS])


def default_eta_family(domain: Domain, eps: float, mesh: Optional[Mesh] = None) -> np.ndarray:
    """
    All default candidates for a phi-level lift eps, unclassified.

    Returns:
        np.ndarray: shape (m, 3).
    """
    return np.concatenate([
        sub_family(domain, psi_lift(domain, eps), mesh),
        super_family(domain, eps),
        tight_super_family(domain, eps),
    ])


def envelope(domain: Domain, eps: float, eta_family: Optional[Sequence], mesh: Mesh,
             n_samples: int = DEFAULT_ETA_SAMPLES) -> Envelope:
    """
    Lower and upper envelopes of a classified family.

    Args:
        domain (Domain): the flow region.
        eps (float): phi-level lift of the cone data.
        eta_family: candidate vectors, or None for default_eta_family.
        mesh (Mesh): nodes to evaluate on.
        n_samples (int): samples per boundary piece for the classification.

    Returns:
        Envelope: lower, upper, delta0 and the members used.

    Raises:
        EmptyFamily: if no sub or no super member survives classification.
    """
    if eta_family is None:
        eta_family = default_eta_family(domain, eps, mesh)
    etas = np.atleast_2d(np.asarray(eta_family, dtype=float))
    eps_psi = psi_lift(domain, eps)
    roles = classify_family(etas, domain, eps_psi, n_samples)
    subs = etas[roles == SUB]
    supers = etas[roles == SUPER]
    logger.debug("eta family: %d sub, %d super, %d neither", len(subs), len(supers), int(np.sum(roles == NEITHER)))
    if len(subs) == 0 or len(supers) == 0:
        raise EmptyFamily(f"family has {len(subs)} sub and {len(supers)} super members, both are needed")

    directions = _directions(mesh.points)
    q = np.sqrt(1.0 + np.sum(mesh.points ** 2, axis=-1))
    lower_psi = np.full(len(q), -np.inf)
    for start in range(0, len(subs), ENVELOPE_BLOCK):
        block = directions @ subs[start:start + ENVELOPE_BLOCK].T
        lower_psi = np.maximum(lower_psi, block.max(axis=1))
    upper_psi = (directions @ supers.T).min(axis=1)

    band = (mesh.flat_tags == INTERIOR) & (mesh.cone_distance() >= INTERIOR_BAND - 1e-12)
    margins = np.where(band, lower_psi - (1.0 + eps_psi), np.inf)
    node = int(np.argmin(margins))
    delta0 = float(margins[node]) if np.any(band) else math.nan

    return Envelope(
        lower=ScalarField(mesh, q * lower_psi, eps=eps, kind="lower"),
        upper=ScalarField(mesh, q * upper_psi, eps=eps, kind="upper"),
        delta0=delta0,
        delta0_node=node,
        sub=list(subs),
        super=list(supers),
    )
