"""
Boundary-fitted structured mesh of the flow region.

The unit square (u, v) is mapped onto the region by transfinite interpolation of the four boundary
pieces: u=0 is the wing edge (P3 -> P4), u=1 the cone arc (P2 -> P1), v=0 the sy2 segment (P3 -> P2)
and v=1 the sy1 segment (P4 -> P1). Nodes are stored with shape (n_u, n_v, ...) and flattened in C
order, so node (i, j) has flat index i * n_v + j.

Classes:
- Mesh: nodes, analytic metrics of the map and boundary tags.
- ScalarField: nodal values on a Mesh with the (mu, eps) pair they solve.

Functions:
- build_mesh: transfinite mesh of a Domain.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from modules.errors import BadParameter, FoldedMesh
from modules.geometry import CONE, PY, SY1, SY2, Domain, boundary_points

logger = logging.getLogger(__name__)

INTERIOR = 0
TAG_CONE = 1
TAG_PY = 2
TAG_SY1 = 3
TAG_SY2 = 4
TAG_P1 = 5
TAG_P2 = 6
TAG_P3 = 7
TAG_P4 = 8

TAG_NAMES: Dict[int, str] = {
    INTERIOR: "interior",
    TAG_CONE: "cone",
    TAG_PY: "py",
    TAG_SY1: "sy1",
    TAG_SY2: "sy2",
    TAG_P1: "corner_P1",
    TAG_P2: "corner_P2",
    TAG_P3: "corner_P3",
    TAG_P4: "corner_P4",
}

MIN_NODES = 9


@dataclass(frozen=True, eq=False)
class Mesh:
    """
    Structured mesh over the flow region.

    Attributes:
        domain (Domain): the region the mesh covers.
        n_u (int): nodes across, from the wing edge (i=0) to the cone (i=n_u-1).
        n_v (int): nodes along, from sy2 (j=0) to sy1 (j=n_v-1).
        u (np.ndarray): mapped coordinate of each node, shape (n_u, n_v).
        v (np.ndarray): mapped coordinate of each node, shape (n_u, n_v).
        nodes (np.ndarray): conical coordinates, shape (n_u, n_v, 2).
        x_u (np.ndarray): d xi / du, shape (n_u, n_v, 2).
        x_v (np.ndarray): d xi / dv, shape (n_u, n_v, 2).
        x_uu, x_uv, x_vv (np.ndarray): second derivatives of the map, shape (n_u, n_v, 2).
        orientation (int): sign of the raw determinant, fixed for the whole mesh.
        jacobian (np.ndarray): oriented determinant, strictly positive, shape (n_u, n_v).
        inverse_metrics (np.ndarray): d(u, v)/d xi, shape (n_u, n_v, 2, 2), row 0 is grad u.
        tags (np.ndarray): integer tag per node, see TAG_NAMES.
        h (float): largest distance between neighbouring nodes.
    """
    domain: Domain
    n_u: int
    n_v: int
    u: np.ndarray
    v: np.ndarray
    nodes: np.ndarray
    x_u: np.ndarray
    x_v: np.ndarray
    x_uu: np.ndarray
    x_uv: np.ndarray
    x_vv: np.ndarray
    orientation: int
    jacobian: np.ndarray
    inverse_metrics: np.ndarray
    tags: np.ndarray
    h: float

    @property
    def size(self) -> int:
        return self.n_u * self.n_v

    @property
    def points(self) -> np.ndarray:
        """Nodes flattened to shape (n_u * n_v, 2)."""
        return self.nodes.reshape(-1, 2)

    @property
    def flat_tags(self) -> np.ndarray:
        return self.tags.reshape(-1)

    def index(self, i: int, j: int) -> int:
        return i * self.n_v + j

    def ij(self, k: int):
        return divmod(int(k), self.n_v)

    def mask(self, *tags: int) -> np.ndarray:
        """Flat boolean mask of nodes carrying any of the given tags."""
        return np.isin(self.flat_tags, tags)

    def tag_name(self, k: int) -> str:
        return TAG_NAMES[int(self.flat_tags[k])]

    def cone_distance(self) -> np.ndarray:
        """Mapped distance 1 - u from the cone edge, flat."""
        return 1.0 - self.u.reshape(-1)


def _tags(n_u: int, n_v: int) -> np.ndarray:
    tags = np.full((n_u, n_v), INTERIOR, dtype=np.int8)
    tags[:, 0] = TAG_SY2
    tags[:, -1] = TAG_SY1
    tags[0, :] = TAG_PY
    tags[-1, :] = TAG_CONE
    tags[0, 0] = TAG_P3
    tags[0, -1] = TAG_P4
    tags[-1, 0] = TAG_P2
    tags[-1, -1] = TAG_P1
    return tags


def build_mesh(domain: Domain, n_u: int, n_v: int) -> Mesh:
    """
    Transfinite-interpolation mesh with analytic metrics.

    Args:
        domain (Domain): the region to mesh.
        n_u (int): nodes from the wing edge to the cone, >= 9.
        n_v (int): nodes from sy2 to sy1, >= 9.

    Returns:
        Mesh: nodes, metrics and tags. Boundary nodes are placed exactly on their curves.

    Raises:
        BadParameter: if n_u or n_v < 9.
        FoldedMesh: if the map determinant is not of one sign, or vanishes, at some node.
    """
    if n_u < MIN_NODES or n_v < MIN_NODES:
        raise BadParameter(f"mesh needs at least {MIN_NODES} nodes per direction, got {n_u}x{n_v}")

    u1 = np.linspace(0.0, 1.0, n_u)
    v1 = np.linspace(0.0, 1.0, n_v)
    u, v = np.meshgrid(u1, v1, indexing="ij")
    uu = u[..., None]
    vv = v[..., None]

    p00, p10, p01, p11 = domain.P3, domain.P2, domain.P4, domain.P1
    left = boundary_points(domain, PY, v)
    right = boundary_points(domain, CONE, v)
    bottom = boundary_points(domain, SY2, u)
    top = boundary_points(domain, SY1, u)

    corners = (1 - uu) * (1 - vv) * p00 + uu * (1 - vv) * p10 + (1 - uu) * vv * p01 + uu * vv * p11
    nodes = (1 - uu) * left + uu * right + (1 - vv) * bottom + vv * top - corners

    # cone arc derivatives, theta = pi - v pi/2
    radius = domain.mach_radius
    theta = math.pi - v * (math.pi / 2)
    right_v = radius * (math.pi / 2) * np.stack([np.sin(theta), -np.cos(theta)], axis=-1)
    right_vv = -radius * (math.pi / 2) ** 2 * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    left_v = p01 - p00
    bottom_u = p10 - p00
    top_u = p11 - p01
    twist = p00 - p10 - p01 + p11

    x_u = -left + right + (1 - vv) * bottom_u + vv * top_u \
        - (-(1 - vv) * p00 + (1 - vv) * p10 - vv * p01 + vv * p11)
    x_v = (1 - uu) * left_v + uu * right_v - bottom + top \
        - (-(1 - uu) * p00 - uu * p10 + (1 - uu) * p01 + uu * p11)
    x_uu = np.zeros_like(nodes)
    x_vv = uu * right_vv
    x_uv = -left_v + right_v - bottom_u + top_u - twist

    # boundary-exact placement
    nodes[0, :] = left[0, :]
    nodes[-1, :] = right[-1, :]
    nodes[:, 0] = bottom[:, 0]
    nodes[:, -1] = top[:, -1]

    det = x_u[..., 0] * x_v[..., 1] - x_u[..., 1] * x_v[..., 0]
    orientation = int(np.sign(det[n_u // 2, n_v // 2]))
    jacobian = orientation * det
    if orientation == 0 or np.any(jacobian <= 0):
        i, j = np.unravel_index(int(np.argmin(jacobian)), jacobian.shape)
        raise FoldedMesh(f"mapping determinant changes sign or vanishes at node ({i}, {j}), xi={nodes[i, j]}")

    inverse = np.empty(det.shape + (2, 2))
    inverse[..., 0, 0] = x_v[..., 1] / det
    inverse[..., 0, 1] = -x_v[..., 0] / det
    inverse[..., 1, 0] = -x_u[..., 1] / det
    inverse[..., 1, 1] = x_u[..., 0] / det

    h = max(float(np.max(np.linalg.norm(np.diff(nodes, axis=0), axis=-1))),
            float(np.max(np.linalg.norm(np.diff(nodes, axis=1), axis=-1))))

    logger.debug("built %dx%d mesh, h=%.4g, min jacobian=%.4g", n_u, n_v, h, float(jacobian.min()))
    return Mesh(
        domain=domain,
        n_u=n_u,
        n_v=n_v,
        u=u,
        v=v,
        nodes=nodes,
        x_u=x_u,
        x_v=x_v,
        x_uu=x_uu,
        x_uv=x_uv,
        x_vv=x_vv,
        orientation=orientation,
        jacobian=jacobian,
        inverse_metrics=inverse,
        tags=_tags(n_u, n_v),
        h=h,
    )


@dataclass(frozen=True)
class ScalarField:
    """
    Nodal values on a mesh.

    Attributes:
        mesh (Mesh): the mesh the values live on.
        values (np.ndarray): flat nodal values, length n_u * n_v, C order.
        mu (Optional[float]): continuation parameter the field solves, if any.
        eps (Optional[float]): viscosity lift the field solves, if any.
        kind (str): what the values are, e.g. "phi", "s", "lower", "upper".
        estimate (bool): True for extrapolated fields that solve no discrete problem.
    """
    mesh: Mesh
    values: np.ndarray
    mu: Optional[float] = None
    eps: Optional[float] = None
    kind: str = "phi"
    estimate: bool = False

    def grid(self) -> np.ndarray:
        """Values reshaped to (n_u, n_v)."""
        return self.values.reshape(self.mesh.n_u, self.mesh.n_v)

    def sup_distance(self, other: "ScalarField") -> float:
        return float(np.max(np.abs(self.values - other.values)))
