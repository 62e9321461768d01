"""
Finite-difference discretization of the mu-family problem on a transfinite mesh.

Derivatives are taken in the mapped coordinates (u, v) with second-order stencils (centered inside,
one-sided at the edges) and converted to xi derivatives with metrics obtained by applying the same
stencils to the node coordinates. Linear fields are therefore differenced exactly. Every operator is
a scipy.sparse matrix acting on flat nodal vectors, node (i, j) at index i * n_v + j.

Row types: interior nodes carry the interior equation, cone nodes (including P1, P2) the Dirichlet
condition, wing-edge nodes (including the corners P3, P4) the oblique condition, and symmetry nodes
the Neumann conditions.

Classes:
- DiscreteOperators: difference operators, discrete metrics and row masks of a mesh.

Functions:
- build_operators: cached DiscreteOperators for a mesh.
- nodal_derivatives: gradient and Hessian of nodal values.
- discrete_residual: residual vector of the phi-form problem.
- discrete_s_residual: residual vector of the s-form problem.
- assemble_jacobian: analytic or colored-difference Jacobian.
- column_coloring / colored_jacobian: finite-difference Jacobians by column groups.
- manufactured_solve / observed_order: grid convergence study of the linear mu=0 operator.
"""

import functools
import logging
import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from modules.consts import FD_STEP, JACOBIAN_ANALYTIC, JACOBIAN_COLORED
from modules.errors import BadParameter, FoldedMesh
from modules.fields import interior_residual, interior_residual_partials, s_interior_residual
from modules.mesh import (INTERIOR, TAG_CONE, TAG_P1, TAG_P2, TAG_P3, TAG_P4,
                          TAG_PY, TAG_SY1, TAG_SY2, Mesh, ScalarField)

logger = logging.getLogger(__name__)


def first_derivative_1d(n: int) -> sp.csr_matrix:
    """Second-order first derivative on n uniform nodes of [0, 1], one-sided at both ends."""
    h = 1.0 / (n - 1)
    d = sp.lil_matrix((n, n))
    d[0, 0:3] = [-3.0, 4.0, -1.0]
    d[n - 1, n - 3:n] = [1.0, -4.0, 3.0]
    for i in range(1, n - 1):
        d[i, i - 1] = -1.0
        d[i, i + 1] = 1.0
    return (d / (2.0 * h)).tocsr()


def second_derivative_1d(n: int) -> sp.csr_matrix:
    """Second-order second derivative on n uniform nodes of [0, 1], one-sided at both ends."""
    h = 1.0 / (n - 1)
    d = sp.lil_matrix((n, n))
    d[0, 0:4] = [2.0, -5.0, 4.0, -1.0]
    d[n - 1, n - 4:n] = [-1.0, 4.0, -5.0, 2.0]
    for i in range(1, n - 1):
        d[i, i - 1:i + 2] = [1.0, -2.0, 1.0]
    return (d / (h * h)).tocsr()


@dataclass(frozen=True, eq=False)
class DiscreteOperators:
    """
    Difference operators of a mesh.

    Attributes:
        mesh (Mesh): the mesh.
        d_u, d_v, d_uu, d_uv, d_vv (sp.csr_matrix): mapped-coordinate derivatives.
        metrics (dict): discrete x_u, x_v, x_uu, x_uv, x_vv, each shape (N, 2).
        grad_ops (Tuple[sp.csr_matrix, sp.csr_matrix]): d/dxi1 and d/dxi2.
        hess_ops (Tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]): H11, H12, H22.
        interior, cone, py, sy1, sy2 (np.ndarray): flat boolean row masks.
        q (np.ndarray): sqrt(1+|xi|^2) at every node.
        pattern (sp.csr_matrix): boolean sparsity pattern of the Jacobian.
    """
    mesh: Mesh
    d_u: sp.csr_matrix
    d_v: sp.csr_matrix
    d_uu: sp.csr_matrix
    d_uv: sp.csr_matrix
    d_vv: sp.csr_matrix
    metrics: dict
    grad_ops: Tuple[sp.csr_matrix, sp.csr_matrix]
    hess_ops: Tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]
    interior: np.ndarray
    cone: np.ndarray
    py: np.ndarray
    sy1: np.ndarray
    sy2: np.ndarray
    q: np.ndarray
    pattern: sp.csr_matrix

    def gradient(self, values: np.ndarray) -> np.ndarray:
        """Nodal gradient, shape (N, 2)."""
        return np.stack([self.grad_ops[0] @ values, self.grad_ops[1] @ values], axis=-1)

    def hessian(self, values: np.ndarray) -> np.ndarray:
        """Nodal Hessian, shape (N, 2, 2)."""
        h11, h12, h22 = (op @ values for op in self.hess_ops)
        return np.stack([np.stack([h11, h12], axis=-1), np.stack([h12, h22], axis=-1)], axis=-2)


def _diag(values: np.ndarray) -> sp.dia_matrix:
    return sp.diags(values, 0, format="csr")


def _select(mask: np.ndarray, block) -> sp.csr_matrix:
    return _diag(mask.astype(float)) @ sp.csr_matrix(block)


@functools.lru_cache(maxsize=8)
def build_operators(mesh: Mesh) -> DiscreteOperators:
    """
    Builds (and caches per mesh) the difference operators.

    Args:
        mesh (Mesh): the mesh.

    Returns:
        DiscreteOperators: operators, metrics and row masks.
    """
    eye_u = sp.identity(mesh.n_u, format="csr")
    eye_v = sp.identity(mesh.n_v, format="csr")
    d1u, d2u = first_derivative_1d(mesh.n_u), second_derivative_1d(mesh.n_u)
    d1v, d2v = first_derivative_1d(mesh.n_v), second_derivative_1d(mesh.n_v)

    d_u = sp.kron(d1u, eye_v, format="csr")
    d_v = sp.kron(eye_u, d1v, format="csr")
    d_uu = sp.kron(d2u, eye_v, format="csr")
    d_vv = sp.kron(eye_u, d2v, format="csr")
    d_uv = sp.kron(d1u, d1v, format="csr")

    points = mesh.points
    metrics = {name: op @ points for name, op in
               (("x_u", d_u), ("x_v", d_v), ("x_uu", d_uu), ("x_uv", d_uv), ("x_vv", d_vv))}
    a, b = metrics["x_u"], metrics["x_v"]
    det = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    if np.any(mesh.orientation * det <= 0):
        k = int(np.argmin(mesh.orientation * det))
        raise FoldedMesh(f"discrete metrics degenerate at node {mesh.ij(k)}, xi={points[k]}")

    # grad u = (b2, -b1)/det, grad v = (-a2, a1)/det
    grad_u = np.stack([b[:, 1], -b[:, 0]], axis=-1) / det[:, None]
    grad_v = np.stack([-a[:, 1], a[:, 0]], axis=-1) / det[:, None]
    grad_ops = tuple(_diag(grad_u[:, k]) @ d_u + _diag(grad_v[:, k]) @ d_v for k in range(2))

    # rows uu, uv, vv of the map from (H11, H12, H22) to second mapped derivatives
    system = np.empty((len(points), 3, 3))
    system[:, 0] = np.stack([a[:, 0] ** 2, 2 * a[:, 0] * a[:, 1], a[:, 1] ** 2], axis=-1)
    system[:, 1] = np.stack([a[:, 0] * b[:, 0], a[:, 0] * b[:, 1] + a[:, 1] * b[:, 0], a[:, 1] * b[:, 1]], axis=-1)
    system[:, 2] = np.stack([b[:, 0] ** 2, 2 * b[:, 0] * b[:, 1], b[:, 1] ** 2], axis=-1)
    inverse = np.linalg.inv(system)

    corrected = []
    for name, op in (("x_uu", d_uu), ("x_uv", d_uv), ("x_vv", d_vv)):
        second = metrics[name]
        corrected.append(op - _diag(second[:, 0]) @ grad_ops[0] - _diag(second[:, 1]) @ grad_ops[1])
    hess_ops = tuple(
        sum((_diag(inverse[:, row, m]) @ corrected[m] for m in range(3)), sp.csr_matrix((len(points), len(points))))
        for row in range(3))

    tags = mesh.flat_tags
    interior = tags == INTERIOR
    cone = np.isin(tags, (TAG_CONE, TAG_P1, TAG_P2))
    py = np.isin(tags, (TAG_PY, TAG_P3, TAG_P4))
    sy1 = tags == TAG_SY1
    sy2 = tags == TAG_SY2

    structure = abs(grad_ops[0]) + abs(grad_ops[1]) + sp.identity(len(points), format="csr")
    pattern = _select(interior, sum(abs(op) for op in hess_ops) + structure) \
        + _select(cone, sp.identity(len(points))) \
        + _select(py | sy1 | sy2, structure)
    pattern = (sp.csr_matrix(pattern) != 0).astype(float).tocsr()

    logger.debug("built operators for %dx%d mesh, %d pattern entries", mesh.n_u, mesh.n_v, pattern.nnz)
    return DiscreteOperators(
        mesh=mesh,
        d_u=d_u,
        d_v=d_v,
        d_uu=d_uu,
        d_uv=d_uv,
        d_vv=d_vv,
        metrics=metrics,
        grad_ops=grad_ops,
        hess_ops=hess_ops,
        interior=interior,
        cone=cone,
        py=py,
        sy1=sy1,
        sy2=sy2,
        q=np.sqrt(1.0 + np.sum(points ** 2, axis=-1)),
        pattern=pattern,
    )


def nodal_derivatives(field: ScalarField) -> Tuple[np.ndarray, np.ndarray]:
    """
    Discrete gradient and Hessian of a field.

    Returns:
        tuple: (gradient (N, 2), Hessian (N, 2, 2)).
    """
    ops = build_operators(field.mesh)
    return ops.gradient(field.values), ops.hessian(field.values)


def _residual_values(mesh: Mesh, mu: float, eps: float, values: np.ndarray) -> np.ndarray:
    ops = build_operators(mesh)
    domain = mesh.domain
    points = mesh.points
    grad = ops.gradient(values)
    residual = np.zeros_like(values)

    idx = ops.interior
    residual[idx] = interior_residual(mu, values[idx], grad[idx], ops.hessian(values)[idx], points[idx])
    residual[ops.cone] = values[ops.cone] - ops.q[ops.cone] - eps

    t = domain.tan_sigma2
    idx = ops.py
    chi = values[idx] - np.sum(grad[idx] * points[idx], axis=-1)
    residual[idx] = grad[idx] @ domain.nu_py + chi * t
    residual[ops.sy1] = grad[ops.sy1] @ domain.nu_sy1
    residual[ops.sy2] = grad[ops.sy2] @ domain.nu_sy2
    return residual


def discrete_residual(mesh: Mesh, mu: float, eps: float, field: ScalarField) -> np.ndarray:
    """
    Nodal residual of the discrete phi-form problem.

    Interior nodes: G(mu, phi) from the discrete gradient and Hessian; cone nodes:
    phi - sqrt(1+|xi|^2) - eps; wing-edge nodes and the corners P3, P4: D phi . nu_py + chi tan sigma2;
    symmetry nodes: D phi . nu_sy.

    Args:
        mesh (Mesh): the mesh.
        mu (float): continuation parameter.
        eps (float): viscosity lift of the cone data.
        field (ScalarField): nodal phi values.

    Returns:
        np.ndarray: residual per node.
    """
    return _residual_values(mesh, mu, eps, np.asarray(field.values, dtype=float))


def cone_s_value(q: np.ndarray, eps: float) -> np.ndarray:
    """s on the cone, arcosh(1 + eps/q), where phi = q + eps."""
    return np.arccosh(1.0 + eps / q)


def discrete_s_residual(mesh: Mesh, mu: float, eps: float, s_values: np.ndarray) -> np.ndarray:
    """
    Nodal residual of the s-form problem, phi = sqrt(1+|xi|^2) cosh s.

    Interior nodes: the s-form equation; cone nodes: s - arcosh(1 + eps/q); wing edge:
    Ds . (nu_py - tan sigma2 xi); symmetry nodes: Ds . nu_sy.
    """
    ops = build_operators(mesh)
    domain = mesh.domain
    points = mesh.points
    s_values = np.asarray(s_values, dtype=float)
    grad = ops.gradient(s_values)
    residual = np.zeros_like(s_values)

    idx = ops.interior
    residual[idx] = s_interior_residual(mu, s_values[idx], grad[idx], ops.hessian(s_values)[idx], points[idx])
    residual[ops.cone] = s_values[ops.cone] - cone_s_value(ops.q[ops.cone], eps)

    idx = ops.py
    direction = domain.nu_py - domain.tan_sigma2 * points[idx]
    residual[idx] = np.sum(grad[idx] * direction, axis=-1)
    residual[ops.sy1] = grad[ops.sy1] @ domain.nu_sy1
    residual[ops.sy2] = grad[ops.sy2] @ domain.nu_sy2
    return residual


def analytic_jacobian(mesh: Mesh, mu: float, values: np.ndarray) -> sp.csr_matrix:
    """Jacobian of the phi-form residual from the closed-form kernel derivatives."""
    ops = build_operators(mesh)
    domain = mesh.domain
    points = mesh.points
    n = mesh.size
    grad = ops.gradient(values)
    g1, g2 = ops.grad_ops
    h11, h12, h22 = ops.hess_ops

    partials = interior_residual_partials(mu, values, grad, ops.hessian(values), points)
    interior_block = _diag(partials.d_phi) + _diag(partials.d_grad[:, 0]) @ g1 + _diag(partials.d_grad[:, 1]) @ g2 \
        + _diag(partials.d_hess[:, 0]) @ h11 + _diag(partials.d_hess[:, 1]) @ h12 + _diag(partials.d_hess[:, 2]) @ h22

    t = domain.tan_sigma2
    direction = domain.nu_py - t * points
    py_block = t * sp.identity(n, format="csr") + _diag(direction[:, 0]) @ g1 + _diag(direction[:, 1]) @ g2

    jacobian = _select(ops.interior, interior_block) \
        + _select(ops.cone, sp.identity(n, format="csr")) \
        + _select(ops.py, py_block) \
        + _select(ops.sy1, g1) \
        + _select(ops.sy2, -g2)
    jacobian = sp.csr_matrix(jacobian)
    jacobian.eliminate_zeros()
    return jacobian


def column_coloring(pattern: sp.csr_matrix) -> np.ndarray:
    """
    Greedy coloring of the columns so that no two columns of a color share a row.

    Args:
        pattern (sp.csr_matrix): sparsity pattern.

    Returns:
        np.ndarray: color index per column.
    """
    pattern = sp.csr_matrix(pattern != 0, dtype=float)
    adjacency = (pattern.T @ pattern).tocsr()
    colors = np.full(pattern.shape[1], -1, dtype=int)
    for col in range(pattern.shape[1]):
        neighbours = adjacency.indices[adjacency.indptr[col]:adjacency.indptr[col + 1]]
        used = set(colors[neighbours][colors[neighbours] >= 0].tolist())
        color = 0
        while color in used:
            color += 1
        colors[col] = color
    return colors


@functools.lru_cache(maxsize=8)
def _coloring_for(mesh: Mesh) -> np.ndarray:
    colors = column_coloring(build_operators(mesh).pattern)
    logger.debug("jacobian coloring uses %d colors for %d columns", int(colors.max()) + 1, len(colors))
    return colors


def colored_jacobian(residual_fn: Callable[[np.ndarray], np.ndarray], values: np.ndarray,
                     pattern: sp.csr_matrix, colors: np.ndarray, step: float = FD_STEP) -> sp.csr_matrix:
    """
    Forward-difference Jacobian with one residual evaluation per column color.

    Column c is perturbed by step * (1 + |x_c|) and J[r, c] = (F(x + dx)[r] - F(x)[r]) / dx_c.

    Args:
        residual_fn: maps nodal values to the residual vector.
        values (np.ndarray): point of linearization.
        pattern (sp.csr_matrix): sparsity pattern of the Jacobian.
        colors (np.ndarray): column colors from column_coloring.
        step (float): relative step.

    Returns:
        sp.csr_matrix: the Jacobian.
    """
    coo = sp.coo_matrix(pattern)
    rows, cols = coo.row, coo.col
    base = residual_fn(values)
    increments = step * (1.0 + np.abs(values))
    data = np.zeros(len(rows))
    for color in range(int(colors.max()) + 1):
        in_color = colors == color
        perturbed = values + np.where(in_color, increments, 0.0)
        delta = residual_fn(perturbed) - base
        entries = in_color[cols]
        data[entries] = delta[rows[entries]] / increments[cols[entries]]
    jacobian = sp.csr_matrix((data, (rows, cols)), shape=pattern.shape)
    jacobian.eliminate_zeros()
    return jacobian


def assemble_jacobian(mesh: Mesh, mu: float, eps: float, field: ScalarField,
                      mode: str = JACOBIAN_ANALYTIC) -> sp.csr_matrix:
    """
    Jacobian of discrete_residual with respect to the nodal values.

    Args:
        mesh (Mesh): the mesh.
        mu (float): continuation parameter.
        eps (float): viscosity lift.
        field (ScalarField): point of linearization.
        mode (str): "analytic" or "colored-difference".

    Returns:
        sp.csr_matrix: at most 13 nonzeros per row; interior rows use the 9-point stencil.
    """
    values = np.asarray(field.values, dtype=float)
    if mode == JACOBIAN_ANALYTIC:
        return analytic_jacobian(mesh, mu, values)
    if mode == JACOBIAN_COLORED:
        return colored_jacobian(lambda x: _residual_values(mesh, mu, eps, x), values,
                                build_operators(mesh).pattern, _coloring_for(mesh))
    raise BadParameter(f"unknown jacobian mode {mode!r}")


def assemble_s_jacobian(mesh: Mesh, mu: float, eps: float, s_values: np.ndarray) -> sp.csr_matrix:
    """Colored-difference Jacobian of discrete_s_residual."""
    return colored_jacobian(lambda x: discrete_s_residual(mesh, mu, eps, x), np.asarray(s_values, dtype=float),
                            build_operators(mesh).pattern, _coloring_for(mesh))


def linear_operator(mesh: Mesh) -> sp.csr_matrix:
    """The mu=0 principal operator without the c^2 factor, lap + D^2[xi, xi]."""
    ops = build_operators(mesh)
    xi = mesh.points
    h11, h12, h22 = ops.hess_ops
    return _diag(1.0 + xi[:, 0] ** 2) @ h11 + _diag(2.0 * xi[:, 0] * xi[:, 1]) @ h12 + _diag(1.0 + xi[:, 1] ** 2) @ h22


def boundary_operator(mesh: Mesh) -> sp.csr_matrix:
    """Rows of the (linear) boundary conditions for non-interior nodes, zero on interior rows."""
    ops = build_operators(mesh)
    domain = mesh.domain
    n = mesh.size
    g1, g2 = ops.grad_ops
    t = domain.tan_sigma2
    direction = domain.nu_py - t * mesh.points
    py_block = t * sp.identity(n, format="csr") + _diag(direction[:, 0]) @ g1 + _diag(direction[:, 1]) @ g2
    return sp.csr_matrix(_select(ops.cone, sp.identity(n, format="csr")) + _select(ops.py, py_block)
                         + _select(ops.sy1, g1) + _select(ops.sy2, -g2))


def mu0_system(mesh: Mesh, c2: np.ndarray) -> sp.csr_matrix:
    """
    Matrix of the mu=0 problem with c^2 frozen: c^2 (lap + D^2[xi, xi]) on interior rows, the
    boundary conditions elsewhere. The right-hand side is zero except for the cone data.
    """
    ops = build_operators(mesh)
    interior = _select(ops.interior, sp.diags(np.asarray(c2, dtype=float)) @ linear_operator(mesh))
    return sp.csr_matrix(interior + boundary_operator(mesh))


def manufactured_solve(mesh: Mesh) -> float:
    """
    Solves lap phi + D^2 phi[xi, xi] = 4 + 2|xi|^2 with the boundary data of phi_m = |xi|^2.

    Cone nodes take phi_m, wing-edge nodes D phi_m . nu_py + chi_m tan sigma2, symmetry nodes zero.

    Returns:
        float: maximum nodal error against phi_m.
    """
    ops = build_operators(mesh)
    domain = mesh.domain
    xi = mesh.points
    exact = np.sum(xi ** 2, axis=-1)
    grad = 2.0 * xi
    chi = exact - np.sum(grad * xi, axis=-1)

    rhs = np.zeros(mesh.size)
    rhs[ops.interior] = 4.0 + 2.0 * exact[ops.interior]
    rhs[ops.cone] = exact[ops.cone]
    rhs[ops.py] = grad[ops.py] @ domain.nu_py + chi[ops.py] * domain.tan_sigma2

    matrix = mu0_system(mesh, np.ones(mesh.size))
    solution = spsolve(matrix.tocsc(), rhs)
    error = float(np.max(np.abs(solution - exact)))
    logger.debug("manufactured solve on %dx%d: max error %.3e", mesh.n_u, mesh.n_v, error)
    return error


def observed_order(errors, spacings) -> float:
    """Least-squares slope of log(error) against log(spacing)."""
    slope, _ = np.polyfit(np.log(np.asarray(spacings, dtype=float)), np.log(np.asarray(errors, dtype=float)), 1)
    return float(slope)


def stencil_scale(values: np.ndarray, c2: np.ndarray, mesh: Mesh) -> float:
    """Size of c^2 |phi| / du^2, the magnitude of the individual stencil terms."""
    spacing = 1.0 / (max(mesh.n_u, mesh.n_v) - 1)
    return float(np.max(np.abs(c2)) * np.max(np.abs(values)) / spacing ** 2) if len(values) else math.nan
