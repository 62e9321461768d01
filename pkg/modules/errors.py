"""
Exception hierarchy for the conical wing solver.

Every error raised on purpose by the library derives from ChaplyginError. The cli maps the three
families to exit codes: ConfigError -> 2, SolverError and IoFailure -> 3. Geometry and kernel errors
raised while a run is in progress are treated as solver failures.

Classes:
- ChaplyginError: root of the hierarchy.
- ConfigError, NonSupersonic, AngleTooLarge, BadParameter: invalid input.
- GeometryError, FoldedMesh, PointOffBoundary, BehindApex, NotUnit: geometric preconditions.
- KernelError, InadmissibleEta, DegenerateValue, SubsonicState, EmptyFamily: pointwise kernels.
- SolverError, LinearSolveFailure, SingularJacobian, Diverged, ContinuationStuck,
    StartViolatesBoundary: Newton and continuation failures.
- IoFailure: output could not be written.
"""

from typing import Optional, Tuple


class ChaplyginError(Exception):
    """Base class for all errors raised by the solver modules."""


class ConfigError(ChaplyginError, ValueError):
    """The configuration is invalid."""


class NonSupersonic(ConfigError):
    """The freestream speed is not greater than 1."""


class AngleTooLarge(ConfigError):
    """A wing half-angle reaches the critical angle, the shock would attach to the leading edges."""


class BadParameter(ConfigError):
    """A parameter lies outside its admissible range."""


class GeometryError(ChaplyginError, ValueError):
    """A geometric precondition failed."""


class FoldedMesh(GeometryError):
    """The mesh map has a non-positive Jacobian determinant somewhere."""


class PointOffBoundary(GeometryError):
    """A point handed to a boundary kernel is not on the named boundary piece."""


class BehindApex(GeometryError):
    """The rotated ray points behind the apex (x3 <= 0 in the rotated frame)."""


class NotUnit(GeometryError):
    """A direction vector is not normalized."""


class KernelError(ChaplyginError, ValueError):
    """A pointwise kernel was called outside its domain."""


class InadmissibleEta(KernelError):
    """|eta|^2 <= 1, the linear solution has no positive sound speed."""


class DegenerateValue(KernelError):
    """phi does not exceed sqrt(1+|xi|^2), the s variable is undefined."""


class SubsonicState(KernelError):
    """c^2 <= 0 at a point where a positive sound speed is required."""


class EmptyFamily(KernelError):
    """No sub-solutions or no super-solutions survived classification."""


class SolverError(ChaplyginError, RuntimeError):
    """The discrete solve failed."""


class LinearSolveFailure(SolverError):
    """The frozen-coefficient iteration for the mu=0 problem stalled."""


class SingularJacobian(SolverError):
    """
    The Newton Jacobian could not be factored.

    Attributes:
        node (Optional[int]): flat index of the node where the principal part is least positive.
        xi (Optional[Tuple[float, float]]): conical coordinates of that node.
    """

    def __init__(self, message: str, node: Optional[int] = None, xi: Optional[Tuple[float, float]] = None):
        super().__init__(message)
        self.node = node
        self.xi = xi


class Diverged(SolverError):
    """Newton produced non-finite values or failed to reduce the residual."""


class ContinuationStuck(SolverError):
    """
    A continuation step failed even after halving the mu step.

    Attributes:
        mu (float): the mu value that could not be reached.
        eps (float): the viscosity level of the failing stage.
    """

    def __init__(self, message: str, mu: float, eps: float):
        super().__init__(message)
        self.mu = mu
        self.eps = eps


class StartViolatesBoundary(SolverError):
    """The Newton start field does not satisfy the cone Dirichlet rows."""


class IoFailure(ChaplyginError, OSError):
    """An output file could not be written."""
