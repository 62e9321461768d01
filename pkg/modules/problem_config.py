"""
This module contains the ProblemConfig and NewtonOptions classes and functions for loading a solver
configuration from a JSON file.

Classes:
- NewtonOptions: Newton iteration controls for every (mu, eps) solve.
- ProblemConfig: physical and geometric input of a run, plus schedules, Newton options and grid size.

Functions:
- validate_block: Checks a dictionary against one of the parameter tables in consts.py, filling in
    defaults and rejecting unknown keys and out-of-range values.
- config_from_dict: Builds a validated ProblemConfig from a plain dictionary.
- load_config: Given a path to a JSON config file, loads and validates it.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import List, Optional

from modules.consts import (CHAPLYGIN_A, EPS_SCHEDULE, GRID, GRID_PARAMS,
                            JACOBIAN_MODE, MAX_BACKTRACKS, MAX_ITER,
                            MU_SCHEDULE, N_U, N_V, NEWTON, NEWTON_PARAMS,
                            PROBLEM_PARAMS, RHO_STAR, SIGMA1, SIGMA2, TOL,
                            V3INF, VARIABLE)
from modules.errors import (AngleTooLarge, BadParameter, ConfigError,
                            NonSupersonic)
from modules.geometry import critical_angle

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NewtonOptions:
    """
    Newton iteration controls.

    Attributes:
        tol (float): sup-norm residual target.
        max_iter (int): iteration cap per (mu, eps) solve.
        max_backtracks (int): line-search halvings per iteration.
        jacobian_mode (str): "analytic" or "colored-difference".
        variable (str): "phi" or "s", the unknown the iteration works in.
    """
    tol: float = NEWTON_PARAMS[TOL]["default"]
    max_iter: int = NEWTON_PARAMS[MAX_ITER]["default"]
    max_backtracks: int = NEWTON_PARAMS[MAX_BACKTRACKS]["default"]
    jacobian_mode: str = NEWTON_PARAMS[JACOBIAN_MODE]["default"]
    variable: str = NEWTON_PARAMS[VARIABLE]["default"]


@dataclass(frozen=True)
class ProblemConfig:
    """
    Physical and numerical input of a run.

    Attributes:
        sigma1 (float): half-angle between the left and right wing edges, radians.
        sigma2 (float): half-angle between the upper and lower wing edges, radians.
        v3inf (float): freestream speed, Bernoulli constant normalized to 1.
        chaplygin_A (float): pressure-law constant.
        mu_schedule (List[float]): continuation values of mu, from 0 to 1.
        eps_schedule (List[float]): decreasing viscosity lifts.
        newton (NewtonOptions): Newton controls.
        n_u (int): mesh nodes across the domain.
        n_v (int): mesh nodes along the domain.
        rho_star (Optional[float]): reference density, only used for pressure output.

    Methods:
        sigma_inf() -> float: the critical half-angle for this freestream speed.
        with_grid(n: int) -> ProblemConfig: copy with both grid counts set to n.
        to_dict() -> dict: the config as it would be written to JSON.
    """
    sigma1: float
    sigma2: float
    v3inf: float
    chaplygin_A: float = PROBLEM_PARAMS[CHAPLYGIN_A]["default"]
    mu_schedule: List[float] = field(default_factory=lambda: list(PROBLEM_PARAMS[MU_SCHEDULE]["default"]))
    eps_schedule: List[float] = field(default_factory=lambda: list(PROBLEM_PARAMS[EPS_SCHEDULE]["default"]))
    newton: NewtonOptions = field(default_factory=NewtonOptions)
    n_u: int = GRID_PARAMS[N_U]["default"]
    n_v: int = GRID_PARAMS[N_V]["default"]
    rho_star: Optional[float] = None

    def sigma_inf(self) -> float:
        """
        Returns:
            float: arcsin(sqrt(v^2-1)/v), the largest admissible half-angle.
        """
        return critical_angle(self.v3inf)

    def with_grid(self, n: int) -> "ProblemConfig":
        """
        Returns a copy with n_u = n_v = n, validated against the grid table.

        Args:
            n (int): node count in both mapped directions.
        """
        grid = validate_block({N_U: n, N_V: n}, GRID_PARAMS, GRID)
        return replace(self, n_u=grid[N_U], n_v=grid[N_V])

    def to_dict(self) -> dict:
        """
        Returns:
            dict: the configuration in the layout of the JSON config file.
        """
        values = {
            SIGMA1: self.sigma1,
            SIGMA2: self.sigma2,
            V3INF: self.v3inf,
            CHAPLYGIN_A: self.chaplygin_A,
            MU_SCHEDULE: list(self.mu_schedule),
            EPS_SCHEDULE: list(self.eps_schedule),
            NEWTON: asdict(self.newton),
            GRID: {N_U: self.n_u, N_V: self.n_v},
        }
        if self.rho_star is not None:
            values[RHO_STAR] = self.rho_star
        return values


def _check_type(name: str, value, expected: type):
    if isinstance(value, bool):
        raise BadParameter(f"{name} must be a {expected.__name__}, got a boolean")
    if expected == float and isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, expected):
        raise BadParameter(f"{name} must be a {expected.__name__}, got {type(value).__name__}")
    return value


def validate_block(values: dict, params: dict, block_name: str = "config") -> dict:
    """
    Looks through a param dict and enforces that all parameters are known, typed and within range.

    Args:
        values (dict): dictionary of name, value parameters.
        params (dict): one of the parameter tables from consts.py.
        block_name (str): name used in error messages.

    Returns:
        dict: a new dictionary with every table key present, defaults filled in.

    Raises:
        BadParameter: for unknown keys, wrong types, missing required keys and out-of-range values.
    """
    unknown = sorted(set(values) - set(params))
    if unknown:
        raise BadParameter(f"unknown key(s) in {block_name}: {', '.join(unknown)}")

    result = {}
    for name, data in params.items():
        if name not in values:
            if data["default"] is None and not data.get("optional", False):
                raise BadParameter(f"{block_name}.{name} is required: {data['description']}")
            result[name] = data["default"]
            continue

        value = _check_type(f"{block_name}.{name}", values[name], data["type"])
        if "supported_values" in data and value not in data["supported_values"]:
            raise BadParameter(
                f"{block_name}.{name} must be one of {data['supported_values']}, got {value!r}")
        if data["type"] in (int, float):
            if not math.isfinite(value):
                raise BadParameter(f"{block_name}.{name} must be finite")
            low_ok = value > data["min"] if data.get("exclusive") else value >= data["min"]
            high_ok = value < data["max"] if data.get("exclusive") else value <= data["max"]
            if not (low_ok and high_ok):
                raise BadParameter(
                    f"{block_name}.{name}={value} outside {'(' if data.get('exclusive') else '['}"
                    f"{data['min']}, {data['max']}{')' if data.get('exclusive') else ']'}")
        result[name] = value

    return result


def _validate_schedules(mu_schedule: list, eps_schedule: list):
    mu = [_check_type(f"{MU_SCHEDULE}[{k}]", value, float) for k, value in enumerate(mu_schedule)]
    eps = [_check_type(f"{EPS_SCHEDULE}[{k}]", value, float) for k, value in enumerate(eps_schedule)]

    if not mu or mu[0] != 0.0 or mu[-1] != 1.0:
        raise BadParameter(f"{MU_SCHEDULE} must start at 0 and end at 1, got {mu}")
    if any(b < a for a, b in zip(mu, mu[1:])) or any(not 0.0 <= m <= 1.0 for m in mu):
        raise BadParameter(f"{MU_SCHEDULE} must be nondecreasing within [0, 1], got {mu}")
    if not eps:
        raise BadParameter(f"{EPS_SCHEDULE} must not be empty")
    if any(e <= 0 or not math.isfinite(e) for e in eps):
        raise BadParameter(f"{EPS_SCHEDULE} must be positive, got {eps}")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise BadParameter(f"{EPS_SCHEDULE} must be strictly decreasing, got {eps}")
    return mu, eps


def check_angles(sigma1: float, sigma2: float, v3inf: float):
    """
    Rejects wings whose half-angles reach the critical angle.

    Args:
        sigma1 (float): first half-angle.
        sigma2 (float): second half-angle.
        v3inf (float): freestream speed.

    Raises:
        NonSupersonic: if v3inf <= 1.
        AngleTooLarge: if either angle is >= sigma_inf.
    """
    sigma_inf = critical_angle(v3inf)
    for name, sigma in ((SIGMA1, sigma1), (SIGMA2, sigma2)):
        if sigma >= sigma_inf:
            raise AngleTooLarge(
                f"{name}={sigma:.7f} must be below sigma_inf=arcsin(sqrt(v^2-1)/v)={sigma_inf:.7f} for v3inf={v3inf}")


def config_from_dict(values: dict) -> ProblemConfig:
    """
    Builds a validated ProblemConfig.

    Args:
        values (dict): parsed JSON config.

    Returns:
        ProblemConfig: the validated configuration.

    Raises:
        ConfigError: on any invalid key or value.
    """
    if not isinstance(values, dict):
        raise BadParameter("config must be a JSON object")

    values = dict(values)
    newton_values = values.pop(NEWTON, {})
    grid_values = values.pop(GRID, {})
    if not isinstance(newton_values, dict) or not isinstance(grid_values, dict):
        raise BadParameter(f"{NEWTON} and {GRID} must be JSON objects")

    # check v3inf first so the error names the physics rather than the table bound
    if V3INF in values and not isinstance(values[V3INF], bool) and isinstance(values[V3INF], (int, float)) \
            and values[V3INF] <= 1:
        raise NonSupersonic(f"{V3INF}={values[V3INF]} must exceed 1 (supersonic freestream)")

    problem = validate_block(values, PROBLEM_PARAMS)
    newton = validate_block(newton_values, NEWTON_PARAMS, NEWTON)
    grid = validate_block(grid_values, GRID_PARAMS, GRID)
    mu, eps = _validate_schedules(problem[MU_SCHEDULE], problem[EPS_SCHEDULE])
    check_angles(problem[SIGMA1], problem[SIGMA2], problem[V3INF])

    config = ProblemConfig(
        sigma1=problem[SIGMA1],
        sigma2=problem[SIGMA2],
        v3inf=problem[V3INF],
        chaplygin_A=problem[CHAPLYGIN_A],
        mu_schedule=mu,
        eps_schedule=eps,
        newton=NewtonOptions(**newton),
        n_u=grid[N_U],
        n_v=grid[N_V],
        rho_star=problem[RHO_STAR],
    )
    logger.debug("validated config %s", config)
    return config


def load_config(path: str) -> ProblemConfig:
    """
    Load a ProblemConfig from a JSON file at the given path.

    Parameters:
    path (str): The path to the JSON file.

    Returns:
    ProblemConfig: The loaded and validated config.

    Raises:
    ConfigError: if the file is missing, unreadable, not JSON, or invalid.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            values = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e

    return config_from_dict(values)
