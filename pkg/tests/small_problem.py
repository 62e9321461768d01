"""
Small shared problems for the tests: the standard wing (sigma1 = sigma2 = pi/6, v3inf = 2) on coarse
meshes, and a cached coarse continuation run so several test modules can check the same solution.

Functions:
- standard_domain: the standard Domain.
- small_config: ProblemConfig for the standard wing on an n x n grid with a short eps schedule.
- small_mesh: cached mesh of the standard domain.
- solved_run: cached continuation run on a 17 x 17 mesh.
- three_level_run: cached 33 x 33 run over eps = 0.1, 0.05, 0.025 at the default tolerance.
- fixture_solution: wraps nodal values as a converged Solution.
"""

import functools
import math
from typing import List, Optional

import numpy as np

from modules.geometry import Domain, build_domain, domain_from_angles
from modules.mesh import Mesh, ScalarField, build_mesh
from modules.problem_config import ProblemConfig, config_from_dict
from modules.solver import Solution, SweepResult, continuation_run

SIGMA = math.pi / 6
V3INF = 2.0
ROOT3 = math.sqrt(3.0)


def standard_domain() -> Domain:
    return domain_from_angles(SIGMA, SIGMA, V3INF)


def small_config(n: int = 17, eps_schedule: Optional[List[float]] = None, **newton) -> ProblemConfig:
    values = {
        "sigma1": SIGMA,
        "sigma2": SIGMA,
        "v3inf": V3INF,
        "eps_schedule": eps_schedule if eps_schedule is not None else [0.1, 0.05],
        "grid": {"n_u": n, "n_v": n},
    }
    if newton:
        values["newton"] = dict(newton)
    return config_from_dict(values)


@functools.lru_cache(maxsize=4)
def small_mesh(n: int = 17) -> Mesh:
    return build_mesh(standard_domain(), n, n)


@functools.lru_cache(maxsize=2)
def solved_run(n: int = 17) -> SweepResult:
    config = small_config(n)
    return continuation_run(config, build_mesh(build_domain(config), n, n))


@functools.lru_cache(maxsize=1)
def three_level_run() -> SweepResult:
    config = small_config(33, eps_schedule=[0.1, 0.05, 0.025])
    return continuation_run(config, build_mesh(build_domain(config), 33, 33))


def fixture_solution(mesh: Mesh, values, mu: float = 1.0, eps: float = 0.05) -> Solution:
    values = np.asarray(values, dtype=float)
    return Solution(ScalarField(mesh, values, mu, eps), mu, eps, True, [0.0])
