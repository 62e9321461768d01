"""
Tests for loading and validating solver configurations.

Tests:
- test_defaults_filled: omitted optional keys take their table defaults
- test_example_config_loads: the shipped example config is valid
- test_unknown_key: unknown keys are rejected at the top level and in blocks
- test_missing_required: sigma1 is required
- test_wrong_types: booleans and strings are not numbers
- test_non_supersonic: v3inf <= 1 raises NonSupersonic
- test_angle_too_large: an angle at the critical angle raises AngleTooLarge
- test_schedule_rules: mu and eps schedule constraints
- test_newton_choices: jacobian mode and variable are restricted to their values
- test_grid_bounds: grids below 9 nodes are rejected
- test_with_grid: the grid override copies the config
- test_to_dict_round_trip: to_dict output loads back to an equal config
- test_load_config_errors: missing files and bad JSON raise ConfigError
"""

import json
import math
import os

import pytest

from modules.consts import JACOBIAN_COLORED, VARIABLE_S
from modules.errors import (AngleTooLarge, BadParameter, ConfigError,
                            NonSupersonic)
from modules.geometry import critical_angle
from modules.problem_config import config_from_dict, load_config

from .small_problem import SIGMA, V3INF

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def _values(**overrides):
    values = {"sigma1": SIGMA, "sigma2": SIGMA, "v3inf": V3INF}
    values.update(overrides)
    return values


def test_defaults_filled():
    """
    Test the defaults of A, the schedules, Newton and the grid.
    """
    config = config_from_dict(_values())
    assert config.chaplygin_A == 1.0
    assert config.mu_schedule[0] == 0.0 and config.mu_schedule[-1] == 1.0
    assert len(config.mu_schedule) == 11
    assert config.eps_schedule == [0.1, 0.05, 0.025, 0.0125]
    assert config.newton.tol == 1e-8
    assert config.newton.max_iter == 30
    assert (config.n_u, config.n_v) == (65, 65)
    assert config.rho_star is None
    assert config.sigma_inf() == pytest.approx(math.pi / 3)


def test_example_config_loads():
    """
    Test that example_config.json at the repository root loads.
    """
    config = load_config(os.path.join(ROOT, "example_config.json"))
    assert config.v3inf == 2.0
    assert config.sigma1 < config.sigma_inf()


def test_unknown_key():
    """
    Test that misspelled keys are reported by name.
    """
    with pytest.raises(BadParameter, match="sigma3"):
        config_from_dict(_values(sigma3=0.1))
    with pytest.raises(BadParameter, match="tolerance"):
        config_from_dict(_values(newton={"tolerance": 1e-6}))


def test_missing_required():
    """
    Test that leaving out sigma1 raises BadParameter naming it.
    """
    values = _values()
    del values["sigma1"]
    with pytest.raises(BadParameter, match="sigma1"):
        config_from_dict(values)


def test_wrong_types():
    """
    Test that a boolean angle and a string speed are rejected, and that integers count as floats.
    """
    with pytest.raises(BadParameter):
        config_from_dict(_values(sigma1=True))
    with pytest.raises(BadParameter):
        config_from_dict(_values(v3inf="2"))
    assert config_from_dict(_values(v3inf=2)).v3inf == 2.0
    with pytest.raises(BadParameter):
        config_from_dict(_values(grid={"n_u": 33.0}))


def test_non_supersonic():
    """
    Test that v3inf = 1 raises NonSupersonic, a ConfigError.
    """
    with pytest.raises(NonSupersonic):
        config_from_dict(_values(v3inf=1.0))
    with pytest.raises(ConfigError):
        config_from_dict(_values(v3inf=0.5))


def test_angle_too_large():
    """
    Test that sigma2 equal to the critical angle raises AngleTooLarge naming sigma_inf.
    """
    with pytest.raises(AngleTooLarge, match="sigma_inf"):
        config_from_dict(_values(sigma2=critical_angle(V3INF)))
    with pytest.raises(AngleTooLarge):
        config_from_dict(_values(sigma1=1.2))


def test_schedule_rules():
    """
    Test the mu endpoints, mu monotonicity and the eps positivity and decrease rules.
    """
    for mu in ([0.1, 1.0], [0.0, 0.5], [0.0, 0.6, 0.4, 1.0], []):
        with pytest.raises(BadParameter):
            config_from_dict(_values(mu_schedule=mu))
    for eps in ([], [0.1, 0.1], [0.05, 0.1], [0.1, 0.0]):
        with pytest.raises(BadParameter):
            config_from_dict(_values(eps_schedule=eps))
    config = config_from_dict(_values(mu_schedule=[0, 0.5, 1], eps_schedule=[0.2]))
    assert config.mu_schedule == [0.0, 0.5, 1.0]


def test_newton_choices():
    """
    Test the accepted and rejected Newton modes.
    """
    config = config_from_dict(_values(newton={"jacobian_mode": JACOBIAN_COLORED, "variable": VARIABLE_S}))
    assert config.newton.jacobian_mode == JACOBIAN_COLORED
    assert config.newton.variable == VARIABLE_S
    with pytest.raises(BadParameter):
        config_from_dict(_values(newton={"jacobian_mode": "broyden"}))
    with pytest.raises(BadParameter):
        config_from_dict(_values(newton={"tol": 0.0}))


def test_grid_bounds():
    """
    Test that n_u = 8 is rejected and 9 accepted.
    """
    with pytest.raises(BadParameter):
        config_from_dict(_values(grid={"n_u": 8, "n_v": 33}))
    assert config_from_dict(_values(grid={"n_u": 9, "n_v": 9})).n_u == 9


def test_with_grid():
    """
    Test that with_grid sets both counts and leaves the original unchanged.
    """
    config = config_from_dict(_values())
    smaller = config.with_grid(17)
    assert (smaller.n_u, smaller.n_v) == (17, 17)
    assert config.n_u == 65
    with pytest.raises(BadParameter):
        config.with_grid(2)


def test_to_dict_round_trip():
    """
    Test that config_from_dict(config.to_dict()) reproduces the config.
    """
    config = config_from_dict(_values(rho_star=0.5, newton={"variable": VARIABLE_S}, grid={"n_u": 33, "n_v": 17}))
    assert config_from_dict(config.to_dict()) == config


def test_load_config_errors(tmp_path):
    """
    Test that a missing file, invalid JSON and a non-object document raise ConfigError.
    """
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(str(bad))
    listed = tmp_path / "list.json"
    listed.write_text(json.dumps([1, 2]), encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(str(listed))
