"""
This module contains the main constants used by the other modules: configuration keys and their
descriptions, numerical tolerances, discretization-error allowances, file schemas and exit codes.

The parameter tables follow one layout: every entry has a "type", a "default" (None when the key is
required), a "description", and numeric bounds where they apply. problem_config.py validates configs
against these tables, and the cli prints the descriptions.
"""

import math
import os

VERSION = "1.0.0"

# top level config keys
SIGMA1 = "sigma1"
SIGMA2 = "sigma2"
V3INF = "v3inf"
CHAPLYGIN_A = "chaplygin_A"
RHO_STAR = "rho_star"
MU_SCHEDULE = "mu_schedule"
EPS_SCHEDULE = "eps_schedule"
NEWTON = "newton"
GRID = "grid"

# newton block keys
TOL = "tol"
MAX_ITER = "max_iter"
MAX_BACKTRACKS = "max_backtracks"
JACOBIAN_MODE = "jacobian_mode"
VARIABLE = "variable"

# grid block keys
N_U = "n_u"
N_V = "n_v"

JACOBIAN_ANALYTIC = "analytic"
JACOBIAN_COLORED = "colored-difference"
VARIABLE_PHI = "phi"
VARIABLE_S = "s"

PROBLEM_PARAMS = {
    SIGMA1: {
        "type": float,
        "default": None,
        "description": "half-angle between the left and right wing edges, radians, must stay below the critical angle",
        "min": 0,
        "max": math.pi / 2,
        "exclusive": True
    },
    SIGMA2: {
        "type": float,
        "default": None,
        "description": "half-angle between the upper and lower wing edges, radians, must stay below the critical angle",
        "min": 0,
        "max": math.pi / 2,
        "exclusive": True
    },
    V3INF: {
        "type": float,
        "default": None,
        "description": "freestream speed along the wing axis, nondimensional with the Bernoulli constant set to 1",
        "min": 1,
        "max": 1e3,
        "exclusive": True
    },
    CHAPLYGIN_A: {
        "type": float,
        "default": 1.0,
        "description": "pressure-law constant A of the Chaplygin gas",
        "min": 0,
        "max": 1e12,
        "exclusive": True
    },
    RHO_STAR: {
        "type": float,
        "default": None,
        "optional": True,
        "description": "reference density of the pressure law, only needed for pressure output",
        "min": 0,
        "max": 1e12,
        "exclusive": True
    },
    MU_SCHEDULE: {
        "type": list,
        "default": [round(0.1 * k, 10) for k in range(11)],
        "description": "continuation values of mu, nondecreasing, starting at 0 and ending at 1"
    },
    EPS_SCHEDULE: {
        "type": list,
        "default": [0.1, 0.05, 0.025, 0.0125],
        "description": "viscosity lifts of the cone boundary data, strictly decreasing and positive"
    },
}

NEWTON_PARAMS = {
    TOL: {
        "type": float,
        "default": 1e-8,
        "description": "sup-norm residual target for each (mu, eps) solve",
        "min": 0,
        "max": 1,
        "exclusive": True
    },
    MAX_ITER: {
        "type": int,
        "default": 30,
        "description": "newton iteration cap per (mu, eps) solve",
        "min": 1,
        "max": 1000
    },
    MAX_BACKTRACKS: {
        "type": int,
        "default": 8,
        "description": "line-search halvings allowed per newton iteration",
        "min": 1,
        "max": 60
    },
    JACOBIAN_MODE: {
        "type": str,
        "default": JACOBIAN_ANALYTIC,
        "description": "how the newton jacobian is built",
        "supported_values": [JACOBIAN_ANALYTIC, JACOBIAN_COLORED]
    },
    VARIABLE: {
        "type": str,
        "default": VARIABLE_PHI,
        "description": "unknown the newton iteration works in: the potential phi or s with phi = sqrt(1+|xi|^2) cosh s",
        "supported_values": [VARIABLE_PHI, VARIABLE_S]
    },
}

GRID_PARAMS = {
    N_U: {
        "type": int,
        "default": 65,
        "description": "nodes across the domain, from the wing edge to the shock cone",
        "min": 9,
        "max": 2049
    },
    N_V: {
        "type": int,
        "default": 65,
        "description": "nodes along the domain, from the x1-axis symmetry line to the x2-axis symmetry line",
        "min": 9,
        "max": 2049
    },
}

# geometric tolerances, xi units
BOUNDARY_TOL = 1e-12
ON_BOUNDARY_TOL = 1e-10
UNIT_TOL = 1e-12

# comparison-function sampling
DEFAULT_ETA_SAMPLES = 256
SUB_FAMILY_GRID = 9
SUPER_FAMILY_DELTAS = [0.05, 0.1, 0.2]
SUPER_FAMILY_SPEED_FACTORS = [2.0, 4.0]
TIGHT_SUPER_FAMILY_DELTAS = [1e-3, 1e-2]

# newton and continuation
MAX_MU_HALVINGS = 4
FD_STEP = 1e-7
MEMBERSHIP_SLACK = 10.0

# discretization-error allowances used by the diagnostics, declared in every report
ELLIPTIC_SLACK = 1e-6
INTERIOR_BAND = 0.1
CONE_EDGE_C = 10.0
SANDWICH_C = 10.0
CORNER_C = 10.0
GRAD_L2_MAX_REL = 1e-2
GRAD_L2_MEDIAN_REL = 1e-3
GRAD_L2_EXCLUSION_CELLS = 2
GRAD_L2_ORACLE_REL = 1e-4
BOUNDARY_MAX_CELLS = 1
TIE_REL = 1e-9
# P3 and P4 are wing corners where phi is only Lipschitz; boundary_max and grad_L2_identity skip the
# nodes within this many cells of them in both index directions
WING_CORNER_CELLS = 2

# verification suite
VERIFY_RANDOM_ETAS = 20
VERIFY_RANDOM_POINTS = 100
VERIFY_MUS = [0.0, 0.5, 1.0]
ROUND_TRIP_TOL = 1e-13
LINEAR_RESIDUAL_TOL = 1e-11

# file schemas
FIELDS_CSV_HEADER = ["xi1", "xi2", "phi", "dphi1", "dphi2", "chi", "c2", "L2", "rho", "tag"]
CAUCHY_CSV_HEADER = ["eps", "sup_delta"]
SHOCK_CSV_HEADER = ["x1", "x2", "x3"]
SHOCK_SAMPLES = 181
FLOAT_FORMAT = "{:.17g}"

FIELDS_CSV = "fields.csv"
FIELDS_VTK = "fields.vtk"
REPORT_JSON = "report.json"
SHOCK_CSV = "shock.csv"
CAUCHY_CSV = "cauchy.csv"
MANIFEST_JSON = "manifest.json"

# exit codes
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_CHECKS = 4

THREADS_ENV = "CHAPLYGIN_THREADS"

MODULE_DIR = os.path.dirname(os.path.abspath(__file__))
REPORT_SCHEMA_PATH = os.path.join(MODULE_DIR, "schemas", "report.schema.json")

COMMAND_DOCUMENTATION = {}


def get_command_documentation():
    """
    Updates the COMMAND_DOCUMENTATION dictionary from files in the docs directory
    """
    docs_dir = os.path.join(MODULE_DIR, "docs")
    for file in os.listdir(docs_dir):
        if not os.path.isfile(os.path.join(docs_dir, file)):
            continue

        if not file.endswith(".md"):
            continue

        name = os.path.splitext(file)[0]
        with open(os.path.join(docs_dir, file), "r", encoding="utf-8") as f:
            doc_str = f.read()

        COMMAND_DOCUMENTATION[name] = doc_str


def worker_count() -> int:
    """
    Number of worker threads the diagnostics may use, capped by CHAPLYGIN_THREADS.

    Returns:
        int: at least 1
    """
    value = os.environ.get(THREADS_ENV)
    if value is None:
        return max(1, min(4, os.cpu_count() or 1))
    try:
        return max(1, int(value))
    except ValueError:
        return 1


get_command_documentation()
