"""Numerical verifier for the duality between Lagrangian and Hamiltonian
data on (generalized) Lie algebroids.

The package parses a plain-text scenario describing the bundle pair, the
algebroid structure, one or both potentials, and optional connection /
transport / mechanics data; builds exact-derivative coordinate fields for
both sides; and evaluates every catalogued duality relation as a residual
over deterministically sampled points.
"""

from .algebroid import check_gla
from .fixtures import fixture_model, fixture_names, fixture_text
from .geometry import Geometry, SIDE_E, SIDE_ESTAR
from .legendre import (
    LegendrePair,
    hamiltonian_from_lagrangian,
    lagrangian_from_hamiltonian,
    phi_H,
    phi_L,
)
from .registry import CATALOG, catalog_codes, run_checks
from .report import CheckRow, Report
from .scenario import (
    ScenarioError,
    ScenarioModel,
    load_scenario,
    parse_scenario_text,
)

__version__ = "1.0.0"

__all__ = [
    "CATALOG",
    "CheckRow",
    "Geometry",
    "LegendrePair",
    "Report",
    "ScenarioError",
    "ScenarioModel",
    "SIDE_E",
    "SIDE_ESTAR",
    "__version__",
    "catalog_codes",
    "check_gla",
    "fixture_model",
    "fixture_names",
    "fixture_text",
    "hamiltonian_from_lagrangian",
    "lagrangian_from_hamiltonian",
    "load_scenario",
    "parse_scenario_text",
    "phi_H",
    "phi_L",
    "run_checks",
]
