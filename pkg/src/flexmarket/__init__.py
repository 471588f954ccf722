"""Deterministic agent-based simulator of a cascaded electricity market:
day-ahead clearing, real-time balancing and monetary settlement, built to
compare real-time pricing against market-integrated (exclusive-group)
demand flexibility.
"""

from .engine import Simulation, SimulationReport, run_simulation
from .scenario import (
    Scenario,
    default_scenario,
    load_scenario,
    save_scenario,
    scenario_hash,
)

__all__ = [
    "Simulation",
    "SimulationReport",
    "run_simulation",
    "Scenario",
    "default_scenario",
    "load_scenario",
    "save_scenario",
    "scenario_hash",
]

__version__ = "0.1.0"
