"""Configuration, initial data, scenarios, snapshots, and the command line."""

from .config import SimulationConfig
from .initial_data import generate_initial_data, random_trig_field
from .scenarios import SCENARIOS, RunArtifacts, run_scenario, run_simulation
from .snapshot import load_snapshot, write_snapshot

__all__ = [
    "SCENARIOS",
    "RunArtifacts",
    "SimulationConfig",
    "generate_initial_data",
    "load_snapshot",
    "random_trig_field",
    "run_scenario",
    "run_simulation",
    "write_snapshot",
]
