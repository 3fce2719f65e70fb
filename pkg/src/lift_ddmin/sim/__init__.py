"""Deterministic elevator-group SUT: simulator, fault seeding, state logs."""

from .config import (BuildingConfig, CarSpec, ConfigError, FAULT_KINDS,
                     FaultConfig, PARK_FLOOR)
from .engine import SimulationError, execute_test
from .outcome import (CarSnapshot, Checkpoint, EnvState, PassengerOutcome,
                      SimOutcome, StaticState, write_env_jsonl,
                      write_outcome_csv)
from .states import DEFAULT_MIN_DWELL, checkpoint_from, detect_static_states

__all__ = [
    "BuildingConfig", "CarSpec", "ConfigError", "FAULT_KINDS", "FaultConfig",
    "PARK_FLOOR", "SimulationError", "execute_test", "CarSnapshot",
    "Checkpoint", "EnvState", "PassengerOutcome", "SimOutcome", "StaticState",
    "write_env_jsonl", "write_outcome_csv", "DEFAULT_MIN_DWELL",
    "checkpoint_from", "detect_static_states",
]
