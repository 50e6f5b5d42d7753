"""Agent-based simulation of collection decay under continuous damage and random adverse events."""

from .domain import (
    AdverseEventSpec,
    ConfigError,
    ContinuousProcessSpec,
    InitialConditionSpec,
    Range,
    ScenarioConfig,
    load_config,
    validate_config,
)
from .engine import EnsembleResult, RunResult, run_ensemble, simulate_run

__all__ = [
    "AdverseEventSpec",
    "ConfigError",
    "ContinuousProcessSpec",
    "EnsembleResult",
    "InitialConditionSpec",
    "Range",
    "RunResult",
    "ScenarioConfig",
    "load_config",
    "run_ensemble",
    "simulate_run",
    "validate_config",
]

__version__ = "0.1.0"
