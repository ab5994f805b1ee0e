"""Spiking neural network simulation and circuit compilation."""

from .engine import (
    CoinPlan,
    ExecutionTrace,
    InputSchedule,
    InsufficientHistory,
    detect_state_cycle,
    fire_probability,
    potential,
    run,
    step,
)
from .model import (
    BuildReport,
    Gate,
    InvalidNetwork,
    Kind,
    Mode,
    Network,
    NetworkBuilder,
    Neuron,
    Sign,
    Synapse,
    Violation,
    dumps,
    load,
    loads,
    save,
    validate,
)

__all__ = [
    "CoinPlan",
    "ExecutionTrace",
    "InputSchedule",
    "InsufficientHistory",
    "detect_state_cycle",
    "fire_probability",
    "potential",
    "run",
    "step",
    "BuildReport",
    "Gate",
    "InvalidNetwork",
    "Kind",
    "Mode",
    "Network",
    "NetworkBuilder",
    "Neuron",
    "Sign",
    "Synapse",
    "Violation",
    "dumps",
    "load",
    "loads",
    "save",
    "validate",
]

__version__ = "0.1.0"
