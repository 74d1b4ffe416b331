"""Dynamic spectrum sharing between two RANs with a TD3 contextual-bandit allocator."""

from .agent import BACKEND
from .agent.td3 import AgentConfig, evaluate, train
from .env import (
    Allocation,
    Observation,
    RewardParams,
    StepResult,
    build_observation,
    compute_imbalance,
    compute_reward,
    optimal_allocation,
    quasi_static_allocation,
    step,
)
from .traces import (
    DciRecord,
    DemandTrace,
    SynthConfig,
    TracePair,
    aggregate_dci_records,
    load_sample_trace,
    parse_dci_log,
    synthesize_trace,
    window_trace,
)
from .harness import SessionConfig, run_session

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AgentConfig",
    "Allocation",
    "DciRecord",
    "DemandTrace",
    "Observation",
    "RewardParams",
    "SessionConfig",
    "StepResult",
    "SynthConfig",
    "TracePair",
    "aggregate_dci_records",
    "build_observation",
    "compute_imbalance",
    "compute_reward",
    "evaluate",
    "load_sample_trace",
    "optimal_allocation",
    "parse_dci_log",
    "quasi_static_allocation",
    "run_session",
    "step",
    "synthesize_trace",
    "train",
    "window_trace",
]
