"""TD3 contextual-bandit allocation agent."""

from .kernels import BACKEND
from .replay import Batch, ReplayBuffer, Transition
from .td3 import (
    AgentConfig,
    NetworkParams,
    TD3Learner,
    TrainingDiverged,
    TrainingLog,
    actor_fraction,
    evaluate,
    init_params,
    select_action,
    train,
)

__all__ = [
    "BACKEND",
    "AgentConfig",
    "Batch",
    "NetworkParams",
    "ReplayBuffer",
    "TD3Learner",
    "TrainingDiverged",
    "TrainingLog",
    "Transition",
    "actor_fraction",
    "evaluate",
    "init_params",
    "select_action",
    "train",
]
