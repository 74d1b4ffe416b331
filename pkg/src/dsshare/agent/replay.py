from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Transition:
    observation: np.ndarray
    action: float
    reward: float

    def __post_init__(self):
        if not 0.0 <= self.action <= 1.0:
            raise ValueError(f"action fraction {self.action} outside [0, 1]")


@dataclass
class Batch:
    observations: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray

    def __len__(self):
        return self.actions.size


class ReplayBuffer:
    """Fixed-capacity FIFO ring of bandit transitions (no next state)."""

    def __init__(self, capacity: int, obs_dim: int, seed: int | np.random.Generator = 0):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros(capacity)
        self.rewards = np.zeros(capacity)
        self.size = 0
        self._next = 0
        self.rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    def __len__(self):
        return self.size

    def add(self, observation, action: float, reward: float) -> None:
        i = self._next
        self.obs[i] = observation
        self.actions[i] = action
        self.rewards[i] = reward
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def push(self, tr: Transition) -> None:
        self.add(tr.observation, tr.action, tr.reward)

    def transitions(self) -> list[Transition]:
        """Stored transitions, oldest first."""
        start = self._next if self.size == self.capacity else 0
        order = (start + np.arange(self.size)) % self.capacity
        return [Transition(self.obs[i].copy(), float(self.actions[i]), float(self.rewards[i])) for i in order]

    def sample(self, batch_size: int) -> Batch:
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = self.rng.integers(0, self.size, batch_size)
        return Batch(self.obs[idx], self.actions[idx], self.rewards[idx])
