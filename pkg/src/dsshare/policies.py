"""Allocation policies shared by offline evaluation and the RIC harness."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Protocol

import numpy as np

from .agent.td3 import NetworkParams, select_action
from .env import (
    Allocation,
    Observation,
    RewardParams,
    build_observation,
    compute_imbalance,
    compute_reward,
    optimal_allocation,
    quasi_static_allocation,
)
from .metrics import MetricsRecord, Rollout, compute_metrics
from .traces import TracePair


class Policy(Protocol):
    def allocate(self, obs: Observation, params: RewardParams) -> Allocation: ...


class LearnedPolicy:
    """Deterministic actor of a trained agent."""

    def __init__(self, net: NetworkParams):
        self.net = net

    def allocate(self, obs, params):
        if params.n_r != self.net.n_r:
            raise ValueError(f"network trained for n_r={self.net.n_r}, asked for {params.n_r}")
        return select_action(obs, self.net)[1]


class OraclePolicy:
    """Per-step minimizer of the imbalance given the true current demands."""

    def allocate(self, obs, params):
        return optimal_allocation(*obs.current, params)


class QuasiStaticPolicy:
    """Peak-sized split held fixed for every step."""

    def __init__(self, allocation: Allocation):
        self.allocation = allocation

    @classmethod
    def from_traces(cls, traces: TracePair, params: RewardParams) -> "QuasiStaticPolicy":
        return cls(quasi_static_allocation(traces.a, traces.b, params))

    def allocate(self, obs, params):
        return self.allocation


def rollout(policy: Policy, name: str, traces: TracePair, params: RewardParams, n: int) -> Rollout:
    size = len(traces)
    cols = {k: np.empty(size) for k in ("d_a", "d_b", "n_a", "n_b", "J", "reward")}
    for t in range(size):
        obs = build_observation(traces.a, traces.b, t, n)
        d_a, d_b = obs.current
        alloc = policy.allocate(obs, params)
        J = compute_imbalance(alloc, d_a, d_b, params)
        cols["d_a"][t] = d_a
        cols["d_b"][t] = d_b
        cols["n_a"][t] = alloc.n_a
        cols["n_b"][t] = alloc.n_b
        cols["J"][t] = J
        cols["reward"][t] = compute_reward(J, params)
    return Rollout(
        name, cols["d_a"], cols["d_b"], cols["n_a"], cols["n_b"], cols["J"], cols["reward"],
        np.full(size, params.zeta),
    )


@dataclass(frozen=True)
class EvaluationResult:
    rollouts: dict[str, Rollout]
    metrics: dict[str, MetricsRecord]

    def table(self) -> list[MetricsRecord]:
        return list(self.metrics.values())


def evaluate_policies(
    policies: Mapping[str, Policy], traces: TracePair, params: RewardParams, n: int
) -> EvaluationResult:
    rollouts = {name: rollout(p, name, traces, params, n) for name, p in policies.items()}
    metrics = {name: compute_metrics(r, params) for name, r in rollouts.items()}
    return EvaluationResult(rollouts, metrics)
