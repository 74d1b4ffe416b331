"""Contextual-bandit spectrum sharing environment.

Each step the agent sees the current and ``n`` previous demand pairs of the
two RANs and splits a pool of ``n_r`` PRBs between them. The step's cost is
the imbalance

    J = zeta * ((n_a - d_a) / d_a)**2 + (1 - zeta) * ((n_b - d_b) / d_b)**2

and the reward is ``-(1 + zeta) * J`` (``reward_form="literal"``) or ``-J``
(``reward_form="plain"``). There is no state transition: the only thing
carried between steps is the trace index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .traces import DemandTrace, TraceError

# floor on both oracle weights so the stationary point exists at zeta in {0, 1}
DEGENERATE_WEIGHT = 1e-9


class EnvError(ValueError):
    pass


@dataclass(frozen=True)
class RewardParams:
    zeta: float = 0.5
    n_r: float = 100.0
    epsilon_demand: float = 0.5
    reward_form: Literal["literal", "plain"] = "literal"

    def __post_init__(self):
        if not 0.0 <= self.zeta <= 1.0:
            raise EnvError(f"zeta {self.zeta} outside [0, 1]")
        if not self.n_r > 0:
            raise EnvError("n_r must be positive")
        if not self.epsilon_demand > 0:
            raise EnvError("epsilon_demand must be positive")
        if self.reward_form not in ("literal", "plain"):
            raise EnvError(f"unknown reward_form {self.reward_form!r}")

    def with_zeta(self, zeta: float) -> "RewardParams":
        return RewardParams(zeta, self.n_r, self.epsilon_demand, self.reward_form)


@dataclass(frozen=True, eq=False)
class Observation:
    """Demand pairs, row 0 is the current step and row k is k steps back."""

    pairs: np.ndarray

    def __post_init__(self):
        pairs = np.array(self.pairs, dtype=np.float64).reshape(-1, 2)
        pairs.setflags(write=False)
        if pairs.shape[0] < 1:
            raise EnvError("observation needs at least one demand pair")
        if np.any(pairs < 0):
            raise EnvError("observed demands must be non-negative")
        object.__setattr__(self, "pairs", pairs)

    def __len__(self):
        return self.pairs.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Observation):
            return NotImplemented
        return np.array_equal(self.pairs, other.pairs)

    @property
    def current(self) -> tuple[float, float]:
        return float(self.pairs[0, 0]), float(self.pairs[0, 1])

    def flat(self) -> np.ndarray:
        """Features ``(d_a,t, d_b,t, d_a,t-1, d_b,t-1, ...)``."""
        return self.pairs.reshape(-1)


@dataclass(frozen=True)
class Allocation:
    n_a: float
    n_b: float

    def __post_init__(self):
        if self.n_a < 0 or self.n_b < 0:
            raise EnvError(f"negative allocation ({self.n_a}, {self.n_b})")

    @classmethod
    def from_fraction(cls, f: float, n_r: float) -> "Allocation":
        n_a = f * n_r
        return cls(n_a, n_r - n_a)

    def check_pool(self, n_r: float, rtol: float = 1e-9) -> None:
        if abs(self.n_a + self.n_b - n_r) > rtol * n_r:
            raise EnvError(f"allocation ({self.n_a}, {self.n_b}) does not partition {n_r} PRBs")


@dataclass(frozen=True)
class StepResult:
    t: int
    observation: Observation
    allocation: Allocation
    imbalance: float
    reward: float
    demands: tuple[float, float]
    zeta: float


def build_observation(trace_a, trace_b, t: int, n: int) -> Observation:
    """History of ``n + 1`` demand pairs ending at ``t``.

    Steps before the start of the traces repeat the earliest pair.
    Accepts :class:`DemandTrace` objects or plain arrays.
    """
    da = _demands(trace_a)
    db = _demands(trace_b)
    if n < 0:
        raise EnvError("history length must be non-negative")
    if not 0 <= t < min(da.size, db.size):
        raise EnvError(f"step {t} outside trace of length {min(da.size, db.size)}")
    idx = np.maximum(t - np.arange(n + 1), 0)
    return Observation(np.stack([da[idx], db[idx]], axis=1))


def observation_matrix(trace_a, trace_b, n: int) -> np.ndarray:
    """Flattened observations for every step, one row per ``t``.

    Row ``t`` equals ``build_observation(trace_a, trace_b, t, n).flat()``.
    """
    da = _demands(trace_a)
    db = _demands(trace_b)
    if da.size != db.size:
        raise EnvError("trace lengths differ")
    idx = np.maximum(np.arange(da.size)[:, None] - np.arange(n + 1)[None, :], 0)
    out = np.empty((da.size, 2 * (n + 1)))
    out[:, 0::2] = da[idx]
    out[:, 1::2] = db[idx]
    return out


def _demands(trace) -> np.ndarray:
    if isinstance(trace, DemandTrace):
        return trace.demands
    return np.asarray(trace, dtype=np.float64)


def fractional_errors(
    alloc: Allocation, d_a: float, d_b: float, params: RewardParams
) -> tuple[float, float]:
    """Signed fractional surplus ``(n - d) / d`` for RAN_A and RAN_B."""
    ga = max(d_a, params.epsilon_demand)
    gb = max(d_b, params.epsilon_demand)
    return (alloc.n_a - ga) / ga, (alloc.n_b - gb) / gb


def compute_imbalance(alloc: Allocation, d_a: float, d_b: float, params: RewardParams) -> float:
    ea, eb = fractional_errors(alloc, d_a, d_b, params)
    return params.zeta * ea * ea + (1.0 - params.zeta) * eb * eb


def compute_reward(J: float, params: RewardParams) -> float:
    if J < 0:
        raise EnvError("imbalance must be non-negative")
    if params.reward_form == "plain":
        return -J
    return -J - params.zeta * J


def step(t: int, alloc: Allocation, trace_a, trace_b, params: RewardParams, n: int) -> StepResult:
    obs = build_observation(trace_a, trace_b, t, n)
    d_a, d_b = obs.current
    J = compute_imbalance(alloc, d_a, d_b, params)
    return StepResult(t, obs, alloc, J, compute_reward(J, params), (d_a, d_b), params.zeta)


def optimal_allocation(d_a: float, d_b: float, params: RewardParams) -> Allocation:
    """Closed-form minimizer of J on the line ``n_a + n_b = n_r``."""
    ga = max(d_a, params.epsilon_demand)
    gb = max(d_b, params.epsilon_demand)
    wa = max(params.zeta, DEGENERATE_WEIGHT)
    wb = max(1.0 - params.zeta, DEGENERATE_WEIGHT)
    a = wa / (ga * ga)
    b = wb / (gb * gb)
    n_r = params.n_r
    n_a = (a * ga + b * (n_r - gb)) / (a + b)
    n_a = min(max(n_a, 0.0), n_r)
    return Allocation(n_a, n_r - n_a)


def quasi_static_allocation(train_a, train_b, params: RewardParams) -> Allocation:
    """Fixed split sized to each RAN's peak demand over the training window.

    RAN_A receives its peak and RAN_B the remainder when both peaks fit;
    otherwise the pool is split in proportion to the peaks.
    """
    da = _demands(train_a)
    db = _demands(train_b)
    if da.size == 0 or db.size == 0:
        raise TraceError("quasi-static allocation needs non-empty training traces")
    p_a = float(da.max())
    p_b = float(db.max())
    n_r = params.n_r
    if p_a + p_b <= n_r:
        return Allocation(p_a, n_r - p_a)
    n_a = n_r * p_a / (p_a + p_b)
    return Allocation(n_a, n_r - n_a)
