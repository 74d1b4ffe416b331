"""TD3 adapted to the single-step (contextual bandit) allocation problem.

The actor maps a scaled observation to the fraction ``f`` of the pool given
to RAN_A. Both critics regress ``Q(o, f)`` on the immediate reward; with no
next state the usual ``gamma * min(Q1', Q2')`` bootstrap term is identically
zero, so the critic target is the reward itself. Delayed actor updates,
exploration noise and Polyak-averaged target networks are kept as in TD3.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from ..env import Allocation, Observation, RewardParams, compute_imbalance, compute_reward, observation_matrix
from ..traces import TracePair
from . import networks as nn
from .replay import Batch, ReplayBuffer

logger = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    def __init__(self, step: int, what: str):
        super().__init__(f"training diverged at step {step}: {what}")
        self.step = step


@dataclass(frozen=True)
class AgentConfig:
    hidden_sizes: tuple[int, int] = (64, 64)
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    batch_size: int = 64
    buffer_capacity: int = 50_000
    exploration_noise_std: float = 0.1
    target_smoothing_std: float = 0.05
    target_noise_clip: float = 0.1
    policy_delay: int = 2
    tau: float = 0.01
    # gamma and horizon_T follow the discounted-return definition; they are
    # validated and echoed in checkpoints but the bandit objective uses neither
    gamma: float = 0.0
    horizon_T: int = 1000
    seed: int = 0
    history_n: int = 4

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if len(self.hidden_sizes) != 2 or min(self.hidden_sizes) < 1:
            raise ValueError("hidden_sizes must be two positive integers")
        if self.actor_lr < 0 or self.critic_lr < 0:
            raise ValueError("learning rates must be non-negative")
        if self.batch_size < 1 or self.buffer_capacity < 1 or self.policy_delay < 1:
            raise ValueError("batch_size, buffer_capacity and policy_delay must be positive")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must lie in (0, 1]")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if self.history_n < 0 or self.horizon_T < 1:
            raise ValueError("history_n must be >= 0 and horizon_T >= 1")
        if min(self.exploration_noise_std, self.target_smoothing_std, self.target_noise_clip) < 0:
            raise ValueError("noise parameters must be non-negative")

    @property
    def obs_dim(self) -> int:
        return 2 * (self.history_n + 1)

    @property
    def actor_sizes(self) -> tuple[int, int, int, int]:
        return (self.obs_dim, *self.hidden_sizes, 1)

    @property
    def critic_sizes(self) -> tuple[int, int, int, int]:
        return (self.obs_dim + 1, *self.hidden_sizes, 1)


@dataclass
class NetworkParams:
    actor: np.ndarray
    critic1: np.ndarray
    critic2: np.ndarray
    actor_target: np.ndarray
    critic1_target: np.ndarray
    critic2_target: np.ndarray
    actor_sizes: tuple[int, int, int, int]
    critic_sizes: tuple[int, int, int, int]
    n_r: float = 100.0

    NAMES = ("actor", "critic1", "critic2", "actor_target", "critic1_target", "critic2_target")

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in self.NAMES}

    def copy(self) -> "NetworkParams":
        return replace(self, **{k: v.copy() for k, v in self.arrays().items()})

    def frozen(self) -> "NetworkParams":
        out = self.copy()
        for arr in out.arrays().values():
            arr.setflags(write=False)
        return out

    def equal(self, other: "NetworkParams") -> bool:
        return (
            self.actor_sizes == other.actor_sizes
            and self.critic_sizes == other.critic_sizes
            and self.n_r == other.n_r
            and all(np.array_equal(a, b) for a, b in zip(self.arrays().values(), other.arrays().values()))
        )


def init_params(cfg: AgentConfig, n_r: float, rng: np.random.Generator, twin_init: bool = False) -> NetworkParams:
    """Fresh networks; targets start as exact copies of the online networks.

    ``twin_init`` gives both critics the same initial weights.
    """
    actor = nn.init_mlp(cfg.actor_sizes, rng)
    critic1 = nn.init_mlp(cfg.critic_sizes, rng)
    critic2 = critic1.copy() if twin_init else nn.init_mlp(cfg.critic_sizes, rng)
    return NetworkParams(
        actor, critic1, critic2, actor.copy(), critic1.copy(), critic2.copy(),
        cfg.actor_sizes, cfg.critic_sizes, float(n_r),
    )


# --------------------------------------------------------------------------
# acting


def actor_fraction(params: NetworkParams, features: np.ndarray) -> np.ndarray:
    """Deterministic actor output in ``[0, 1]`` for unscaled feature rows."""
    x = np.atleast_2d(features) / params.n_r
    z, _ = nn.forward(params.actor, params.actor_sizes, x)
    return nn.sigmoid(z)


def fraction_from_output(raw: float, noise: float = 0.0) -> float:
    value = raw + noise
    if not np.isfinite(value):
        raise TrainingDiverged(-1, f"non-finite actor output {raw!r}")
    return min(max(value, 0.0), 1.0)


def select_action(
    obs: Observation,
    params: NetworkParams,
    explore: bool = False,
    noise_std: float = 0.0,
    rng: np.random.Generator | None = None,
) -> tuple[float, Allocation]:
    """Pool fraction for RAN_A and the matching allocation."""
    expected = params.actor_sizes[0] // 2
    if len(obs) != expected:
        raise ValueError(f"observation has {len(obs)} pairs, network expects {expected}")
    raw = float(actor_fraction(params, obs.flat())[0])
    noise = 0.0
    if explore and noise_std > 0:
        if rng is None:
            raise ValueError("exploration needs an rng")
        noise = float(rng.normal(0.0, noise_std))
    f = fraction_from_output(raw, noise)
    return f, Allocation.from_fraction(f, params.n_r)


# --------------------------------------------------------------------------
# losses and gradients


def critic_inputs(batch: Batch, n_r: float) -> np.ndarray:
    return np.column_stack([batch.observations / n_r, batch.actions])


def critic_loss_grad(theta: np.ndarray, sizes, x: np.ndarray, rewards: np.ndarray):
    """MSE between ``Q(x)`` and the immediate rewards, with its gradient."""
    q, cache = nn.forward(theta, sizes, x)
    diff = q - rewards
    loss = float(np.mean(diff * diff))
    grad, _ = nn.backward(theta, sizes, cache, 2.0 * diff / diff.size)
    return loss, grad, q


def actor_loss_grad(actor: np.ndarray, actor_sizes, critic: np.ndarray, critic_sizes, x_obs: np.ndarray):
    """``-mean Q1(o, actor(o))`` and its gradient w.r.t. the actor weights."""
    z, cache_a = nn.forward(actor, actor_sizes, x_obs)
    f = nn.sigmoid(z)
    xc = np.column_stack([x_obs, f])
    q, cache_c = nn.forward(critic, critic_sizes, xc)
    batch = q.size
    loss = -float(np.mean(q))
    _, dxc = nn.backward(critic, critic_sizes, cache_c, np.full(batch, -1.0 / batch), want_dx=True)
    dz = dxc[:, -1] * f * (1.0 - f)
    grad, _ = nn.backward(actor, actor_sizes, cache_a, dz)
    return loss, grad


def soft_update(target: np.ndarray, online: np.ndarray, tau: float) -> None:
    if tau == 1.0:
        target[...] = online
        return
    target *= 1.0 - tau
    target += tau * online


class TD3Learner:
    """Online networks, targets and optimizer state during training."""

    def __init__(self, params: NetworkParams, cfg: AgentConfig):
        self.params = params
        self.cfg = cfg
        self.critic_opts = [
            nn.Adam(params.critic1.size, cfg.critic_lr),
            nn.Adam(params.critic2.size, cfg.critic_lr),
        ]
        self.actor_opt = nn.Adam(params.actor.size, cfg.actor_lr)
        self.critic_steps = 0
        self.actor_steps = 0

    def critic_update(self, batch: Batch) -> tuple[float, float]:
        p = self.params
        x = critic_inputs(batch, p.n_r)
        # bandit target: the reward alone, no next-state value
        target = batch.rewards
        losses = []
        for theta, opt in zip((p.critic1, p.critic2), self.critic_opts):
            loss, grad, _ = critic_loss_grad(theta, p.critic_sizes, x, target)
            if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
                raise TrainingDiverged(self.critic_steps, "non-finite critic loss")
            if opt.lr > 0:
                opt.step(theta, grad)
            losses.append(loss)
        self.critic_steps += 1
        return losses[0], losses[1]

    def actor_update(self, batch: Batch) -> float:
        p = self.params
        loss, grad = actor_loss_grad(p.actor, p.actor_sizes, p.critic1, p.critic_sizes, batch.observations / p.n_r)
        if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
            raise TrainingDiverged(self.critic_steps, "non-finite actor loss")
        if self.actor_opt.lr > 0:
            self.actor_opt.step(p.actor, grad)
        tau = self.cfg.tau
        soft_update(p.actor_target, p.actor, tau)
        soft_update(p.critic1_target, p.critic1, tau)
        soft_update(p.critic2_target, p.critic2, tau)
        self.actor_steps += 1
        return loss

    def maybe_actor_update(self, batch: Batch) -> float | None:
        """Actor step after every ``policy_delay``-th critic step."""
        if self.critic_steps % self.cfg.policy_delay == 0:
            return self.actor_update(batch)
        return None


# --------------------------------------------------------------------------
# training


@dataclass
class TrainingLog:
    step: np.ndarray
    t_index: np.ndarray
    fraction: np.ndarray
    reward: np.ndarray
    critic1_loss: np.ndarray
    critic2_loss: np.ndarray
    actor_loss: np.ndarray
    backend: str = field(default=nn.kernels.BACKEND)

    COLUMNS = ("step", "t_index", "fraction", "reward", "critic1_loss", "critic2_loss", "actor_loss")

    @classmethod
    def empty(cls, steps: int) -> "TrainingLog":
        nan = np.full(steps, np.nan)
        return cls(np.arange(steps), np.zeros(steps, dtype=np.int64), nan.copy(), nan.copy(), nan.copy(), nan.copy(), nan.copy())

    def __len__(self):
        return self.step.size

    def to_csv(self) -> str:
        def fmt(v):
            return "" if np.isnan(v) else repr(float(v))

        lines = [",".join(self.COLUMNS)]
        for i in range(len(self)):
            lines.append(
                f"{int(self.step[i])},{int(self.t_index[i])},{fmt(self.fraction[i])},{fmt(self.reward[i])},"
                f"{fmt(self.critic1_loss[i])},{fmt(self.critic2_loss[i])},{fmt(self.actor_loss[i])}"
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "TrainingLog":
        rows = [line.split(",") for line in text.strip().splitlines()[1:]]
        log = cls.empty(len(rows))
        for i, row in enumerate(rows):
            log.step[i] = int(row[0])
            log.t_index[i] = int(row[1])
            for j, name in enumerate(cls.COLUMNS[2:], start=2):
                getattr(log, name)[i] = float(row[j]) if row[j] else np.nan
        return log

    def moving_reward(self, window: int = 100) -> np.ndarray:
        if len(self) == 0:
            return np.zeros(0)
        kernel = np.ones(min(window, len(self))) / min(window, len(self))
        return np.convolve(self.reward, kernel, mode="valid")


def _streams(seed: int):
    init_ss, env_ss, replay_ss = np.random.SeedSequence(seed).spawn(3)
    return np.random.default_rng(init_ss), np.random.default_rng(env_ss), np.random.default_rng(replay_ss)


def train(
    traces: TracePair,
    params: RewardParams,
    cfg: AgentConfig,
    steps: int,
    init: NetworkParams | None = None,
) -> tuple[NetworkParams, TrainingLog]:
    """Train on contexts drawn uniformly from ``traces``.

    The first ``batch_size`` actions are uniform on ``[0, 1]``. From then on
    actions are the actor output plus Gaussian exploration noise, every step
    updates both critics, and every ``policy_delay``-th step updates the
    actor and the targets. ``init`` warm-starts from existing networks.
    """
    if len(traces) <= cfg.history_n:
        raise ValueError("training traces must be longer than history_n")
    rng_init, rng_env, rng_replay = _streams(cfg.seed)
    net = init_params(cfg, params.n_r, rng_init) if init is None else init.copy()
    if net.actor_sizes != cfg.actor_sizes or net.critic_sizes != cfg.critic_sizes:
        raise ValueError("initial networks do not match the agent config")
    net.n_r = float(params.n_r)
    learner = TD3Learner(net, cfg)
    buffer = ReplayBuffer(cfg.buffer_capacity, cfg.obs_dim, rng_replay)
    feats = observation_matrix(traces.a, traces.b, cfg.history_n)
    da = traces.a.demands
    db = traces.b.demands
    log = TrainingLog.empty(steps)
    n_r = params.n_r
    for k in range(steps):
        t = int(rng_env.integers(len(traces)))
        x = feats[t]
        if k < cfg.batch_size:
            f = float(rng_env.uniform(0.0, 1.0))
        else:
            raw = float(actor_fraction(net, x)[0])
            noise = float(rng_env.normal(0.0, cfg.exploration_noise_std)) if cfg.exploration_noise_std > 0 else 0.0
            try:
                f = fraction_from_output(raw, noise)
            except TrainingDiverged as exc:
                raise TrainingDiverged(k, "non-finite actor output") from exc
        alloc = Allocation.from_fraction(f, n_r)
        J = compute_imbalance(alloc, da[t], db[t], params)
        r = compute_reward(J, params)
        buffer.add(x, f, r)
        log.t_index[k] = t
        log.fraction[k] = f
        log.reward[k] = r
        if len(buffer) >= cfg.batch_size:
            batch = buffer.sample(cfg.batch_size)
            try:
                log.critic1_loss[k], log.critic2_loss[k] = learner.critic_update(batch)
                actor_loss = learner.maybe_actor_update(batch)
            except TrainingDiverged as exc:
                raise TrainingDiverged(k, str(exc)) from exc
            if actor_loss is not None:
                log.actor_loss[k] = actor_loss
    return net.frozen(), log


# --------------------------------------------------------------------------
# evaluation


def evaluate(
    params: NetworkParams | None,
    eval_traces: TracePair,
    reward_params: RewardParams,
    cfg: AgentConfig,
    train_traces: TracePair | None = None,
):
    """Roll the learned, quasi-static and oracle policies over ``eval_traces``.

    The quasi-static split is sized from ``train_traces`` peaks (the eval
    window's when omitted). Returns an :class:`~dsshare.policies.EvaluationResult`.
    """
    from ..policies import LearnedPolicy, OraclePolicy, QuasiStaticPolicy, evaluate_policies

    reference = train_traces if train_traces is not None else eval_traces
    policies = {}
    if params is not None:
        policies["learned"] = LearnedPolicy(params)
    policies["quasi_static"] = QuasiStaticPolicy.from_traces(reference, reward_params)
    policies["oracle"] = OraclePolicy()
    return evaluate_policies(policies, eval_traces, reward_params, cfg.history_n)
