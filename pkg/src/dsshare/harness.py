"""Simulated O-RAN control loop around the allocator.

A non-RT controller (the rApp role) issues intent policies: the weight
``zeta`` and, for learned allocators, refreshed model checkpoints. A near-RT
controller (the xApp role) turns each demand report into an integer
allocation command under the policy in force. Both run on a shared logical
step clock and talk only through immutable messages over a channel, so a
socket transport can replace :class:`InProcessChannel` without touching the
loop logic.
"""

from __future__ import annotations

import json
import logging
import math
from collections import deque
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Iterable, Iterator, Literal, Protocol

import numpy as np

from .agent import checkpoint as ckpt
from .agent.td3 import AgentConfig, NetworkParams, TrainingDiverged, train
from .env import (
    Allocation,
    RewardParams,
    StepResult,
    build_observation,
    compute_imbalance,
    compute_reward,
    fractional_errors,
)
from .metrics import MetricsRecord, Rollout, compute_metrics
from .policies import LearnedPolicy, OraclePolicy, Policy, QuasiStaticPolicy
from .traces import DemandTrace, TracePair

logger = logging.getLogger(__name__)

PolicyKind = Literal["learned", "oracle", "quasi_static"]


class HarnessError(RuntimeError):
    """Malformed message or broken session protocol."""


# --------------------------------------------------------------------------
# messages


class _Message:
    def to_record(self) -> dict:
        return asdict(self)

    @classmethod
    def from_record(cls, record: dict):
        names = [f.name for f in fields(cls)]
        missing = [n for n in names if n not in record and not _has_default(cls, n)]
        unknown = set(record) - set(names)
        if missing or unknown:
            raise HarnessError(f"{cls.__name__}: missing {missing}, unknown {sorted(unknown)}")
        return cls(**record)

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


def _has_default(cls, name):
    from dataclasses import MISSING

    f = next(f for f in fields(cls) if f.name == name)
    return f.default is not MISSING


@dataclass(frozen=True)
class IntentPolicyMsg(_Message):
    policy_id: int
    zeta: float
    effective_from: int
    checkpoint: str | None = None

    def __post_init__(self):
        if not isinstance(self.policy_id, int) or not isinstance(self.effective_from, int):
            raise HarnessError("policy_id and effective_from must be integers")
        if not (isinstance(self.zeta, (int, float)) and 0.0 <= self.zeta <= 1.0):
            raise HarnessError(f"policy zeta {self.zeta!r} outside [0, 1]")


@dataclass(frozen=True)
class DemandReportMsg(_Message):
    step: int
    d_a: float
    d_b: float

    def __post_init__(self):
        if not isinstance(self.step, (int, np.integer)) or self.step < 0:
            raise HarnessError(f"bad report step {self.step!r}")
        for v in (self.d_a, self.d_b):
            if not (isinstance(v, (int, float, np.floating)) and math.isfinite(v) and v >= 0):
                raise HarnessError(f"bad reported demand {v!r}")


@dataclass(frozen=True)
class AllocationCmdMsg(_Message):
    step: int
    n_a_int: int
    n_b_int: int


class Channel(Protocol):
    def send(self, msg) -> None: ...

    def receive(self): ...


class InProcessChannel:
    """FIFO message queue; ``receive`` returns ``None`` when empty."""

    def __init__(self):
        self._queue: deque = deque()
        self.sent = 0

    def send(self, msg) -> None:
        self._queue.append(msg)
        self.sent += 1

    def receive(self):
        return self._queue.popleft() if self._queue else None

    def __len__(self):
        return len(self._queue)


def integerize(alloc: Allocation, n_r: int) -> tuple[int, int]:
    """Round RAN_A's share to the nearest PRB; RAN_B gets the remainder."""
    n_a = int(math.floor(alloc.n_a + 0.5))
    n_a = min(max(n_a, 0), n_r)
    return n_a, n_r - n_a


def rounding_bound(alloc: Allocation, d_a: float, d_b: float, params: RewardParams, delta: float = 0.5) -> float:
    """Largest change in J from moving ``delta`` PRBs between the RANs."""
    ea, eb = fractional_errors(alloc, d_a, d_b, params)
    ga = max(d_a, params.epsilon_demand)
    gb = max(d_b, params.epsilon_demand)
    term_a = params.zeta * (2.0 * abs(ea) * delta / ga + (delta / ga) ** 2)
    term_b = (1.0 - params.zeta) * (2.0 * abs(eb) * delta / gb + (delta / gb) ** 2)
    return term_a + term_b


# --------------------------------------------------------------------------
# near-RT controller (xApp role)


class ModelRegistry:
    """Checkpoint references to networks: in-memory entries, then files."""

    def __init__(self):
        self._models: dict[str, NetworkParams] = {}

    def put(self, ref: str, net: NetworkParams) -> None:
        self._models[ref] = net

    def get(self, ref: str) -> NetworkParams:
        if ref not in self._models:
            self._models[ref] = ckpt.load(ref)[0]
        return self._models[ref]


class NearRtController:
    def __init__(
        self,
        make_policy: Callable[[IntentPolicyMsg], Policy],
        params: RewardParams,
        history_n: int,
        integerize: bool = True,
        gap_policy: Literal["hold", "error"] = "hold",
    ):
        n_r = int(round(params.n_r))
        if n_r != params.n_r:
            raise HarnessError("integer allocation commands need an integer PRB pool")
        if gap_policy not in ("hold", "error"):
            raise HarnessError(f"unknown gap_policy {gap_policy!r}")
        self.make_policy = make_policy
        self.base_params = params
        self.n_r = n_r
        self.history_n = history_n
        self.integerize = integerize
        self.gap_policy = gap_policy
        self.history: deque = deque(maxlen=history_n + 1)
        self.active: IntentPolicyMsg | None = None
        self.pending: IntentPolicyMsg | None = None
        self.policy: Policy | None = None
        self.params = params
        self.last_step: int | None = None
        self.last_alloc: Allocation | None = None
        self.gaps = 0

    def on_policy(self, msg: IntentPolicyMsg) -> None:
        if not isinstance(msg, IntentPolicyMsg):
            raise HarnessError(f"expected IntentPolicyMsg, got {type(msg).__name__}")
        latest = self.pending or self.active
        if latest is not None and msg.policy_id <= latest.policy_id:
            raise HarnessError(f"policy_id {msg.policy_id} not above {latest.policy_id}")
        if self.pending is not None:
            raise HarnessError("a policy update is already in flight")
        self.pending = msg
        if self.active is None:
            self._activate()

    def _activate(self) -> None:
        msg = self.pending
        self.pending = None
        self.policy = self.make_policy(msg)
        self.params = self.base_params.with_zeta(msg.zeta)
        self.active = msg

    def on_report(self, report: DemandReportMsg) -> tuple[AllocationCmdMsg, StepResult]:
        if not isinstance(report, DemandReportMsg):
            raise HarnessError(f"expected DemandReportMsg, got {type(report).__name__}")
        if self.active is None:
            raise HarnessError("demand report before any intent policy")
        step = int(report.step)
        gap = False
        if self.last_step is not None:
            if step <= self.last_step:
                raise HarnessError(f"report step {step} not after {self.last_step}")
            if step > self.last_step + 1:
                if self.gap_policy == "error":
                    raise HarnessError(f"reports {self.last_step + 1}..{step - 1} missing")
                logger.warning("reports %d..%d missing; holding last allocation", self.last_step + 1, step - 1)
                self.gaps += 1
                gap = True
        if self.pending is not None and step >= self.pending.effective_from:
            self._activate()

        self.history.append((float(report.d_a), float(report.d_b)))
        hist = np.array(self.history)
        obs = build_observation(hist[:, 0], hist[:, 1], len(hist) - 1, self.history_n)
        if gap and self.last_alloc is not None:
            alloc = self.last_alloc
        else:
            alloc = self.policy.allocate(obs, self.params)
        alloc.check_pool(self.params.n_r)
        n_a_int, n_b_int = integerize(alloc, self.n_r)
        self.last_alloc = alloc
        applied = Allocation(float(n_a_int), float(n_b_int)) if self.integerize else alloc
        d_a, d_b = obs.current
        J = compute_imbalance(applied, d_a, d_b, self.params)
        result = StepResult(step, obs, applied, J, compute_reward(J, self.params), (d_a, d_b), self.params.zeta)
        self.last_step = step
        return AllocationCmdMsg(step, n_a_int, n_b_int), result


def run_near_rt_loop(
    policies: Channel, reports: Iterable[DemandReportMsg], controller: NearRtController
) -> Iterator[tuple[AllocationCmdMsg, StepResult]]:
    """Process reports in order, applying any delivered policy between steps."""
    for report in reports:
        while (msg := policies.receive()) is not None:
            controller.on_policy(msg)
        yield controller.on_report(report)


# --------------------------------------------------------------------------
# non-RT controller (rApp role)


class IntentRule(Protocol):
    def __call__(self, zeta: float, window: list[StepResult]) -> float: ...


def static_intent(zeta: float, window: list[StepResult]) -> float:
    return zeta


@dataclass(frozen=True)
class DeficitIntent:
    """Raise zeta when RAN_A was under-provisioned in too many recent steps."""

    threshold: float = 0.5
    increment: float = 0.1
    cap: float = 1.0

    def __call__(self, zeta: float, window: list[StepResult]) -> float:
        if not window:
            return zeta
        deficit = np.mean([r.allocation.n_a < r.demands[0] for r in window])
        if deficit > self.threshold:
            return min(round(zeta + self.increment, 12), self.cap)
        return zeta


def make_intent_rule(name: str, **kwargs) -> IntentRule:
    if name == "static":
        return static_intent
    if name == "deficit":
        return DeficitIntent(**kwargs)
    raise HarnessError(f"unknown intent rule {name!r}")


class NonRtController:
    """Slow loop: adjusts zeta per the intent rule and optionally retrains."""

    def __init__(
        self,
        initial_zeta: float,
        period: int = 1000,
        rule: IntentRule = static_intent,
        checkpoint: str | None = None,
        retrain_steps: int = 0,
        agent_cfg: AgentConfig | None = None,
        reward_params: RewardParams | None = None,
        registry: ModelRegistry | None = None,
    ):
        if period < 1:
            raise HarnessError("non-RT period must be at least one step")
        self.zeta = initial_zeta
        self.period = period
        self.rule = rule
        self.checkpoint = checkpoint
        self.retrain_steps = retrain_steps
        self.agent_cfg = agent_cfg
        self.reward_params = reward_params
        self.registry = registry
        self.next_id = 0
        self.reports: list[tuple[float, float]] = []
        self.warnings: list[str] = []

    def _emit(self, step: int) -> IntentPolicyMsg:
        msg = IntentPolicyMsg(self.next_id, self.zeta, step, self.checkpoint)
        self.next_id += 1
        return msg

    def initial_policy(self) -> IntentPolicyMsg:
        return self._emit(0)

    def observe(self, report: DemandReportMsg) -> None:
        self.reports.append((float(report.d_a), float(report.d_b)))

    def tick(self, step: int, window: list[StepResult]) -> IntentPolicyMsg | None:
        """One slow-loop decision; at most one message."""
        new_zeta = self.rule(self.zeta, window)
        changed = new_zeta != self.zeta
        self.zeta = new_zeta
        refreshed = self._retrain(step) if self.retrain_steps > 0 else False
        if changed or refreshed:
            return self._emit(step)
        return None

    def _retrain(self, step: int) -> bool:
        cfg = self.agent_cfg
        if cfg is None or self.registry is None or self.reward_params is None:
            raise HarnessError("retraining needs an agent config, reward params and a registry")
        data = np.array(self.reports)
        if len(data) <= cfg.history_n:
            return False
        pair = TracePair(DemandTrace("A", 1.0, data[:, 0]), DemandTrace("B", 1.0, data[:, 1], "synthetic"))
        init = self.registry.get(self.checkpoint) if self.checkpoint else None
        try:
            net, _ = train(pair, self.reward_params.with_zeta(self.zeta), cfg, self.retrain_steps, init=init)
        except TrainingDiverged as exc:
            msg = f"retraining at step {step} diverged ({exc}); keeping previous checkpoint"
            logger.warning(msg)
            self.warnings.append(msg)
            return False
        ref = f"retrained-{step}"
        self.registry.put(ref, net)
        self.checkpoint = ref
        return True


def run_non_rt_loop(results: Iterable[StepResult], controller: NonRtController) -> Iterator[IntentPolicyMsg]:
    """Initial policy, then one tick every ``controller.period`` logged steps.

    A tick fires when the first result of a new period arrives, so no policy
    is emitted after the last step of the stream (nothing could use it).
    """
    yield controller.initial_policy()
    window: list[StepResult] = []
    for result in results:
        if len(window) == controller.period:
            msg = controller.tick(result.t, window)
            window = []
            if msg is not None:
                yield msg
        window.append(result)


# --------------------------------------------------------------------------
# sessions


@dataclass(frozen=True)
class SessionConfig:
    reward: RewardParams = field(default_factory=RewardParams)
    history_n: int = 4
    period: int = 1000
    integerize: bool = True
    gap_policy: Literal["hold", "error"] = "hold"
    intent_rule: str = "static"
    intent_threshold: float = 0.5
    intent_increment: float = 0.1
    intent_cap: float = 1.0
    non_rt: bool = True
    retrain_steps: int = 0


@dataclass
class SessionLog:
    kind: str
    commands: list[AllocationCmdMsg]
    results: list[StepResult]
    policies: list[IntentPolicyMsg]
    metrics: MetricsRecord
    message_counts: dict[str, int]
    warnings: list[str]

    def records(self) -> list[dict]:
        out = []
        for cmd, res in zip(self.commands, self.results):
            out.append(
                {
                    "step": cmd.step,
                    "d_a": res.demands[0],
                    "d_b": res.demands[1],
                    "n_a_int": cmd.n_a_int,
                    "n_b_int": cmd.n_b_int,
                    "zeta": res.zeta,
                    "J": res.imbalance,
                    "reward": res.reward,
                }
            )
        return out

    def to_jsonl(self) -> str:
        return "".join(json.dumps(rec) + "\n" for rec in self.records())

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl())

    def imbalances(self) -> np.ndarray:
        return np.array([r.imbalance for r in self.results])

    def zeta_timeline(self) -> np.ndarray:
        return np.array([r.zeta for r in self.results])


def read_session_log(path: str | Path) -> list[dict]:
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]


def run_session(
    traces: TracePair,
    kind: PolicyKind,
    cfg: SessionConfig,
    net: NetworkParams | None = None,
    agent_cfg: AgentConfig | None = None,
    quasi_static_from: TracePair | None = None,
) -> SessionLog:
    """Play ``traces`` through the non-RT / near-RT loop with one policy kind.

    Learned sessions need ``net``. The quasi-static split is sized from
    ``quasi_static_from`` (the played traces when omitted).
    """
    registry = ModelRegistry()
    if kind == "learned":
        if net is None:
            raise HarnessError("learned session needs trained networks")
        registry.put("initial", net)

        def make_policy(msg: IntentPolicyMsg) -> Policy:
            return LearnedPolicy(registry.get(msg.checkpoint or "initial"))

    elif kind == "oracle":
        oracle = OraclePolicy()

        def make_policy(msg):
            return oracle

    elif kind == "quasi_static":
        static = QuasiStaticPolicy.from_traces(quasi_static_from or traces, cfg.reward)

        def make_policy(msg):
            return static

    else:
        raise HarnessError(f"unknown policy kind {kind!r}")

    rule = make_intent_rule(
        cfg.intent_rule, threshold=cfg.intent_threshold, increment=cfg.intent_increment, cap=cfg.intent_cap
    ) if cfg.intent_rule != "static" else static_intent
    non_rt = NonRtController(
        cfg.reward.zeta,
        cfg.period,
        rule,
        checkpoint="initial" if kind == "learned" else None,
        retrain_steps=cfg.retrain_steps if kind == "learned" else 0,
        agent_cfg=agent_cfg,
        reward_params=cfg.reward,
        registry=registry,
    )
    attach_non_rt = kind == "learned" and cfg.non_rt
    near_rt = NearRtController(make_policy, cfg.reward, cfg.history_n, cfg.integerize, cfg.gap_policy)
    policy_channel = InProcessChannel()
    report_channel = InProcessChannel()
    command_channel = InProcessChannel()

    policies = [non_rt.initial_policy()]
    policy_channel.send(policies[0])
    commands: list[AllocationCmdMsg] = []
    results: list[StepResult] = []
    window: list[StepResult] = []
    da = traces.a.demands
    db = traces.b.demands
    for t in range(len(traces)):
        if attach_non_rt and t > 0 and t % cfg.period == 0:
            msg = non_rt.tick(t, window)
            window = []
            if msg is not None:
                policies.append(msg)
                policy_channel.send(msg)
        report_channel.send(DemandReportMsg(t, float(da[t]), float(db[t])))
        report = report_channel.receive()
        non_rt.observe(report)
        for cmd, res in run_near_rt_loop(policy_channel, [report], near_rt):
            command_channel.send(cmd)
            commands.append(command_channel.receive())
            results.append(res)
            window.append(res)

    rollout = Rollout(
        kind,
        np.array([r.demands[0] for r in results]),
        np.array([r.demands[1] for r in results]),
        np.array([r.allocation.n_a for r in results]),
        np.array([r.allocation.n_b for r in results]),
        np.array([r.imbalance for r in results]),
        np.array([r.reward for r in results]),
        np.array([r.zeta for r in results]),
    )
    counts = {"reports": report_channel.sent, "commands": command_channel.sent, "policies": policy_channel.sent}
    return SessionLog(
        kind, commands, results, policies, compute_metrics(rollout, cfg.reward), counts,
        non_rt.warnings + [f"{near_rt.gaps} report gap(s)"] * bool(near_rt.gaps),
    )
