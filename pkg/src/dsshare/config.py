"""Experiment configuration: one TOML file, every key optional.

Unknown sections or keys are rejected by name so typos never fall back to a
default silently. ``default_config_text()`` returns the full documented
default set.
"""

from __future__ import annotations

import copy
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .agent.td3 import AgentConfig
from .env import RewardParams
from .harness import SessionConfig
from .traces import SynthConfig


class ConfigError(ValueError):
    pass


DEFAULTS: dict[str, dict[str, Any]] = {
    "run": {"out_dir": "runs/default"},
    "traces": {
        # RAN_A source: "" uses the bundled sample trace
        "source": "",
        "source_format": "trace",  # "trace" or "dci"
        "dci_delimiter": ",",
        "dci_strict": False,
        "window": 1.0,
        # "source" plays the source as RAN_A; "synthetic" bootstraps RAN_A too
        "a_mode": "synthetic",
        # prebuilt trace files; when both are set they replace the above
        "trace_a": "",
        "trace_b": "",
        "split": 0.8,
    },
    "synth": {
        "block_length": 50,
        "ar_coefficient": 0.8,
        "noise_scale": 0.05,
        "length": 10000,
        "seed_a": 11,
        "seed_b": 12,
    },
    "reward": {"zeta": 0.5, "n_r": 100.0, "epsilon_demand": 0.5, "reward_form": "literal"},
    "agent": {
        "hidden_sizes": [64, 64],
        "actor_lr": 1e-4,
        "critic_lr": 1e-3,
        "batch_size": 64,
        "buffer_capacity": 50000,
        "exploration_noise_std": 0.1,
        "target_smoothing_std": 0.05,
        "target_noise_clip": 0.1,
        "policy_delay": 2,
        "tau": 0.01,
        "gamma": 0.0,
        "horizon_T": 1000,
        "seed": 0,
        "history_n": 4,
    },
    "train": {"steps": 20000},
    "eval": {"policies": ["learned", "quasi_static", "oracle"]},
    "harness": {
        "policy": "learned",
        "period": 1000,
        "integerize": True,
        "gap_policy": "hold",
        "intent_rule": "static",
        "intent_threshold": 0.5,
        "intent_increment": 0.1,
        "intent_cap": 1.0,
        "non_rt": True,
        "retrain_steps": 0,
    },
    "plots": {"enabled": True},
}

POLICY_KINDS = ("learned", "quasi_static", "oracle")


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict
    reward: RewardParams
    agent: AgentConfig
    synth_a: SynthConfig
    synth_b: SynthConfig
    session: SessionConfig
    out_dir: Path
    train_steps: int
    policies: tuple[str, ...]
    harness_policy: str
    plots: bool
    base_dir: Path

    @property
    def traces(self) -> dict:
        return self.raw["traces"]

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p


def merge(overrides: dict) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    for section, values in overrides.items():
        if section not in cfg:
            raise ConfigError(f"unknown config section [{section}]")
        if not isinstance(values, dict):
            raise ConfigError(f"config section [{section}] must be a table")
        for key, value in values.items():
            if key not in cfg[section]:
                raise ConfigError(f"unknown config key {section}.{key}")
            default = cfg[section][key]
            if isinstance(default, bool) and not isinstance(value, bool):
                raise ConfigError(f"config key {section}.{key} must be true or false")
            if isinstance(default, float) and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            if type(default) is not type(value):
                raise ConfigError(
                    f"config key {section}.{key} expects {type(default).__name__}, got {type(value).__name__}"
                )
            cfg[section][key] = value
    return cfg


def build(raw: dict, base_dir: Path | None = None, seed: int | None = None, out_dir: str | None = None) -> ExperimentConfig:
    base_dir = base_dir or Path.cwd()
    if seed is not None:
        raw["agent"]["seed"] = int(seed)
    if out_dir is not None:
        raw["run"]["out_dir"] = out_dir
    try:
        reward = RewardParams(**raw["reward"])
        agent_raw = dict(raw["agent"])
        agent_raw["hidden_sizes"] = tuple(agent_raw["hidden_sizes"])
        agent = AgentConfig(**agent_raw)
        s = raw["synth"]
        common = {k: s[k] for k in ("block_length", "ar_coefficient", "noise_scale", "length")}
        synth_a = SynthConfig(seed=s["seed_a"], **common)
        synth_b = SynthConfig(seed=s["seed_b"], **common)
        h = raw["harness"]
        session = SessionConfig(
            reward=reward,
            history_n=agent.history_n,
            **{f.name: h[f.name] for f in fields(SessionConfig) if f.name in h},
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    t = raw["traces"]
    if t["source_format"] not in ("trace", "dci"):
        raise ConfigError(f"traces.source_format must be 'trace' or 'dci', got {t['source_format']!r}")
    if t["a_mode"] not in ("source", "synthetic"):
        raise ConfigError(f"traces.a_mode must be 'source' or 'synthetic', got {t['a_mode']!r}")
    if not 0.0 < t["split"] < 1.0:
        raise ConfigError("traces.split must lie strictly between 0 and 1")
    policies = tuple(raw["eval"]["policies"])
    for p in policies + (h["policy"],):
        if p not in POLICY_KINDS:
            raise ConfigError(f"unknown policy kind {p!r}")
    if raw["train"]["steps"] < 0:
        raise ConfigError("train.steps must be non-negative")
    out = Path(raw["run"]["out_dir"])
    return ExperimentConfig(
        raw=raw,
        reward=reward,
        agent=agent,
        synth_a=synth_a,
        synth_b=synth_b,
        session=session,
        out_dir=out if out.is_absolute() else base_dir / out,
        train_steps=int(raw["train"]["steps"]),
        policies=policies,
        harness_policy=h["policy"],
        plots=bool(raw["plots"]["enabled"]),
        base_dir=base_dir,
    )


def load(path: str | Path | None = None, seed: int | None = None, out_dir: str | None = None) -> ExperimentConfig:
    if path is None:
        return build(merge({}), seed=seed, out_dir=out_dir)
    path = Path(path)
    try:
        overrides = tomllib.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return build(merge(overrides), base_dir=path.parent.resolve(), seed=seed, out_dir=out_dir)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, list):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return repr(v)


def default_config_text() -> str:
    lines = []
    for section, values in DEFAULTS.items():
        lines.append(f"[{section}]")
        lines.extend(f"{k} = {_toml_value(v)}" for k, v in values.items())
        lines.append("")
    return "\n".join(lines)
