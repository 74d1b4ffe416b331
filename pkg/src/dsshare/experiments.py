"""Experiment runners behind the CLI subcommands.

Every runner takes an :class:`ExperimentConfig`, writes its artifacts into
``cfg.out_dir`` and returns the in-memory results.
"""

from __future__ import annotations

import logging
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import plotting
from .agent import checkpoint as ckpt
from .agent.td3 import NetworkParams, TrainingLog, evaluate, train
from .config import ConfigError, ExperimentConfig
from .harness import SessionLog, read_session_log, run_session
from .metrics import read_rollout, write_metrics_table, write_rollout
from .policies import EvaluationResult
from .traces import (
    DemandTrace,
    TracePair,
    aggregate_dci_records,
    load_sample_trace,
    parse_dci_log,
    read_trace,
    summary_stats,
    synthesize_trace,
    window_trace,
    write_trace,
)

logger = logging.getLogger(__name__)

CHECKPOINT = "checkpoint.json"
TRAIN_LOG = "train_log.csv"
METRICS = "metrics.csv"
SESSION_LOG = "session_log.jsonl"
SESSION_METRICS = "session_metrics.csv"


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise ConfigError(f"{what} not found: {path}")
    return path


def load_source(cfg: ExperimentConfig) -> DemandTrace:
    t = cfg.traces
    if not t["source"]:
        return load_sample_trace()
    path = _require(cfg.resolve(t["source"]), "trace source")
    if t["source_format"] == "dci":
        records = parse_dci_log(path, delimiter=t["dci_delimiter"], strict=t["dci_strict"])
        return aggregate_dci_records(records, t["window"], ran_id="A")
    return read_trace(path)


def prepare_traces(cfg: ExperimentConfig) -> tuple[DemandTrace, DemandTrace]:
    t = cfg.traces
    if t["trace_a"] and t["trace_b"]:
        a = read_trace(_require(cfg.resolve(t["trace_a"]), "trace_a"))
        b = read_trace(_require(cfg.resolve(t["trace_b"]), "trace_b"))
        return a, b
    source = load_source(cfg)
    if t["a_mode"] == "source":
        a = source
        b = synthesize_trace(source, replace(cfg.synth_b, length=len(source)), ran_id="B")
    else:
        a = synthesize_trace(source, cfg.synth_a, ran_id="A")
        b = synthesize_trace(source, cfg.synth_b, ran_id="B")
    return a, b


def split_traces(cfg: ExperimentConfig) -> tuple[TracePair, TracePair]:
    a, b = prepare_traces(cfg)
    return window_trace(a, b, cfg.traces["split"])


def run_synth(cfg: ExperimentConfig) -> dict[str, dict[str, float]]:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    source = load_source(cfg)
    a, b = prepare_traces(cfg)
    write_trace(a, out / "trace_a.csv")
    write_trace(b, out / "trace_b.csv")
    stats = {"source": summary_stats(source), "ran_a": summary_stats(a), "ran_b": summary_stats(b)}
    if cfg.plots:
        plotting.plot_traces(a, b, out / "traces.png")
    return stats


def run_train(cfg: ExperimentConfig) -> tuple[NetworkParams, TrainingLog]:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    train_pair, _ = split_traces(cfg)
    net, log = train(train_pair, cfg.reward, cfg.agent, cfg.train_steps)
    ckpt.save(net, cfg.agent, out / CHECKPOINT, extra={"zeta": cfg.reward.zeta, "steps": cfg.train_steps})
    (out / TRAIN_LOG).write_text(log.to_csv())
    if cfg.plots:
        plotting.plot_reward_curve(log.reward, out / "reward_curve.png")
    return net, log


def load_checkpoint(cfg: ExperimentConfig, path: Path | None = None) -> NetworkParams:
    path = _require(path or cfg.out_dir / CHECKPOINT, "checkpoint")
    net, _ = ckpt.load(path, expect=cfg.agent)
    return net


def run_eval(cfg: ExperimentConfig, checkpoint: Path | None = None) -> EvaluationResult:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    train_pair, eval_pair = split_traces(cfg)
    net = load_checkpoint(cfg, checkpoint) if "learned" in cfg.policies else None
    result = evaluate(net, eval_pair, cfg.reward, cfg.agent, train_traces=train_pair)
    records = [result.metrics[p] for p in cfg.policies]
    write_metrics_table(records, out / METRICS)
    for name in cfg.policies:
        write_rollout(result.rollouts[name], out / f"eval_{name}.csv")
        if cfg.plots:
            plotting.plot_allocation(result.rollouts[name], out / f"alloc_{name}.png")
    return result


def run_harness(cfg: ExperimentConfig, checkpoint: Path | None = None) -> SessionLog:
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    train_pair, eval_pair = split_traces(cfg)
    kind = cfg.harness_policy
    net = load_checkpoint(cfg, checkpoint) if kind == "learned" else None
    session = run_session(eval_pair, kind, cfg.session, net=net, agent_cfg=cfg.agent, quasi_static_from=train_pair)
    session.write(out / SESSION_LOG)
    write_metrics_table([session.metrics], out / SESSION_METRICS)
    if cfg.plots:
        plot_session(session.records(), out)
    return session


def plot_session(records: list[dict], out: Path) -> None:
    steps = np.array([r["step"] for r in records])
    zeta = np.array([r["zeta"] for r in records])
    plotting.plot_zeta_timeline(steps, zeta, out / "zeta_timeline.png")


def run_plot(cfg: ExperimentConfig) -> list[Path]:
    """Re-render every plot whose source log exists in the output directory."""
    out = cfg.out_dir
    written = []
    if (out / TRAIN_LOG).exists():
        log = TrainingLog.from_csv((out / TRAIN_LOG).read_text())
        plotting.plot_reward_curve(log.reward, out / "reward_curve.png")
        written.append(out / "reward_curve.png")
    for name in ("learned", "quasi_static", "oracle"):
        path = out / f"eval_{name}.csv"
        if path.exists():
            plotting.plot_allocation(read_rollout(path, name), out / f"alloc_{name}.png")
            written.append(out / f"alloc_{name}.png")
    if (out / SESSION_LOG).exists():
        plot_session(read_session_log(out / SESSION_LOG), out)
        written.append(out / "zeta_timeline.png")
    if (out / "trace_a.csv").exists() and (out / "trace_b.csv").exists():
        plotting.plot_traces(read_trace(out / "trace_a.csv"), read_trace(out / "trace_b.csv"), out / "traces.png")
        written.append(out / "traces.png")
    if not written:
        raise ConfigError(f"nothing to plot in {out}")
    return written
