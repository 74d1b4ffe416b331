"""JSON checkpoints: network weights, layer sizes, and the config that made them.

Floats are written with ``repr`` so a save/load round trip is exact and two
saves of the same networks are byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .td3 import AgentConfig, NetworkParams

FORMAT = "dsshare-td3-checkpoint"
VERSION = 1


class CheckpointError(ValueError):
    pass


def dumps(net: NetworkParams, cfg: AgentConfig, extra: dict | None = None) -> str:
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "seed": cfg.seed,
        "config": asdict(cfg),
        "n_r": net.n_r,
        "actor_sizes": list(net.actor_sizes),
        "critic_sizes": list(net.critic_sizes),
        "extra": extra or {},
        "weights": {name: [float(v) for v in arr] for name, arr in net.arrays().items()},
    }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def save(net: NetworkParams, cfg: AgentConfig, path: str | Path, extra: dict | None = None) -> None:
    Path(path).write_text(dumps(net, cfg, extra))


def load(path: str | Path, expect: AgentConfig | None = None) -> tuple[NetworkParams, AgentConfig]:
    """Read a checkpoint, rejecting any shape disagreement.

    With ``expect`` given, the stored layer sizes must also match the sizes
    that config implies.
    """
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: unreadable checkpoint ({exc})") from exc
    if doc.get("format") != FORMAT:
        raise CheckpointError(f"{path}: not a {FORMAT} file")
    raw_cfg = dict(doc["config"])
    raw_cfg["hidden_sizes"] = tuple(raw_cfg["hidden_sizes"])
    cfg = AgentConfig(**raw_cfg)
    actor_sizes = tuple(doc["actor_sizes"])
    critic_sizes = tuple(doc["critic_sizes"])
    if actor_sizes != cfg.actor_sizes or critic_sizes != cfg.critic_sizes:
        raise CheckpointError(f"{path}: stored sizes disagree with the stored config")
    if expect is not None and (expect.actor_sizes != actor_sizes or expect.critic_sizes != critic_sizes):
        raise CheckpointError(
            f"{path}: network shapes {actor_sizes}/{critic_sizes} do not match "
            f"expected {expect.actor_sizes}/{expect.critic_sizes}"
        )
    from .networks import param_count

    arrays = {}
    for name in NetworkParams.NAMES:
        sizes = actor_sizes if name.startswith("actor") else critic_sizes
        arr = np.array(doc["weights"][name], dtype=np.float64)
        if arr.shape != (param_count(sizes),):
            raise CheckpointError(f"{path}: {name} has {arr.size} weights, expected {param_count(sizes)}")
        if not np.all(np.isfinite(arr)):
            raise CheckpointError(f"{path}: {name} holds non-finite weights")
        arrays[name] = arr
    net = NetworkParams(**arrays, actor_sizes=actor_sizes, critic_sizes=critic_sizes, n_r=float(doc["n_r"]))
    return net.frozen(), cfg
