"""File-only plots of logged data. Nothing here computes or alters metrics."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .metrics import Rollout  # noqa: E402

# fixed metadata keeps repeated renders byte-identical
_METADATA = {"Software": None}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_METADATA)
    plt.close(fig)


def plot_traces(a, b, path, title="Average PRB demand"):
    fig, ax = plt.subplots(figsize=(8, 3))
    t = np.arange(len(a)) * a.step_duration
    ax.plot(t, a.demands, lw=0.7, label=f"RAN_A ({a.source})")
    ax.plot(t, b.demands, lw=0.7, label=f"RAN_B ({b.source})")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("PRBs")
    ax.set_title(title)
    ax.legend(loc="upper right")
    _save(fig, path)


def plot_reward_curve(rewards: np.ndarray, path, window: int = 200):
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.plot(rewards, lw=0.3, alpha=0.4, color="grey", label="per step")
    if rewards.size >= window:
        smooth = np.convolve(rewards, np.ones(window) / window, mode="valid")
        ax.plot(np.arange(window - 1, rewards.size), smooth, lw=1.2, label=f"{window}-step mean")
    ax.set_xlabel("training step")
    ax.set_ylabel("reward")
    if rewards.size:
        lo = np.percentile(rewards, 2)
        ax.set_ylim(min(lo, -1e-3) * 1.1, 0.05 * abs(lo) + 1e-3)
    ax.legend(loc="lower right")
    _save(fig, path)


def plot_allocation(rollout: Rollout, path, max_steps: int = 600):
    """Demand against allocation over time for both RANs."""
    k = min(len(rollout), max_steps)
    t = np.arange(k)
    fig, axes = plt.subplots(2, 1, figsize=(8, 4.5), sharex=True)
    for ax, ran, d, n in (
        (axes[0], "RAN_A", rollout.d_a, rollout.n_a),
        (axes[1], "RAN_B", rollout.d_b, rollout.n_b),
    ):
        ax.plot(t, d[:k], lw=0.8, label="demand")
        ax.plot(t, n[:k], lw=0.8, label="allocation")
        ax.set_ylabel(f"{ran} PRBs")
        ax.legend(loc="upper right")
    axes[0].set_title(f"PRB demand vs allocation: {rollout.policy}")
    axes[1].set_xlabel("evaluation step")
    _save(fig, path)


def plot_zeta_timeline(steps: np.ndarray, zeta: np.ndarray, path):
    fig, ax = plt.subplots(figsize=(6, 2.5))
    ax.step(steps, zeta, where="post")
    ax.set_ylim(-0.05, 1.05)
    ax.set_xlabel("step")
    ax.set_ylabel("zeta")
    ax.set_title("intent weight in force")
    _save(fig, path)
