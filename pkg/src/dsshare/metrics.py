"""Per-policy rollouts, aggregate metrics, and the metrics table format."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .env import RewardParams


@dataclass(frozen=True, eq=False)
class Rollout:
    """Per-step record of one policy over an evaluation window."""

    policy: str
    d_a: np.ndarray
    d_b: np.ndarray
    n_a: np.ndarray
    n_b: np.ndarray
    imbalance: np.ndarray
    reward: np.ndarray
    zeta: np.ndarray

    def __len__(self):
        return self.d_a.size

    def columns(self) -> dict[str, np.ndarray]:
        return {
            "d_a": self.d_a,
            "d_b": self.d_b,
            "n_a": self.n_a,
            "n_b": self.n_b,
            "J": self.imbalance,
            "reward": self.reward,
            "zeta": self.zeta,
        }


@dataclass(frozen=True)
class MetricsRecord:
    policy: str
    steps: int
    mean_j: float
    mean_reward: float
    mean_abs_frac_err_a: float
    mean_abs_frac_err_b: float
    mean_sq_frac_err_a: float
    mean_sq_frac_err_b: float
    mean_surplus_a: float
    mean_deficit_a: float
    mean_surplus_b: float
    mean_deficit_b: float
    over_rate_a: float
    under_rate_a: float
    over_rate_b: float
    under_rate_b: float


def compute_metrics(rollout: Rollout, params: RewardParams) -> MetricsRecord:
    eps = params.epsilon_demand
    ga = np.maximum(rollout.d_a, eps)
    gb = np.maximum(rollout.d_b, eps)
    ea = (rollout.n_a - ga) / ga
    eb = (rollout.n_b - gb) / gb
    return MetricsRecord(
        policy=rollout.policy,
        steps=len(rollout),
        mean_j=float(np.mean(rollout.imbalance)),
        mean_reward=float(np.mean(rollout.reward)),
        mean_abs_frac_err_a=float(np.mean(np.abs(ea))),
        mean_abs_frac_err_b=float(np.mean(np.abs(eb))),
        mean_sq_frac_err_a=float(np.mean(ea * ea)),
        mean_sq_frac_err_b=float(np.mean(eb * eb)),
        mean_surplus_a=float(np.mean(np.maximum(ea, 0.0))),
        mean_deficit_a=float(np.mean(np.maximum(-ea, 0.0))),
        mean_surplus_b=float(np.mean(np.maximum(eb, 0.0))),
        mean_deficit_b=float(np.mean(np.maximum(-eb, 0.0))),
        over_rate_a=float(np.mean(rollout.n_a > rollout.d_a)),
        under_rate_a=float(np.mean(rollout.n_a < rollout.d_a)),
        over_rate_b=float(np.mean(rollout.n_b > rollout.d_b)),
        under_rate_b=float(np.mean(rollout.n_b < rollout.d_b)),
    )


_FIELDS = [f.name for f in fields(MetricsRecord)]


def format_metrics_table(records: list[MetricsRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_FIELDS)
    for rec in records:
        row = asdict(rec)
        writer.writerow([row[k] if isinstance(row[k], (str, int)) else repr(row[k]) for k in _FIELDS])
    return buf.getvalue()


def write_metrics_table(records: list[MetricsRecord], path: str | Path) -> None:
    Path(path).write_text(format_metrics_table(records))


def read_metrics_table(path: str | Path) -> list[MetricsRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        out = []
        for row in reader:
            values = {}
            for f in fields(MetricsRecord):
                raw = row[f.name]
                values[f.name] = raw if f.type == "str" else int(raw) if f.type == "int" else float(raw)
            out.append(MetricsRecord(**values))
    return out


def render_table(records: list[MetricsRecord]) -> str:
    """Aligned plain-text summary for the terminal."""
    cols = [
        ("policy", "policy", "{}"),
        ("mean J", "mean_j", "{:.4f}"),
        ("reward", "mean_reward", "{:.4f}"),
        ("|err| A", "mean_abs_frac_err_a", "{:.3f}"),
        ("|err| B", "mean_abs_frac_err_b", "{:.3f}"),
        ("over A", "over_rate_a", "{:.2f}"),
        ("under A", "under_rate_a", "{:.2f}"),
        ("over B", "over_rate_b", "{:.2f}"),
        ("under B", "under_rate_b", "{:.2f}"),
    ]
    rows = [[fmt.format(getattr(r, key)) for _, key, fmt in cols] for r in records]
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h) for i, (h, _, _) in enumerate(cols)]
    lines = ["  ".join(h.ljust(w) for (h, _, _), w in zip(cols, widths))]
    lines += ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)) for row in rows]
    return "\n".join(lines)


def write_rollout(rollout: Rollout, path: str | Path) -> None:
    cols = rollout.columns()
    names = list(cols)
    lines = ["step," + ",".join(names)]
    for i in range(len(rollout)):
        lines.append(str(i) + "," + ",".join(repr(float(cols[k][i])) for k in names))
    Path(path).write_text("\n".join(lines) + "\n")


def read_rollout(path: str | Path, policy: str) -> Rollout:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return Rollout(policy, *(data[:, i] for i in range(1, 8)))
