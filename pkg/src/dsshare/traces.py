"""Demand traces: DCI ingestion, synthetic generation, windowing and file I/O.

A measured trace comes from decoded LTE downlink control information (one
record per scheduling grant). Grants are summed per 1 ms subframe across all
RNTIs and averaged over fixed windows. The coexisting network's trace is
synthesized from a measured one by circular block bootstrap.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Mapping, Sequence

import numpy as np

logger = logging.getLogger(__name__)

SFN_PERIOD = 1024
SUBFRAMES_PER_FRAME = 10
# one full SFN cycle in milliseconds
SFN_CYCLE_MS = SFN_PERIOD * SUBFRAMES_PER_FRAME

DCI_FIELDS = ("sfn", "subframe", "rnti", "prb_count", "mcs", "dci_type")
DEFAULT_SCHEMA = {name: name for name in DCI_FIELDS}


class TraceError(ValueError):
    """Invalid trace input or trace operation."""


class DciParseError(TraceError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


@dataclass(frozen=True)
class DciRecord:
    sfn: int
    subframe: int
    rnti: str
    prb_count: int
    mcs: int = 0
    dci_type: str = ""

    def __post_init__(self):
        if not 0 <= self.sfn < SFN_PERIOD:
            raise TraceError(f"sfn {self.sfn} outside [0, {SFN_PERIOD - 1}]")
        if not 0 <= self.subframe < SUBFRAMES_PER_FRAME:
            raise TraceError(f"subframe {self.subframe} outside [0, 9]")
        if self.prb_count < 0:
            raise TraceError(f"negative prb_count {self.prb_count}")


@dataclass(frozen=True, eq=False)
class DemandTrace:
    """Per-RAN PRB demand sampled every ``step_duration`` seconds."""

    ran_id: Literal["A", "B"]
    step_duration: float
    demands: np.ndarray
    source: Literal["measured", "synthetic"] = "measured"

    def __post_init__(self):
        demands = np.array(self.demands, dtype=np.float64).reshape(-1)
        demands.setflags(write=False)
        object.__setattr__(self, "demands", demands)
        if self.ran_id not in ("A", "B"):
            raise TraceError(f"unknown ran_id {self.ran_id!r}")
        if self.source not in ("measured", "synthetic"):
            raise TraceError(f"unknown source {self.source!r}")
        if not self.step_duration > 0:
            raise TraceError("step_duration must be positive")
        if demands.size == 0:
            raise TraceError("demand trace is empty")
        if not np.all(np.isfinite(demands)) or np.any(demands < 0):
            raise TraceError("demands must be finite and non-negative")

    def __len__(self):
        return self.demands.size

    def __eq__(self, other):
        if not isinstance(other, DemandTrace):
            return NotImplemented
        return (
            self.ran_id == other.ran_id
            and self.step_duration == other.step_duration
            and self.source == other.source
            and np.array_equal(self.demands, other.demands)
        )

    def slice(self, start: int, stop: int) -> "DemandTrace":
        return DemandTrace(self.ran_id, self.step_duration, self.demands[start:stop], self.source)


@dataclass(frozen=True)
class SynthConfig:
    block_length: int = 50
    ar_coefficient: float = 0.8
    noise_scale: float = 0.05
    seed: int = 0
    length: int = 3000

    def __post_init__(self):
        if self.block_length < 1:
            raise TraceError("block_length must be >= 1")
        if not 0.0 <= self.ar_coefficient < 1.0:
            raise TraceError("ar_coefficient must lie in [0, 1)")
        if self.noise_scale < 0:
            raise TraceError("noise_scale must be non-negative")


# --------------------------------------------------------------------------
# DCI ingestion


def parse_dci_log(
    path: str | Path,
    schema: Mapping[str, str] | None = None,
    delimiter: str = ",",
    strict: bool = False,
    errors: list[DciParseError] | None = None,
) -> list[DciRecord]:
    """Read decoded DCI records from a delimiter-separated log.

    ``schema`` maps each DCI field name to the header column holding it. A
    header missing any mapped column aborts. Malformed rows raise
    :class:`DciParseError` when ``strict``; otherwise they are skipped,
    appended to ``errors`` if given, and summarized in one warning.
    """
    schema = dict(DEFAULT_SCHEMA if schema is None else schema)
    unknown = set(schema) - set(DCI_FIELDS)
    if unknown:
        raise TraceError(f"unknown DCI fields in schema: {sorted(unknown)}")
    skipped: list[DciParseError] = []
    records: list[DciRecord] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        header = next(reader, None)
        if header is None:
            return records
        header = [h.strip() for h in header]
        missing = [col for col in schema.values() if col not in header]
        if missing:
            raise TraceError(f"{path}: missing column(s) {missing}")
        index = {name: header.index(col) for name, col in schema.items()}
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                records.append(_parse_row(row, index))
            except (ValueError, IndexError) as exc:
                err = DciParseError(line_no, str(exc))
                if strict:
                    raise err from exc
                skipped.append(err)
    if skipped:
        logger.warning("%s: skipped %d malformed DCI row(s)", path, len(skipped))
        if errors is not None:
            errors.extend(skipped)
    return records


def _parse_row(row: Sequence[str], index: Mapping[str, int]) -> DciRecord:
    def get(name, default=""):
        if name not in index:
            return default
        return row[index[name]].strip()

    fields = {}
    for name in ("sfn", "subframe", "prb_count"):
        fields[name] = int(get(name))
    mcs = get("mcs", "0")
    fields["mcs"] = int(mcs) if mcs else 0
    fields["rnti"] = get("rnti")
    fields["dci_type"] = get("dci_type")
    return DciRecord(**fields)


def subframe_times_ms(records: Sequence[DciRecord]) -> np.ndarray:
    """Absolute subframe index of each record, unrolling SFN wraparound."""
    times = np.empty(len(records), dtype=np.int64)
    wraps = 0
    prev_sfn = None
    for i, rec in enumerate(records):
        if prev_sfn is not None and rec.sfn < prev_sfn:
            wraps += 1
        prev_sfn = rec.sfn
        times[i] = wraps * SFN_CYCLE_MS + rec.sfn * SUBFRAMES_PER_FRAME + rec.subframe
    return times


def aggregate_dci_records(
    records: Sequence[DciRecord], window: float = 1.0, ran_id: Literal["A", "B"] = "A"
) -> DemandTrace:
    """Average per-subframe PRB totals over windows of ``window`` seconds.

    Subframes without any record count as idle (0 PRBs). Only whole windows
    are emitted; a trailing partial window is dropped.
    """
    if not records:
        raise TraceError("no DCI records to aggregate")
    if not window > 0:
        raise TraceError("window must be positive")
    window_ms = int(round(window * 1000))
    if window_ms < 1:
        raise TraceError("window shorter than one subframe")
    times = subframe_times_ms(records)
    t0 = int(times[0])
    span = int(times[-1]) - t0 + 1
    n_windows = span // window_ms
    if n_windows == 0:
        raise TraceError(f"records span {span} ms, shorter than one {window_ms} ms window")
    per_subframe = np.zeros(span, dtype=np.int64)
    prb = np.fromiter((r.prb_count for r in records), dtype=np.int64, count=len(records))
    np.add.at(per_subframe, times - t0, prb)
    used = per_subframe[: n_windows * window_ms].reshape(n_windows, window_ms)
    demands = used.sum(axis=1) / window_ms
    return DemandTrace(ran_id, window_ms / 1000.0, demands, "measured")


# --------------------------------------------------------------------------
# synthetic traces


def synthesize_trace(
    source: DemandTrace, cfg: SynthConfig, ran_id: Literal["A", "B"] = "B"
) -> DemandTrace:
    """Block-bootstrap a synthetic trace with the source's statistics.

    Contiguous circular blocks of ``cfg.block_length`` samples are drawn
    from the source. At each joint the step between the previous output
    sample and the new block decays geometrically with ratio
    ``cfg.ar_coefficient``. Gaussian noise of ``cfg.noise_scale`` source
    standard deviations is added and the result clipped at zero.
    """
    if cfg.length <= 0:
        raise TraceError("synthetic length must be positive")
    x = source.demands
    n = x.size
    rng = np.random.default_rng(cfg.seed)
    L = cfg.block_length
    out = np.empty(cfg.length)
    pos = 0
    while pos < cfg.length:
        # a block covering the whole source has no free start
        start = 0 if L >= n else int(rng.integers(n))
        take = min(L, cfg.length - pos)
        block = x[(start + np.arange(take)) % n].astype(np.float64)
        if pos > 0 and cfg.ar_coefficient > 0:
            gap = out[pos - 1] - block[0]
            block += gap * cfg.ar_coefficient ** np.arange(1, take + 1)
        out[pos : pos + take] = block
        pos += take
    if cfg.noise_scale > 0:
        scale = cfg.noise_scale * float(np.std(x))
        out += rng.normal(0.0, 1.0, cfg.length) * scale
    np.maximum(out, 0.0, out=out)
    return DemandTrace(ran_id, source.step_duration, out, "synthetic")


def lag1_autocorr(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    d = x - x.mean()
    denom = float(d @ d)
    if denom == 0.0:
        return 0.0
    return float(d[1:] @ d[:-1]) / denom


def summary_stats(trace: DemandTrace) -> dict[str, float]:
    x = trace.demands
    return {
        "mean": float(x.mean()),
        "std": float(x.std()),
        "lag1_autocorr": lag1_autocorr(x),
        "min": float(x.min()),
        "max": float(x.max()),
    }


# --------------------------------------------------------------------------
# windowing


@dataclass(frozen=True)
class TracePair:
    a: DemandTrace
    b: DemandTrace = field()

    def __post_init__(self):
        if len(self.a) != len(self.b):
            raise TraceError(f"trace lengths differ: {len(self.a)} vs {len(self.b)}")
        if self.a.step_duration != self.b.step_duration:
            raise TraceError("trace step durations differ")

    def __len__(self):
        return len(self.a)


def window_trace(a: DemandTrace, b: DemandTrace, split: float = 0.8) -> tuple[TracePair, TracePair]:
    """Chronological train/eval split of a trace pair (no shuffling)."""
    pair = TracePair(a, b)
    if not 0.0 < split < 1.0:
        raise TraceError("split must lie strictly between 0 and 1")
    n = len(pair)
    if n < 2:
        raise TraceError("need at least two samples to split")
    cut = min(max(int(round(n * split)), 1), n - 1)
    train = TracePair(a.slice(0, cut), b.slice(0, cut))
    evaluation = TracePair(a.slice(cut, n), b.slice(cut, n))
    return train, evaluation


# --------------------------------------------------------------------------
# trace files


def write_trace(trace: DemandTrace, path: str | Path) -> None:
    """Write ``timestamp_s,prb_demand`` rows under a ``# key: value`` header."""
    lines = [
        f"# ran_id: {trace.ran_id}",
        f"# step_duration: {trace.step_duration!r}",
        f"# source: {trace.source}",
        "timestamp_s,prb_demand",
    ]
    dt = trace.step_duration
    lines.extend(f"{i * dt!r},{float(v)!r}" for i, v in enumerate(trace.demands))
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace(path: str | Path) -> DemandTrace:
    meta: dict[str, str] = {}
    values: list[float] = []
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
                continue
            if line.startswith("timestamp_s"):
                continue
            _, _, demand = line.partition(",")
            values.append(float(demand))
    try:
        return DemandTrace(
            meta.get("ran_id", "A"),  # type: ignore[arg-type]
            float(meta.get("step_duration", "1.0")),
            np.array(values),
            meta.get("source", "measured"),  # type: ignore[arg-type]
        )
    except TraceError as exc:
        raise TraceError(f"{path}: {exc}") from exc


def sample_trace_path() -> Path:
    """Bundled RAN_A sample trace used when no measured trace is configured."""
    return Path(__file__).parent / "data" / "sample_ran_a.csv"


def load_sample_trace() -> DemandTrace:
    return read_trace(sample_trace_path())
