import numpy as np
import pytest

from dsshare.env import RewardParams
from dsshare.traces import DemandTrace, SynthConfig, TracePair, load_sample_trace, synthesize_trace

_REPORT: list[str] = []


class CriterionReport:
    """Collects one pass/fail line per acceptance criterion."""

    def __init__(self, lines):
        self.lines = lines

    def check(self, label, ok, detail=""):
        self.lines.append(f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
        assert ok, f"{label}: {detail}"


@pytest.fixture(scope="session")
def criteria():
    return CriterionReport(_REPORT)


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in _REPORT:
            terminalreporter.write_line(line)


def constant_pair(d_a, d_b, length=200):
    return TracePair(DemandTrace("A", 1.0, np.full(length, d_a)), DemandTrace("B", 1.0, np.full(length, d_b)))


@pytest.fixture(scope="session")
def sample_trace():
    return load_sample_trace()


@pytest.fixture(scope="session")
def bursty_pair(sample_trace):
    a = synthesize_trace(sample_trace, SynthConfig(block_length=50, seed=11, length=10000), ran_id="A")
    b = synthesize_trace(sample_trace, SynthConfig(block_length=50, seed=12, length=10000), ran_id="B")
    return TracePair(a, b)


@pytest.fixture
def params():
    return RewardParams(zeta=0.5, n_r=100.0)
