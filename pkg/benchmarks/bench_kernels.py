"""Compare the compiled and numpy MLP kernels.

Per-call forward and backward timings at batch sizes 1 and 64 on the default
network shape, then a short ``train()`` run in a subprocess per backend
(selected with ``DSSHARE_BACKEND``).

    python3 benchmarks/bench_kernels.py [--train-steps N]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from dsshare.agent import _kernels_python
from dsshare.agent.networks import init_mlp

try:
    from dsshare.agent import _kernels as _kernels_c
except ImportError:
    _kernels_c = None

SIZES = (11, 64, 64, 1)  # critic input for history_n = 4

TRAIN_SNIPPET = """
import time
from dsshare.agent.kernels import BACKEND
from dsshare.agent.td3 import AgentConfig, train
from dsshare.env import RewardParams
from dsshare.traces import SynthConfig, TracePair, load_sample_trace, synthesize_trace
src = load_sample_trace()
pair = TracePair(synthesize_trace(src, SynthConfig(seed=1, length=4000), "A"),
                 synthesize_trace(src, SynthConfig(seed=2, length=4000), "B"))
t0 = time.perf_counter()
train(pair, RewardParams(), AgentConfig(), {steps})
print(BACKEND, time.perf_counter() - t0)
"""


def time_kernels(backend, batch: int, repeat: int) -> tuple[float, float]:
    rng = np.random.default_rng(0)
    theta = init_mlp(SIZES, rng)
    x = rng.normal(size=(batch, SIZES[0]))
    h1, h2, out = np.empty((batch, SIZES[1])), np.empty((batch, SIZES[2])), np.empty(batch)
    dout = rng.normal(size=batch)
    grad, dx = np.empty_like(theta), np.empty_like(x)

    def fwd():
        backend.mlp_forward(theta, SIZES, x, h1, h2, out)

    def bwd():
        backend.mlp_backward(theta, SIZES, x, h1, h2, dout, grad, dx)

    fwd()
    t_f = min(timeit.repeat(fwd, number=repeat, repeat=5)) / repeat
    t_b = min(timeit.repeat(bwd, number=repeat, repeat=5)) / repeat
    return t_f, t_b


def time_training(backend: str, steps: int) -> float:
    env = dict(os.environ, DSSHARE_BACKEND=backend)
    out = subprocess.run(
        [sys.executable, "-c", TRAIN_SNIPPET.format(steps=steps)],
        env=env, capture_output=True, text=True, check=True,
    )
    name, seconds = out.stdout.split()
    if name != backend:
        raise RuntimeError(f"requested backend {backend}, got {name}")
    return float(seconds)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--train-steps", type=int, default=3000)
    parser.add_argument("--repeat", type=int, default=2000)
    args = parser.parse_args(argv)

    backends = [("python", _kernels_python)]
    if _kernels_c is not None:
        backends.append(("cython", _kernels_c))
    else:
        print("compiled extension not built; timing the numpy fallback only")

    print(f"network {SIZES}, per call (microseconds)")
    print(f"{'backend':8s} {'batch':>5s} {'forward':>9s} {'backward':>9s}")
    for batch in (1, 64):
        for name, mod in backends:
            f, b = time_kernels(mod, batch, args.repeat)
            print(f"{name:8s} {batch:5d} {f * 1e6:9.1f} {b * 1e6:9.1f}")

    print(f"\ntrain(), {args.train_steps} steps")
    times = {name: time_training(name, args.train_steps) for name, _ in backends}
    for name, t in times.items():
        print(f"{name:8s} {t:7.2f}s")
    if len(times) == 2:
        print(f"speedup  {times['python'] / times['cython']:7.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
