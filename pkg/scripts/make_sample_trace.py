"""Regenerate the bundled RAN_A sample trace (src/dsshare/data/sample_ran_a.csv).

The trace imitates 1 s averages of LTE downlink PRB usage on a 100-PRB
carrier: a slow load swing, AR(1) jitter, and occasional traffic bursts.
"""

import numpy as np

from dsshare.traces import DemandTrace, sample_trace_path, write_trace

N = 4000
rng = np.random.default_rng(20230115)

t = np.arange(N)
slow = 24.0 + 7.0 * np.sin(2 * np.pi * t / 1400.0) + 3.0 * np.sin(2 * np.pi * t / 310.0 + 1.0)

jitter = np.zeros(N)
for i in range(1, N):
    jitter[i] = 0.9 * jitter[i - 1] + rng.normal(0.0, 1.6)

bursts = np.zeros(N)
i = 0
while i < N:
    i += int(rng.exponential(120.0)) + 1
    if i >= N:
        break
    dur = int(rng.integers(8, 60))
    height = rng.uniform(10.0, 28.0)
    ramp = np.minimum(1.0, np.arange(dur) / 4.0) * np.minimum(1.0, (dur - np.arange(dur)) / 4.0)
    end = min(N, i + dur)
    bursts[i:end] += height * ramp[: end - i]
    i = end

demand = np.clip(slow + jitter + bursts, 6.0, None)
write_trace(DemandTrace("A", 1.0, np.round(demand, 3), "measured"), sample_trace_path())
print(f"mean={demand.mean():.2f} std={demand.std():.2f} min={demand.min():.2f} max={demand.max():.2f}")
