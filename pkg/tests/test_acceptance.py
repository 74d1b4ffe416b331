"""Acceptance criteria 1-8.

Each test records one PASS/FAIL line (printed in the "acceptance criteria"
section of the pytest summary) and asserts its runtime budget.
"""

import time

import numpy as np
import pytest

from dsshare.agent import _kernels_python
from dsshare.agent import networks as nn
from dsshare.agent.td3 import AgentConfig, actor_loss_grad, critic_loss_grad, evaluate, train
from dsshare.cli import main
from dsshare.env import Allocation, RewardParams, compute_imbalance, compute_reward, optimal_allocation
from dsshare.harness import SessionConfig, rounding_bound, run_session
from dsshare.traces import SynthConfig, lag1_autocorr, synthesize_trace, window_trace

from .conftest import constant_pair
from .reference import central_diff

try:
    from dsshare.agent import _kernels as _kernels_c
except ImportError:  # pragma: no cover
    _kernels_c = None

pytestmark = pytest.mark.acceptance

TRAIN_STEPS = 20000
ZETAS = (0.1, 0.5, 0.9)


# --------------------------------------------------------------------------
# shared trained agents for criteria 4-6


class Trained:
    def __init__(self, bursty_pair):
        self.train_pair, self.eval_pair = window_trace(bursty_pair.a, bursty_pair.b, 0.8)
        self.cfg = AgentConfig(seed=0)
        self.nets = {}
        self.results = {}
        self.seconds = {}

    def get(self, zeta):
        if zeta not in self.nets:
            t0 = time.perf_counter()
            params = RewardParams(zeta, 100.0)
            net, _ = train(self.train_pair, params, self.cfg, TRAIN_STEPS)
            self.nets[zeta] = net
            self.results[zeta] = evaluate(net, self.eval_pair, params, self.cfg, train_traces=self.train_pair)
            self.seconds[zeta] = time.perf_counter() - t0
        return self.nets[zeta], self.results[zeta]


@pytest.fixture(scope="module")
def trained(bursty_pair):
    return Trained(bursty_pair)


# --------------------------------------------------------------------------


def test_criterion_1_formulas(criteria):
    t0 = time.perf_counter()
    worst = 0.0
    cases = [
        (Allocation(10, 10), 10, 10, RewardParams(0.5, 20.0), 0.0, 0.0),
        (Allocation(12, 8), 10, 10, RewardParams(0.5, 20.0), 0.04, -0.06),
        (Allocation(8, 7), 10, 5, RewardParams(1.0, 15.0), 0.04, -0.08),
        (Allocation(1, 9), 0.0, 9, RewardParams(0.5, 10.0), 0.5, -0.75),
        (Allocation(15, 5), 10, 10, RewardParams(0.0, 20.0), 0.25, -0.25),
    ]
    for alloc, d_a, d_b, p, J_expect, r_expect in cases:
        J = compute_imbalance(alloc, d_a, d_b, p)
        worst = max(worst, abs(J - J_expect), abs(compute_reward(J, p) - r_expect))

    rng = np.random.default_rng(2024)
    gap = -np.inf
    for _ in range(1000):
        zeta, n_r = rng.uniform(0, 1), rng.uniform(1.0, 150.0)
        d_a, d_b = rng.uniform(0, 100, size=2)
        p = RewardParams(zeta, n_r)
        J_star = compute_imbalance(optimal_allocation(d_a, d_b, p), d_a, d_b, p)
        grid = np.linspace(0.0, n_r, 1000)
        ga, gb = max(d_a, 0.5), max(d_b, 0.5)
        J_grid = zeta * ((grid - ga) / ga) ** 2 + (1 - zeta) * ((n_r - grid - gb) / gb) ** 2
        gap = max(gap, J_star - J_grid.min())
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12 and gap <= 1e-9 and elapsed < 5
    criteria.check("1 formula suite", ok, f"max formula err {worst:.1e}, oracle-grid {gap:.1e}, {elapsed:.2f}s")


@pytest.mark.parametrize(
    "backend",
    [pytest.param(_kernels_python, id="python"),
     pytest.param(_kernels_c, id="cython", marks=pytest.mark.skipif(_kernels_c is None, reason="no extension"))],
)
def test_criterion_2_gradients(criteria, monkeypatch, backend):
    monkeypatch.setattr(nn.kernels, "mlp_forward", backend.mlp_forward)
    monkeypatch.setattr(nn.kernels, "mlp_backward", backend.mlp_backward)
    t0 = time.perf_counter()
    rng = np.random.default_rng(99)
    worst = 0.0

    def rel(a, b):
        return abs(a - b) / max(abs(a), abs(b), 1e-6)

    for _ in range(20):
        obs_dim = int(rng.integers(1, 6))
        h1, h2 = int(rng.integers(2, 9)), int(rng.integers(2, 9))
        a_sizes, c_sizes = (obs_dim, h1, h2, 1), (obs_dim + 1, h1, h2, 1)
        actor, critic = nn.init_mlp(a_sizes, rng), nn.init_mlp(c_sizes, rng)
        batch = int(rng.integers(1, 9))
        x_obs = rng.uniform(0, 1, size=(batch, obs_dim))
        x_c = np.column_stack([x_obs, rng.uniform(0, 1, batch)])
        r = rng.normal(size=batch)

        _, g_c, _ = critic_loss_grad(critic, c_sizes, x_c, r)
        for idx in rng.choice(critic.size, 8, replace=False):
            num = central_diff(lambda th: critic_loss_grad(th, c_sizes, x_c, r)[0], critic, idx)
            worst = max(worst, rel(g_c[idx], num))

        _, g_a = actor_loss_grad(actor, a_sizes, critic, c_sizes, x_obs)
        for idx in rng.choice(actor.size, 8, replace=False):
            num = central_diff(lambda th: actor_loss_grad(th, a_sizes, critic, c_sizes, x_obs)[0], actor, idx)
            worst = max(worst, rel(g_a[idx], num))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-4 and elapsed < 30
    criteria.check(f"2 gradient checks [{backend.BACKEND}]", ok, f"max rel err {worst:.1e}, {elapsed:.2f}s")


def test_criterion_3_constant_demand(criteria):
    t0 = time.perf_counter()
    pair = constant_pair(40.0, 60.0, 1000)
    params = RewardParams(0.5, 100.0)
    cfg = AgentConfig(seed=1)
    net, _ = train(pair, params, cfg, 5000)
    m = evaluate(net, pair, params, cfg).metrics
    elapsed = time.perf_counter() - t0
    ok = m["learned"].mean_reward >= -0.02 and elapsed < 300
    criteria.check("3 constant-demand convergence", ok,
                   f"mean reward {m['learned'].mean_reward:.5f} (oracle {m['oracle'].mean_reward:.1e}), {elapsed:.1f}s")


def test_criterion_4_bursty_competitiveness(criteria, trained):
    _, res = trained.get(0.5)
    m = res.metrics
    steps = m["learned"].steps
    ratio = m["learned"].mean_j / m["oracle"].mean_j
    elapsed = trained.seconds[0.5]
    ok = steps >= 2000 and ratio <= 1.25 and m["learned"].mean_j < m["quasi_static"].mean_j and elapsed < 900
    criteria.check(
        "4 bursty-trace competitiveness", ok,
        f"J learned {m['learned'].mean_j:.4f}, oracle {m['oracle'].mean_j:.4f} (x{ratio:.3f}), "
        f"quasi-static {m['quasi_static'].mean_j:.4f}, {steps} eval steps, {elapsed:.1f}s",
    )


def test_criterion_5_intent_sweep(criteria, trained):
    errs = [trained.get(z)[1].metrics["learned"].mean_sq_frac_err_a for z in ZETAS]
    violations = [(a, b) for a, b in zip(errs, errs[1:]) if b > a]
    ok_order = not violations or (len(violations) == 1 and (violations[0][1] - violations[0][0]) / violations[0][0] <= 0.1)
    elapsed = sum(trained.seconds[z] for z in ZETAS)
    ok = ok_order and elapsed < 2700
    detail = ", ".join(f"zeta={z}: {e:.4f}" for z, e in zip(ZETAS, errs))
    criteria.check("5 intent sweep", ok, f"RAN_A mean sq err {detail}; {elapsed:.1f}s")


def test_criterion_6_harness_equivalence(criteria, trained):
    net, res = trained.get(0.5)
    t0 = time.perf_counter()
    params = RewardParams(0.5, 100.0)
    direct = res.rollouts["learned"]
    scfg = SessionConfig(reward=params, history_n=trained.cfg.history_n, integerize=False)
    exact = run_session(trained.eval_pair, "learned", scfg, net=net)
    bit_exact = np.array_equal(exact.imbalances(), direct.imbalance) and np.array_equal(
        [r.allocation.n_a for r in exact.results], direct.n_a
    )
    rounded = run_session(trained.eval_pair, "learned", SessionConfig(reward=params, history_n=trained.cfg.history_n), net=net)
    excess = max(
        abs(J - J0) - rounding_bound(Allocation(n_a, 100.0 - n_a), d_a, d_b, params)
        for J, J0, n_a, d_a, d_b in zip(rounded.imbalances(), direct.imbalance, direct.n_a, direct.d_a, direct.d_b)
    )
    elapsed = time.perf_counter() - t0
    ok = bit_exact and excess <= 1e-12 and elapsed < 60
    criteria.check("6 harness equivalence", ok,
                   f"bit-exact={bit_exact}, max excess over rounding bound {excess:.1e}, {elapsed:.2f}s")


CONFIG = """
[run]
out_dir = "{out}"
[synth]
length = 2000
[agent]
hidden_sizes = [32, 32]
seed = 5
[train]
steps = 1500
[harness]
period = 100
retrain_steps = 100
[plots]
enabled = false
"""


def test_criterion_7_determinism(criteria, tmp_path, capsys):
    snapshots = []
    for out in ("a", "b"):
        cfg = tmp_path / f"{out}.toml"
        cfg.write_text(CONFIG.format(out=out))
        codes = [main([cmd, "--config", str(cfg)]) for cmd in ("synth", "train", "eval", "harness")]
        assert codes == [0, 0, 0, 0]
        snapshots.append({p.name: p.read_bytes() for p in sorted((tmp_path / out).iterdir())})
    differing = [k for k in snapshots[0] if snapshots[0][k] != snapshots[1].get(k)]
    ok = snapshots[0].keys() == snapshots[1].keys() and not differing and "checkpoint.json" in snapshots[0]
    criteria.check("7 determinism", ok, f"{len(snapshots[0])} files compared, differing: {differing or 'none'}")


def test_criterion_8_synthetic_fidelity(criteria, sample_trace):
    t0 = time.perf_counter()
    src_mean = sample_trace.demands.mean()
    src_ac = lag1_autocorr(sample_trace.demands)
    worst_mean, worst_ac = 0.0, 0.0
    for seed in range(20):
        out = synthesize_trace(sample_trace, SynthConfig(seed=seed, length=len(sample_trace)))
        worst_mean = max(worst_mean, abs(out.demands.mean() - src_mean) / src_mean)
        worst_ac = max(worst_ac, abs(lag1_autocorr(out.demands) - src_ac))
    elapsed = time.perf_counter() - t0
    ok = worst_mean <= 0.1 and worst_ac <= 0.2 and elapsed < 60
    criteria.check("8 synthetic fidelity", ok,
                   f"max mean dev {worst_mean:.3%}, max lag-1 dev {worst_ac:.3f}, {elapsed:.2f}s")
