import numpy as np
import pytest

from dsshare.env import RewardParams
from dsshare.metrics import (
    Rollout,
    compute_metrics,
    read_metrics_table,
    read_rollout,
    render_table,
    write_metrics_table,
    write_rollout,
)
from dsshare.policies import OraclePolicy, QuasiStaticPolicy, rollout

from .conftest import constant_pair


def make_rollout():
    d_a = np.array([10.0, 20.0, 0.0, 5.0])
    d_b = np.array([10.0, 30.0, 4.0, 5.0])
    n_a = np.array([12.0, 20.0, 1.0, 4.0])
    n_b = 20.0 - n_a
    J = np.array([0.1, 0.2, 0.3, 0.4])
    return Rollout("x", d_a, d_b, n_a, n_b, J, -1.5 * J, np.full(4, 0.5))


def test_metrics_values():
    m = compute_metrics(make_rollout(), RewardParams(0.5, 20.0))
    ea = np.array([0.2, 0.0, 1.0, -0.2])  # zero demand guarded to 0.5
    assert m.steps == 4
    assert m.mean_j == pytest.approx(0.25)
    assert m.mean_abs_frac_err_a == pytest.approx(np.abs(ea).mean())
    assert m.mean_sq_frac_err_a == pytest.approx((ea**2).mean())
    assert m.mean_surplus_a == pytest.approx(0.3)
    assert m.mean_deficit_a == pytest.approx(0.05)
    assert (m.over_rate_a, m.under_rate_a) == (0.5, 0.25)
    assert m.over_rate_b + m.under_rate_b <= 1.0


def test_metrics_table_round_trip(tmp_path):
    params = RewardParams(0.5, 20.0)
    recs = [compute_metrics(make_rollout(), params), compute_metrics(make_rollout(), params.with_zeta(0.2))]
    write_metrics_table(recs, tmp_path / "m.csv")
    assert read_metrics_table(tmp_path / "m.csv") == recs
    assert render_table(recs).splitlines()[0].startswith("policy")


def test_rollout_round_trip(tmp_path):
    r = make_rollout()
    write_rollout(r, tmp_path / "r.csv")
    back = read_rollout(tmp_path / "r.csv", "x")
    for k, v in r.columns().items():
        np.testing.assert_array_equal(back.columns()[k], v)


def test_policies_on_constant_demand():
    pair = constant_pair(30.0, 70.0, 50)
    params = RewardParams(0.5, 100.0)
    oracle = rollout(OraclePolicy(), "oracle", pair, params, 2)
    np.testing.assert_allclose(oracle.imbalance, 0.0, atol=1e-20)
    quasi = rollout(QuasiStaticPolicy.from_traces(pair, params), "quasi_static", pair, params, 2)
    assert np.all(quasi.n_a == 30.0)


def test_oracle_dominates_per_step(bursty_pair):
    params = RewardParams(0.5, 100.0)
    orc = rollout(OraclePolicy(), "oracle", bursty_pair, params, 2)
    qs = rollout(QuasiStaticPolicy.from_traces(bursty_pair, params), "qs", bursty_pair, params, 2)
    assert np.all(orc.imbalance <= qs.imbalance + 1e-12)
