import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dsshare.env import (
    Allocation,
    EnvError,
    Observation,
    RewardParams,
    build_observation,
    compute_imbalance,
    compute_reward,
    observation_matrix,
    optimal_allocation,
    quasi_static_allocation,
    step,
)
from dsshare.traces import DemandTrace

from .conftest import constant_pair


def grid_best(d_a, d_b, params, points=1001):
    """Brute-force minimizer of J over an evenly spaced grid on the pool line."""
    best = None
    for n_a in np.linspace(0.0, params.n_r, points):
        J = compute_imbalance(Allocation(n_a, params.n_r - n_a), d_a, d_b, params)
        if best is None or J < best[1]:
            best = (n_a, J)
    return best


class TestObservation:
    def test_no_history(self):
        da = [0, 1, 2, 3, 4, 7, 9]
        db = [0, 0, 0, 0, 0, 3, 1]
        obs = build_observation(da, db, 5, 0)
        assert obs.pairs.tolist() == [[7.0, 3.0]]

    def test_padding_at_start(self):
        obs = build_observation([4, 5], [2, 6], 0, 2)
        assert obs.pairs.tolist() == [[4.0, 2.0]] * 3

    def test_index_arithmetic(self):
        obs = build_observation([4, 5], [2, 6], 1, 1)
        assert obs.pairs.tolist() == [[5.0, 6.0], [4.0, 2.0]]

    @pytest.mark.parametrize("t", [-1, 2])
    def test_out_of_range(self, t):
        with pytest.raises(EnvError):
            build_observation([4, 5], [2, 6], t, 1)

    def test_accepts_traces(self):
        a = DemandTrace("A", 1.0, [1, 2, 3])
        b = DemandTrace("B", 1.0, [4, 5, 6])
        assert build_observation(a, b, 2, 1).pairs.tolist() == [[3, 6], [2, 5]]

    def test_matrix_rows_match(self):
        rng = np.random.default_rng(0)
        da, db = rng.uniform(0, 50, 30), rng.uniform(0, 50, 30)
        mat = observation_matrix(da, db, 3)
        for t in range(30):
            np.testing.assert_array_equal(mat[t], build_observation(da, db, t, 3).flat())

    def test_negative_rejected(self):
        with pytest.raises(EnvError):
            Observation([[1.0, -2.0]])


class TestImbalance:
    def test_exact_match(self):
        p = RewardParams(0.5, 20.0)
        assert compute_imbalance(Allocation(10, 10), 10, 10, p) == 0.0

    def test_symmetric_miss(self):
        p = RewardParams(0.5, 20.0)
        # 0.5 * 0.2**2 + 0.5 * (-0.2)**2
        assert compute_imbalance(Allocation(12, 8), 10, 10, p) == pytest.approx(0.04, abs=1e-12)

    def test_zeta_one_drops_ran_b(self):
        p = RewardParams(1.0, 15.0)
        assert compute_imbalance(Allocation(8, 7), 10, 5, p) == pytest.approx(0.04, abs=1e-12)

    def test_zero_demand_guard(self):
        p = RewardParams(0.5, 10.0, epsilon_demand=0.5)
        # effective demand 0.5 for RAN_A: ((1 - 0.5) / 0.5)**2 = 1
        assert compute_imbalance(Allocation(1, 9), 0.0, 9, p) == pytest.approx(0.5, abs=1e-12)


class TestReward:
    def test_zero(self):
        for z in (0.0, 0.3, 1.0):
            assert compute_reward(0.0, RewardParams(z)) == 0.0

    def test_zeta_zero(self):
        assert compute_reward(0.25, RewardParams(0.0)) == pytest.approx(-0.25, abs=1e-12)

    def test_literal(self):
        assert compute_reward(0.04, RewardParams(0.5)) == pytest.approx(-0.06, abs=1e-12)

    def test_plain_form(self):
        assert compute_reward(0.04, RewardParams(0.5, reward_form="plain")) == -0.04

    def test_negative_imbalance_rejected(self):
        with pytest.raises(EnvError):
            compute_reward(-1.0, RewardParams())


class TestStep:
    def test_exact_allocation_zero_reward(self):
        pair = constant_pair(30.0, 70.0, 10)
        res = step(3, Allocation(30, 70), pair.a, pair.b, RewardParams(0.5, 100.0), 2)
        assert res.reward == 0.0 and res.imbalance == 0.0

    def test_pure(self):
        pair = constant_pair(30.0, 70.0, 10)
        p = RewardParams(0.5, 100.0)
        assert step(4, Allocation(40, 60), pair.a, pair.b, p, 2) == step(4, Allocation(40, 60), pair.a, pair.b, p, 2)

    def test_composed_example(self):
        pair = constant_pair(10.0, 10.0, 5)
        res = step(0, Allocation(12, 8), pair.a, pair.b, RewardParams(0.5, 20.0), 0)
        assert res.imbalance == pytest.approx(0.04, abs=1e-12)
        assert res.reward == pytest.approx(-0.06, abs=1e-12)
        assert res.demands == (10.0, 10.0)


class TestOracle:
    def test_satisfiable(self):
        p = RewardParams(0.3, 50.0)
        alloc = optimal_allocation(20, 30, p)
        assert alloc.n_a == pytest.approx(20, abs=1e-12)
        assert compute_imbalance(alloc, 20, 30, p) == pytest.approx(0.0, abs=1e-20)

    def test_symmetric_surplus(self):
        p = RewardParams(0.5, 30.0)
        alloc = optimal_allocation(10, 10, p)
        assert alloc.n_a == pytest.approx(15.0, abs=1e-12)
        best_n_a, _ = grid_best(10, 10, p, points=301)
        assert best_n_a == pytest.approx(15.0, abs=1e-9)

    def test_zeta_one(self):
        p = RewardParams(1.0, 30.0)
        alloc = optimal_allocation(10, 10, p)
        assert alloc.n_a == pytest.approx(10.0, abs=1e-6)
        assert alloc.n_b == pytest.approx(20.0, abs=1e-6)
        assert grid_best(10, 10, p, points=301)[0] == pytest.approx(10.0, abs=1e-9)

    def test_zeta_zero(self):
        p = RewardParams(0.0, 30.0)
        assert optimal_allocation(10, 10, p).n_b == pytest.approx(10.0, abs=1e-6)

    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(0.0, 1.0),
        st.floats(0.0, 80.0),
        st.floats(0.0, 80.0),
        st.floats(1.0, 150.0),
    )
    def test_beats_grid(self, zeta, d_a, d_b, n_r):
        p = RewardParams(zeta, n_r)
        alloc = optimal_allocation(d_a, d_b, p)
        assert alloc.n_a + alloc.n_b == pytest.approx(n_r, rel=1e-12)
        assert 0 <= alloc.n_a <= n_r
        J_star = compute_imbalance(alloc, d_a, d_b, p)
        assert J_star <= grid_best(d_a, d_b, p, 1000)[1] + 1e-9

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.5, 80.0), st.floats(0.5, 80.0), st.floats(1.0, 150.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_intent_monotone(self, d_a, d_b, n_r, z1, z2):
        z1, z2 = sorted((z1, z2))
        errs = []
        for z in (z1, z2):
            alloc = optimal_allocation(d_a, d_b, RewardParams(z, n_r))
            errs.append(((alloc.n_a - d_a) / d_a) ** 2)
        assert errs[1] <= errs[0] + 1e-9


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 80.0), st.floats(0.0, 80.0), st.floats(0.0, 100.0))
def test_swap_symmetry(zeta, d_a, d_b, n_a):
    n_r = 100.0
    J = compute_imbalance(Allocation(n_a, n_r - n_a), d_a, d_b, RewardParams(zeta, n_r))
    J_swapped = compute_imbalance(Allocation(n_r - n_a, n_a), d_b, d_a, RewardParams(1.0 - zeta, n_r))
    assert J == pytest.approx(J_swapped, rel=1e-9, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.0, 80.0), st.floats(0.0, 80.0), st.floats(0.0, 99.0), st.floats(0.01, 0.5))
def test_strict_convexity(zeta, d_a, d_b, n_a, h):
    p = RewardParams(zeta, 100.0)
    J = [compute_imbalance(Allocation(x, 100.0 - x), d_a, d_b, p) for x in (n_a, n_a + h, n_a + 2 * h)]
    assert J[0] - 2 * J[1] + J[2] > 0


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1e4), st.sampled_from(["literal", "plain"]))
def test_reward_proportional(zeta, J, form):
    p = RewardParams(zeta, reward_form=form)
    scale = (1.0 + zeta) if form == "literal" else 1.0
    assert compute_reward(J, p) == pytest.approx(-scale * J, rel=1e-12, abs=0)


class TestQuasiStatic:
    def test_peaks_fit(self):
        a = np.array([10.0, 40.0, 20.0])
        b = np.array([50.0, 30.0, 5.0])
        alloc = quasi_static_allocation(a, b, RewardParams(n_r=100.0))
        assert (alloc.n_a, alloc.n_b) == (40.0, 60.0)

    def test_proportional_fallback(self):
        alloc = quasi_static_allocation([80.0], [80.0], RewardParams(n_r=100.0))
        assert (alloc.n_a, alloc.n_b) == (50.0, 50.0)

    def test_constant_traces_zero_cost(self):
        pair = constant_pair(35.0, 65.0, 20)
        p = RewardParams(0.5, 100.0)
        alloc = quasi_static_allocation(pair.a, pair.b, p)
        assert all(step(t, alloc, pair.a, pair.b, p, 1).imbalance == 0.0 for t in range(20))

    def test_empty(self):
        with pytest.raises(Exception):
            quasi_static_allocation([], [1.0], RewardParams())


@pytest.mark.parametrize("kwargs", [{"zeta": 1.5}, {"zeta": -0.1}, {"n_r": 0}, {"epsilon_demand": 0}, {"reward_form": "x"}])
def test_reward_params_validation(kwargs):
    with pytest.raises(EnvError):
        RewardParams(**kwargs)
