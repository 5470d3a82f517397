"""Tests for the budgeted counterfactual planner."""

import time

import numpy as np
import pytest

from cfexplain.errors import BudgetExceededError, DimensionMismatchError, OracleTooLargeError
from cfexplain.models.counterfactual import CounterfactualTransitions, EnhancedPolicy, EnhancedState
from cfexplain.models.mdp import Trajectory, outcome
from cfexplain.operations.planner import (
    brute_force_oracle,
    enhanced_transition,
    evaluate_policy_exact,
    feasible_budgets,
    observed_policy,
    solve_optimal_cf_policy,
)
from cfexplain.operations.synthetic import random_instance
from cfexplain.utils.rng import Stream, make_rng

from .conftest import make_case


class TestSolve:
    def test_zero_budget_value_is_observed_outcome(self, chain_mdp, chain_traj, chain_cf):
        policy = solve_optimal_cf_policy(chain_mdp, chain_traj, chain_cf, 0)
        assert policy.value(chain_traj.s0) == pytest.approx(outcome(chain_mdp, chain_traj))
        assert np.all(policy.actions[0] == np.array(chain_traj.actions)[:, None])

    def test_zero_budget_on_random_instances(self):
        for seed in range(20):
            mdp, traj, cf = make_case(seed, n=4, m=3, horizon=5, d=300)
            policy = solve_optimal_cf_policy(mdp, traj, cf, 0)
            assert policy.value(traj.s0) == pytest.approx(outcome(mdp, traj), abs=1e-9)

    def test_table_shapes(self, chain_mdp, chain_traj, chain_cf):
        policy = solve_optimal_cf_policy(chain_mdp, chain_traj, chain_cf, 2)
        assert policy.actions.shape == (3, 4, 3)
        assert policy.values.shape == (3, 5, 3)
        assert np.all(policy.values[:, 0, :] == 0)

    def test_last_level_replays_observed(self, chain_mdp, chain_traj, chain_cf):
        policy = solve_optimal_cf_policy(chain_mdp, chain_traj, chain_cf, 2)
        assert np.all(policy.actions[2] == np.array(chain_traj.actions)[:, None])

    def test_monotone_in_budget(self, random_case):
        mdp, traj, cf = random_case
        values = [
            solve_optimal_cf_policy(mdp, traj, cf, k).value(traj.s0)
            for k in range(traj.horizon + 1)
        ]
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))

    def test_improves_on_observed(self, chain_mdp, chain_traj, chain_cf):
        # Moving up with action 1 pays off from the first step.
        policy = solve_optimal_cf_policy(chain_mdp, chain_traj, chain_cf, 1)
        assert policy.value(chain_traj.s0) > outcome(chain_mdp, chain_traj)

    def test_ties_keep_observed_action(self, identity_mdp):
        traj_actions = (1, 0, 1)
        traj = Trajectory(states=(0, 0, 0), actions=traj_actions)
        cf = CounterfactualTransitions(
            slices=np.array([identity_mdp.transition, identity_mdp.transition]), d=1,
        )
        policy = solve_optimal_cf_policy(identity_mdp, traj, cf, 2)
        for l in range(3):
            assert np.all(policy.actions[l] == np.array(traj_actions)[:, None])

    def test_budget_out_of_range(self, chain_mdp, chain_traj, chain_cf):
        with pytest.raises(ValueError):
            solve_optimal_cf_policy(chain_mdp, chain_traj, chain_cf, 5)
        with pytest.raises(ValueError):
            solve_optimal_cf_policy(chain_mdp, chain_traj, chain_cf, -1)

    def test_dimension_mismatch(self, chain_mdp, chain_traj, chain_cf):
        short = CounterfactualTransitions(slices=chain_cf.slices[:1], d=chain_cf.d)
        with pytest.raises(DimensionMismatchError):
            solve_optimal_cf_policy(chain_mdp, chain_traj, short, 1)


class TestOracle:
    def test_matches_oracle_on_random_instances(self):
        checked = 0
        for seed in range(120):
            n = 2 + seed % 2
            m = 2 + (seed // 2) % 2
            horizon = 2 + seed % 3
            mdp, traj, cf = make_case(seed, n=n, m=m, horizon=horizon, d=200, zero_prob=0.2)
            for k in range(min(2, horizon) + 1):
                dp = solve_optimal_cf_policy(mdp, traj, cf, k).value(traj.s0)
                oracle = brute_force_oracle(mdp, traj, cf, k, max_policies=5000)
                assert dp == pytest.approx(oracle, abs=1e-9)
                checked += 1
        assert checked >= 100

    def test_enumerate_and_enhanced_agree(self):
        for seed in range(10):
            mdp, traj, cf = make_case(seed, n=2, m=2, horizon=3, d=200)
            for k in range(3):
                enumerated = brute_force_oracle(mdp, traj, cf, k, method="enumerate")
                enhanced = brute_force_oracle(mdp, traj, cf, k, method="enhanced")
                assert enumerated == pytest.approx(enhanced, abs=1e-9)

    def test_enumeration_limit(self, random_case):
        mdp, traj, cf = random_case
        with pytest.raises(OracleTooLargeError):
            brute_force_oracle(mdp, traj, cf, 3, method="enumerate", max_policies=10)
        value = brute_force_oracle(mdp, traj, cf, 3, max_policies=10)
        assert value == pytest.approx(solve_optimal_cf_policy(mdp, traj, cf, 3).value(traj.s0))

    def test_unknown_method(self, chain_mdp, chain_traj, chain_cf):
        with pytest.raises(ValueError):
            brute_force_oracle(chain_mdp, chain_traj, chain_cf, 1, method="guess")


class TestEvaluateExact:
    def test_equals_dp_value(self, random_case):
        mdp, traj, cf = random_case
        for k in range(4):
            policy = solve_optimal_cf_policy(mdp, traj, cf, k)
            exact = evaluate_policy_exact(policy, cf, traj, mdp.reward)
            assert exact == pytest.approx(policy.value(traj.s0), abs=1e-9)

    def test_observed_policy_is_observed_outcome(self, chain_mdp, chain_traj, chain_cf):
        policy = observed_policy(chain_traj, chain_mdp.n, 2)
        exact = evaluate_policy_exact(policy, chain_cf, chain_traj, chain_mdp.reward)
        assert exact == pytest.approx(outcome(chain_mdp, chain_traj))

    def test_change_without_budget_raises(self, chain_mdp, chain_traj, chain_cf):
        actions = np.array(observed_policy(chain_traj, chain_mdp.n, 1).actions)
        actions[0, 0, chain_traj.s0] = 1
        actions[1, 1, :] = 1
        with pytest.raises(BudgetExceededError):
            evaluate_policy_exact(EnhancedPolicy(k=1, actions=actions), chain_cf, chain_traj,
                                  chain_mdp.reward)

    def test_k_above_policy_budget(self, chain_mdp, chain_traj, chain_cf):
        policy = observed_policy(chain_traj, chain_mdp.n, 1)
        with pytest.raises(DimensionMismatchError):
            evaluate_policy_exact(policy, chain_cf, chain_traj, chain_mdp.reward, k=2)


class TestEnhancedTransition:
    def test_keep_observed_action(self, chain_traj, chain_cf):
        p = enhanced_transition(chain_cf, chain_traj, 1, 0, EnhancedState(0, 0), 0, EnhancedState(0, 0))
        assert p == chain_cf.slices[0, 0, 0, 0]
        assert enhanced_transition(
            chain_cf, chain_traj, 1, 0, EnhancedState(0, 0), 0, EnhancedState(0, 1)) == 0.0

    def test_change_spends_budget(self, chain_traj, chain_cf):
        p = enhanced_transition(chain_cf, chain_traj, 1, 0, EnhancedState(0, 0), 1, EnhancedState(1, 1))
        assert p == chain_cf.slices[0, 0, 1, 1]
        assert enhanced_transition(
            chain_cf, chain_traj, 1, 0, EnhancedState(0, 0), 1, EnhancedState(1, 0)) == 0.0

    def test_over_budget_destination(self, chain_traj, chain_cf):
        assert enhanced_transition(
            chain_cf, chain_traj, 1, 0, EnhancedState(0, 1), 1, EnhancedState(1, 2)) == 0.0

    def test_rows_sum_to_one(self, chain_traj, chain_cf):
        k = 1
        targets = [EnhancedState(s, l) for l in range(k + 1) for s in range(3)]
        for a in range(2):
            total = sum(
                enhanced_transition(chain_cf, chain_traj, k, 1, EnhancedState(1, 0), a, dst)
                for dst in targets
            )
            assert total == pytest.approx(1.0)


class TestFeasibleBudgets:
    def test_caps_and_dedupes(self):
        assert feasible_budgets([3, 1, 8, 10], 5) == [1, 3, 5]

    def test_keeps_zero(self):
        assert feasible_budgets([0, 2], 2) == [0, 2]


def _solve_time(n, m, horizon, k, repeats=5):
    rng = make_rng((n, horizon, k), Stream.DIRECT)
    mdp = random_instance(n, m, horizon, seed=(n, horizon))
    traj = Trajectory(states=tuple(int(s) for s in rng.integers(n, size=horizon)),
                      actions=tuple(int(a) for a in rng.integers(m, size=horizon)))
    cf = CounterfactualTransitions(slices=rng.dirichlet(np.ones(n), size=(horizon - 1, n, m)), d=1)
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        solve_optimal_cf_policy(mdp, traj, cf, k)
        best = min(best, time.perf_counter() - start)
    return best


class TestScaling:
    @pytest.mark.parametrize("doubled", ["n", "horizon", "k"])
    def test_doubling_one_dimension(self, doubled):
        base = {"n": 30, "m": 4, "horizon": 30, "k": 6}
        bigger = dict(base, **{doubled: base[doubled] * 2})
        assert _solve_time(**bigger) <= 5 * _solve_time(**base)
