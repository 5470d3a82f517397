"""Tests for baseline counterfactual policies."""

import numpy as np
import pytest

from cfexplain.models.mdp import outcome
from cfexplain.operations.baselines import (
    NOISY_GREEDY_PROB,
    BaselineKind,
    baseline_policy,
    greedy_actions,
    greedy_scores,
    next_state_reward,
)
from cfexplain.operations.planner import evaluate_policy_exact, solve_optimal_cf_policy

from .conftest import make_case

KINDS = [kind.value for kind in BaselineKind]


class TestNextStateReward:
    def test_max_over_actions(self):
        rewards = np.array([[1.0, 4.0], [2.0, -np.inf], [-np.inf, -np.inf]])
        result = next_state_reward(rewards)
        assert list(result[:2]) == [4.0, 2.0]
        assert result[2] == -np.inf


class TestGreedy:
    def test_scores_shape(self, chain_mdp, chain_cf):
        assert greedy_scores(chain_mdp, chain_cf, 0).shape == (3, 2)

    def test_last_step_is_reward(self, chain_mdp, chain_cf):
        assert np.array_equal(greedy_scores(chain_mdp, chain_cf, 3), chain_mdp.reward)

    def test_actions_are_score_argmax(self, chain_mdp, chain_cf):
        table = greedy_actions(chain_mdp, chain_cf, 4)
        assert table.shape == (4, 3)
        for t in range(4):
            assert np.array_equal(table[t], np.argmax(greedy_scores(chain_mdp, chain_cf, t), axis=1))


class TestBaselinePolicy:
    @pytest.mark.parametrize("kind", KINDS)
    def test_zero_budget_replays_observed(self, kind, chain_mdp, chain_traj, chain_cf):
        policy = baseline_policy(kind, chain_mdp, chain_traj, chain_cf, 0, seed=0)
        value = evaluate_policy_exact(policy, chain_cf, chain_traj, chain_mdp.reward)
        assert value == pytest.approx(outcome(chain_mdp, chain_traj))

    @pytest.mark.parametrize("kind", KINDS)
    def test_last_level_is_observed(self, kind, chain_mdp, chain_traj, chain_cf):
        policy = baseline_policy(kind, chain_mdp, chain_traj, chain_cf, 2, seed=1)
        assert np.all(policy.actions[2] == np.array(chain_traj.actions)[:, None])

    def test_noisy_greedy_mixes_evenly(self, random_case):
        mdp, traj, cf = random_case
        greedy = greedy_actions(mdp, cf, traj.horizon)
        observed = np.array(traj.actions)[:, None]
        differs = greedy != observed
        assert differs.sum() > 0

        picked_greedy = 0
        trials = 400
        for seed in range(trials):
            policy = baseline_policy("noisy_greedy", mdp, traj, cf, 1, seed=seed)
            picked_greedy += int((policy.actions[0][differs] == greedy[differs]).sum())
        total = trials * int(differs.sum())
        se = np.sqrt(NOISY_GREEDY_PROB * (1 - NOISY_GREEDY_PROB) / total)
        assert abs(picked_greedy / total - NOISY_GREEDY_PROB) < 3 * se

    def test_unknown_kind(self, chain_mdp, chain_traj, chain_cf):
        with pytest.raises(ValueError):
            baseline_policy("oracle", chain_mdp, chain_traj, chain_cf, 1, seed=0)

    def test_seeded(self, chain_mdp, chain_traj, chain_cf):
        first = baseline_policy("random", chain_mdp, chain_traj, chain_cf, 2, seed=(1, 2))
        second = baseline_policy("random", chain_mdp, chain_traj, chain_cf, 2, seed=(1, 2))
        assert np.array_equal(first.actions, second.actions)


class TestDominance:
    def test_optimal_dominates_every_baseline(self):
        for seed in range(30):
            mdp, traj, cf = make_case(seed, n=4, m=3, horizon=6, d=300)
            for k in (1, 2, 4):
                optimal = solve_optimal_cf_policy(mdp, traj, cf, k).value(traj.s0)
                for kind in KINDS:
                    policy = baseline_policy(kind, mdp, traj, cf, k, seed=(seed, k))
                    value = evaluate_policy_exact(policy, cf, traj, mdp.reward)
                    assert value <= optimal + 1e-9
