"""Shared fixtures for cfexplain tests."""

import numpy as np
import pytest

from cfexplain.models.episodes import EpisodeLog, Vocabulary
from cfexplain.models.mdp import Mdp, Trajectory
from cfexplain.operations.bellman import optimal_policy_bellman, sample_trajectory
from cfexplain.operations.cf_estimate import estimate_counterfactual_transitions
from cfexplain.operations.synthetic import random_instance, synth_instance
from cfexplain.utils.rng import Stream, make_rng


def make_case(seed, n=3, m=2, horizon=4, d=500, zero_prob=0.0, deviation_prob=0.3):
    """Random instance, a realization of its Bellman policy and the cf estimate."""
    mdp = random_instance(n, m, horizon, seed, zero_prob=zero_prob)
    policy, _ = optimal_policy_bellman(mdp)
    rng = make_rng(seed, Stream.TRAJECTORY)
    traj = sample_trajectory(mdp, policy, deviation_prob, rng, int(rng.integers(n)))
    cf = estimate_counterfactual_transitions(mdp, traj, d=d, seed=seed)
    return mdp, traj, cf


@pytest.fixture
def identity_mdp():
    """Two states, two actions, every action keeps the state; rewards 0."""
    transition = np.zeros((2, 2, 2))
    transition[0, :, 0] = 1.0
    transition[1, :, 1] = 1.0
    return Mdp(transition=transition, reward=np.zeros((2, 2)), horizon=3)


@pytest.fixture
def chain_mdp():
    """Three states; action 1 tends to move up, action 0 tends to stay. R(s, a) = s."""
    transition = np.array([
        [[0.8, 0.2, 0.0], [0.2, 0.6, 0.2]],
        [[0.1, 0.8, 0.1], [0.0, 0.3, 0.7]],
        [[0.0, 0.2, 0.8], [0.0, 0.1, 0.9]],
    ])
    reward = np.repeat(np.arange(3, dtype=float)[:, None], 2, axis=1)
    return Mdp(transition=transition, reward=reward, horizon=4)


@pytest.fixture
def chain_traj():
    return Trajectory(states=(0, 0, 1, 1), actions=(0, 0, 0, 0), id="chain")


@pytest.fixture
def chain_cf(chain_mdp, chain_traj):
    return estimate_counterfactual_transitions(chain_mdp, chain_traj, d=2000, seed=3)


@pytest.fixture
def random_case():
    return make_case(11, n=4, m=3, horizon=6, d=1000)


@pytest.fixture
def synthetic_mdp():
    return synth_instance(6, 3, 0.4, seed=5, horizon=8)


@pytest.fixture
def episode_log():
    """Five severity levels, three themes, episodes of varying length."""
    episodes = [
        Trajectory(states=(4, 3, 3, 2, 1), actions=(0, 1, 1, 2, 0), id="p1"),
        Trajectory(states=(3, 3, 2, 2, 2, 1), actions=(1, 0, 2, 2, 1, 0), id="p2"),
        Trajectory(states=(2, 1, 1, 0), actions=(2, 2, 1, 0), id="p3"),
    ]
    vocabulary = Vocabulary(
        states=["none", "mild", "moderate", "severe", "extreme"],
        actions=["STR", "BIO", "PSE"],
    )
    return EpisodeLog(episodes=episodes, vocabulary=vocabulary)
