"""Baseline counterfactual policies: random, greedy and noisy greedy.

Each baseline is materialised as a deterministic table over (l, t, s) drawn
from its seed, so it can be scored exactly with ``evaluate_policy_exact`` and
sampled with the explanation sampler. Once l = k every baseline replays the
observed action.
"""

from enum import Enum

import numpy as np

from ..models.counterfactual import CounterfactualTransitions, EnhancedPolicy
from ..models.mdp import Mdp, Trajectory
from ..utils.extended import NEG_INF, expectation
from ..utils.rng import as_rng

NOISY_GREEDY_PROB = 0.5


class BaselineKind(str, Enum):
    RANDOM = "random"
    GREEDY = "greedy"
    NOISY_GREEDY = "noisy_greedy"


def next_state_reward(rewards: np.ndarray) -> np.ndarray:
    """R_next(s') = max over finite R(s', a'); -inf when a state has none.

    The one-step lookahead term of the greedy baseline leaves a' unbound; with
    state-only rewards every choice of a' gives the same value.
    """
    rewards = np.asarray(rewards, dtype=float)
    finite = np.where(np.isfinite(rewards), rewards, NEG_INF)
    return finite.max(axis=1)


def greedy_scores(mdp: Mdp, cf: CounterfactualTransitions, t: int) -> np.ndarray:
    """(n, m) one-step lookahead scores R(s, a) + Σ_s' P_{τ,t}(s'|s,a) R_next(s')."""
    if t >= cf.n_slices:
        return np.array(mdp.reward, dtype=float)
    return mdp.reward + expectation(cf.slices[t], next_state_reward(mdp.reward))


def greedy_actions(mdp: Mdp, cf: CounterfactualTransitions, horizon: int) -> np.ndarray:
    """(T, n) greedy action per time and state, ties toward the smallest action."""
    return np.stack([np.argmax(greedy_scores(mdp, cf, t), axis=1) for t in range(horizon)])


def baseline_policy(kind, mdp: Mdp, traj: Trajectory, cf: CounterfactualTransitions,
                    k: int, seed) -> EnhancedPolicy:
    kind = BaselineKind(kind)
    rng = as_rng(seed)
    horizon, n, m = traj.horizon, mdp.n, mdp.m
    observed = np.broadcast_to(np.array(traj.actions)[:, None], (horizon, n))
    greedy = greedy_actions(mdp, cf, horizon)

    table = np.empty((k + 1, horizon, n), dtype=int)
    for l in range(k + 1):
        if l == k:
            table[l] = observed
        elif kind == BaselineKind.RANDOM:
            table[l] = rng.integers(m, size=(horizon, n))
        elif kind == BaselineKind.GREEDY:
            table[l] = greedy
        else:
            use_greedy = rng.random((horizon, n)) < NOISY_GREEDY_PROB
            table[l] = np.where(use_greedy, greedy, observed)
    return EnhancedPolicy(k=k, actions=table)
