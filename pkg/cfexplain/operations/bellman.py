"""Finite-horizon Bellman solver and behavior-policy rollouts."""

from typing import Tuple

import numpy as np

from ..models.mdp import DeterministicPolicy, Mdp, Trajectory
from ..utils.extended import expectation
from ..utils.rng import as_rng


def optimal_policy_bellman(mdp: Mdp) -> Tuple[DeterministicPolicy, np.ndarray]:
    """Solve V[t][s] = max_a R(s,a) + Σ_s' P(s'|s,a) V[t+1][s'] backwards from V[T] = 0.

    Returns the argmax policy (ties toward the smallest action) and the
    (T+1, n) value table.
    """
    mdp.require_valid()
    horizon, n = mdp.horizon, mdp.n
    values = np.zeros((horizon + 1, n))
    table = np.zeros((horizon, n), dtype=int)
    for t in range(horizon - 1, -1, -1):
        q = mdp.reward + expectation(mdp.transition, values[t + 1])
        table[t] = np.argmax(q, axis=1)
        values[t] = q[np.arange(n), table[t]]
    return DeterministicPolicy(table), values


def sample_trajectory(mdp: Mdp, policy: DeterministicPolicy, deviation_prob: float,
                      seed, s0: int) -> Trajectory:
    """Roll out ``policy`` for T steps, deviating with probability ``deviation_prob``.

    A deviation picks one of the other m-1 actions uniformly at random; with a
    single action there is nothing to deviate to.
    """
    if not 0.0 <= deviation_prob <= 1.0:
        raise ValueError(f"deviation_prob must be in [0, 1], got {deviation_prob}")
    rng = as_rng(seed)
    states, actions = [], []
    s = int(s0)
    for t in range(mdp.horizon):
        a = policy.action(t, s)
        if mdp.m > 1 and rng.random() < deviation_prob:
            other = int(rng.integers(mdp.m - 1))
            a = other if other < a else other + 1
        states.append(s)
        actions.append(a)
        if t < mdp.horizon - 1:
            s = int(rng.choice(mdp.n, p=mdp.transition[s, a]))
    return Trajectory(states=tuple(states), actions=tuple(actions))
