"""Sampling counterfactual explanations from an enhanced-state policy."""

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from ..errors import BudgetExceededError
from ..models.counterfactual import CounterfactualTransitions, EnhancedPolicy, Explanation
from ..models.mdp import Trajectory
from ..utils.rng import as_rng


@dataclass(frozen=True)
class Rollouts:
    """N counterfactual realizations as (N, T) arrays."""

    states: np.ndarray
    levels: np.ndarray
    actions: np.ndarray
    outcomes: np.ndarray

    def __len__(self) -> int:
        return self.states.shape[0]

    def changed(self, traj: Trajectory) -> np.ndarray:
        return self.actions != np.array(traj.actions)[None, :]

    def explanation(self, i: int, traj: Trajectory) -> Explanation:
        changed = np.nonzero(self.actions[i] != np.array(traj.actions))[0]
        return Explanation(
            states=tuple(int(s) for s in self.states[i]),
            levels=tuple(int(l) for l in self.levels[i]),
            actions=tuple(int(a) for a in self.actions[i]),
            outcome=float(self.outcomes[i]),
            changed_steps=frozenset(int(t) for t in changed),
        )


def rollout(policy: EnhancedPolicy, cf: CounterfactualTransitions, traj: Trajectory,
            rewards: np.ndarray, n_samples: int, seed) -> Rollouts:
    """Run the explanation sampler for ``n_samples`` realizations at once.

    All uniforms are drawn up front as an (N, T) block, so the first N samples
    of a larger batch are the same as a batch of N with the same seed.
    """
    if n_samples < 1:
        raise ValueError(f"need n_samples >= 1, got {n_samples}")
    rewards = np.asarray(rewards, dtype=float)
    rng = as_rng(seed)
    horizon = traj.horizon
    k = policy.k
    uniforms = rng.random((n_samples, horizon))

    states = np.empty((n_samples, horizon), dtype=int)
    levels = np.empty((n_samples, horizon), dtype=int)
    actions = np.empty((n_samples, horizon), dtype=int)
    outcomes = np.zeros(n_samples)

    s = np.full(n_samples, traj.s0, dtype=int)
    l = np.zeros(n_samples, dtype=int)
    for t in range(horizon):
        a = policy.actions[l, t, s]
        states[:, t], levels[:, t], actions[:, t] = s, l, a
        outcomes += rewards[s, a]
        l = l + (a != traj.actions[t])
        if (l > k).any():
            raise BudgetExceededError(f"a counterfactual realization exceeded k={k} changes at t={t}")
        if t < horizon - 1:
            cumulative = np.cumsum(cf.slices[t][s, a], axis=1)
            target = uniforms[:, t] * cumulative[:, -1]
            s = np.argmax(cumulative > target[:, None], axis=1)
    return Rollouts(states=states, levels=levels, actions=actions, outcomes=outcomes)


def sample_explanation(policy: EnhancedPolicy, cf: CounterfactualTransitions,
                       traj: Trajectory, rewards: np.ndarray, seed) -> Explanation:
    """Sample one counterfactual realization τ' and its outcome o(τ')."""
    return rollout(policy, cf, traj, rewards, 1, seed).explanation(0, traj)


def sample_explanations(policy: EnhancedPolicy, cf: CounterfactualTransitions,
                        traj: Trajectory, rewards: np.ndarray, n_samples: int,
                        seed) -> List[Explanation]:
    batch = rollout(policy, cf, traj, rewards, n_samples, seed)
    return [batch.explanation(i, traj) for i in range(n_samples)]


def unique_explanations(policy: EnhancedPolicy, cf: CounterfactualTransitions,
                        traj: Trajectory, rewards: np.ndarray, n_samples: int,
                        seed) -> int:
    """Number of distinct counterfactual action sequences among ``n_samples`` draws."""
    batch = rollout(policy, cf, traj, rewards, n_samples, seed)
    return int(np.unique(batch.actions, axis=0).shape[0])


@dataclass(frozen=True)
class ChangeProfile:
    frequencies: np.ndarray
    best: Explanation
    outcomes: np.ndarray


def change_frequency_profile(policy: EnhancedPolicy, cf: CounterfactualTransitions,
                             traj: Trajectory, rewards: np.ndarray, n_samples: int,
                             seed) -> ChangeProfile:
    """Per-step frequency of a'_t != a_t, plus the best sampled realization.

    Ties for the best outcome go to the earliest sample.
    """
    batch = rollout(policy, cf, traj, rewards, n_samples, seed)
    frequencies = batch.changed(traj).mean(axis=0)
    best = int(np.argmax(batch.outcomes))
    return ChangeProfile(
        frequencies=frequencies,
        best=batch.explanation(best, traj),
        outcomes=batch.outcomes.copy(),
    )


@dataclass(frozen=True)
class ExplanationGroup:
    """All sampled realizations sharing one counterfactual action sequence."""

    actions: Tuple[int, ...]
    changes: Tuple[Tuple[int, int, int], ...]
    frequency: float
    mean_outcome: float


def explanation_summary(policy: EnhancedPolicy, cf: CounterfactualTransitions,
                        traj: Trajectory, rewards: np.ndarray, n_samples: int,
                        seed) -> List[ExplanationGroup]:
    """Group sampled explanations by action sequence, most frequent first.

    ``changes`` lists (t, observed action, counterfactual action) triples.
    """
    batch = rollout(policy, cf, traj, rewards, n_samples, seed)
    counts: Counter = Counter()
    outcome_sums: Dict[tuple, float] = defaultdict(float)
    for row, value in zip(batch.actions, batch.outcomes):
        key = tuple(int(a) for a in row)
        counts[key] += 1
        outcome_sums[key] += value

    groups = []
    for key, count in counts.most_common():
        changes = tuple(
            (t, traj.actions[t], a) for t, a in enumerate(key) if a != traj.actions[t]
        )
        groups.append(ExplanationGroup(
            actions=key,
            changes=changes,
            frequency=count / n_samples,
            mean_outcome=outcome_sums[key] / count,
        ))
    return groups
