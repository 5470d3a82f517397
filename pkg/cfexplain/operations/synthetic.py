"""Synthetic environments and the synthetic experiment suite.

Each instance is a random MDP whose rows concentrate mass on one preferred
successor s*; ``alpha`` controls how much mass leaks to the other states.
Realizations are sampled from the Bellman-optimal policy with occasional
random deviations, then explained for every budget k.
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from ..models.mdp import DeterministicPolicy, Mdp, outcome
from ..models.report import MetricsReport, RealizationRecord
from ..utils.rng import Stream, make_rng
from ..utils.workers import fan_out
from .bellman import optimal_policy_bellman, sample_trajectory
from .cf_estimate import DEFAULT_D, estimate_counterfactual_transitions
from .explain import unique_explanations
from .planner import feasible_budgets, solve_optimal_cf_policy

logger = logging.getLogger(__name__)

DEFAULT_DEVIATION_PROB = 0.05
DEFAULT_EXPLANATION_SAMPLES = 1000


@dataclass
class SyntheticSpec:
    n: int = 20
    m: int = 10
    horizon: int = 20
    alpha: float = 0.2
    n_instances: int = 10
    realizations_per_instance: int = 50
    deviation_prob: float = DEFAULT_DEVIATION_PROB
    seed: int = 0

    def validate(self) -> List[str]:
        problems = []
        if not 0.0 < self.alpha <= 1.0:
            problems.append(f"alpha must be in (0, 1], got {self.alpha}")
        for name in ("n", "m", "horizon", "n_instances", "realizations_per_instance"):
            if getattr(self, name) < 1:
                problems.append(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0.0 <= self.deviation_prob <= 1.0:
            problems.append(f"deviation_prob must be in [0, 1], got {self.deviation_prob}")
        return problems


def synth_instance(n: int, m: int, alpha: float, seed, horizon: int = 1) -> Mdp:
    """Random MDP with R(s, a) = s.

    For each (s, a) row a preferred successor s* gets weight 1 and every other
    state gets U[0, alpha]; weights are then normalized.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    rng = make_rng(seed, Stream.INSTANCE)
    weights = rng.uniform(0.0, alpha, size=(n, m, n))
    preferred = rng.integers(n, size=(n, m))
    rows, cols = np.indices((n, m))
    weights[rows, cols, preferred] = 1.0
    transition = weights / weights.sum(axis=2, keepdims=True)
    reward = np.repeat(np.arange(n, dtype=float)[:, None], m, axis=1)
    return Mdp(transition=transition, reward=reward, horizon=horizon)


def random_instance(n: int, m: int, horizon: int, seed, zero_prob: float = 0.0,
                    max_reward: int = 10) -> Mdp:
    """Dirichlet(1) rows with optional structural zeros and integer rewards.

    Each entry is zeroed with probability ``zero_prob``; every row keeps at
    least one nonzero entry.
    """
    rng = make_rng(seed, Stream.INSTANCE)
    transition = rng.dirichlet(np.ones(n), size=(n, m))
    if zero_prob > 0:
        zeroed = rng.random((n, m, n)) < zero_prob
        keep = rng.integers(n, size=(n, m))
        rows, cols = np.indices((n, m))
        zeroed[rows, cols, keep] = False
        transition = np.where(zeroed, 0.0, transition)
        transition /= transition.sum(axis=2, keepdims=True)
    reward = rng.integers(0, max_reward + 1, size=(n, m)).astype(float)
    return Mdp(transition=transition, reward=reward, horizon=horizon)


@dataclass(frozen=True)
class RealizationTask:
    """Everything one worker needs to explain one sampled realization."""

    mdp: Mdp
    policy: DeterministicPolicy
    instance: int
    realization: int
    alpha: float
    k_values: Tuple[int, ...]
    d: int
    deviation_prob: float
    n_samples: int
    seed: int


def explain_realization(task: RealizationTask) -> List[RealizationRecord]:
    """Sample one realization and record o(τ), ō and unique explanations per k."""
    key = (task.seed, task.instance, task.realization)
    traj_rng = make_rng(key, Stream.TRAJECTORY)
    s0 = int(traj_rng.integers(task.mdp.n))
    traj = sample_trajectory(task.mdp, task.policy, task.deviation_prob, traj_rng, s0)
    observed = outcome(task.mdp, traj)
    cf = estimate_counterfactual_transitions(task.mdp, traj, d=task.d, seed=key)

    name = f"i{task.instance}-r{task.realization}"
    records = []
    for k in feasible_budgets(task.k_values, traj.horizon):
        cf_policy = solve_optimal_cf_policy(task.mdp, traj, cf, k)
        unique = unique_explanations(
            cf_policy, cf, traj, task.mdp.reward, task.n_samples,
            make_rng(key, Stream.EXPLANATION, k),
        )
        records.append(RealizationRecord(
            realization=name,
            k=k,
            observed_outcome=observed,
            cf_outcome=cf_policy.value(traj.s0),
            unique_explanations=unique,
            instance=task.instance,
            alpha=task.alpha,
            horizon=traj.horizon,
        ))
    logger.debug("explained realization %s", name)
    return records


def run_synthetic_suite(spec: SyntheticSpec, k_values: Sequence[int], d: int = DEFAULT_D,
                        n_samples: int = DEFAULT_EXPLANATION_SAMPLES,
                        workers: int = 1) -> MetricsReport:
    """Build every instance, sample its realizations and explain them for each k."""
    problems = spec.validate()
    if problems:
        raise ValueError("; ".join(problems))
    k_values = tuple(sorted(set(int(k) for k in k_values)))

    tasks = []
    for i in range(spec.n_instances):
        mdp = synth_instance(spec.n, spec.m, spec.alpha, (spec.seed, i), horizon=spec.horizon)
        policy, _ = optimal_policy_bellman(mdp)
        for j in range(spec.realizations_per_instance):
            tasks.append(RealizationTask(
                mdp=mdp, policy=policy, instance=i, realization=j, alpha=spec.alpha,
                k_values=k_values, d=d, deviation_prob=spec.deviation_prob,
                n_samples=n_samples, seed=spec.seed,
            ))
    logger.info("synthetic suite alpha=%s: %d instances, %d realizations, k=%s",
                spec.alpha, spec.n_instances, len(tasks), list(k_values))

    report = MetricsReport()
    for records in fan_out(explain_realization, tasks, workers):
        report.records.extend(records)
    return report
