"""Building an MDP from an episode log and explaining the logged episodes.

Transitions get a Dirichlet posterior with a band prior: concentration 1 for
neighbouring states (|i - j| <= 1) and 0.01 elsewhere, so adjacent moves
dominate until the counts say otherwise and no entry is ever zero.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..models.episodes import EpisodeLog
from ..models.mdp import Mdp, Trajectory, outcome, validate_trajectory
from ..models.report import BaselineRecord, MetricsReport, ProfileRecord, RealizationRecord
from ..utils.extended import NEG_INF
from ..utils.rng import Stream, make_rng
from ..utils.workers import fan_out
from .baselines import BaselineKind, baseline_policy
from .cf_estimate import DEFAULT_D, estimate_counterfactual_transitions
from .explain import change_frequency_profile, unique_explanations
from .planner import (
    evaluate_policy_exact,
    feasible_budgets,
    observed_policy,
    solve_optimal_cf_policy,
)

logger = logging.getLogger(__name__)

NEAR_CONCENTRATION = 1.0
FAR_CONCENTRATION = 0.01
DEFAULT_POSTERIOR_SAMPLES = 100_000
DEFAULT_LOG_SAMPLES = 1000


def band_prior(n: int, near: float = NEAR_CONCENTRATION,
               far: float = FAR_CONCENTRATION) -> np.ndarray:
    """(n, n) Dirichlet concentrations: ``near`` on the tridiagonal band, ``far`` off it."""
    index = np.arange(n)
    return np.where(np.abs(index[:, None] - index[None, :]) <= 1, near, far)


def transition_counts(log: EpisodeLog, n: int, m: int) -> np.ndarray:
    """(n, m, n) counts of observed (s_t, a_t, s_{t+1}) triples."""
    counts = np.zeros((n, m, n))
    for episode in log:
        if episode.horizon < 2:
            continue
        s = np.array(episode.states)
        a = np.array(episode.actions)
        np.add.at(counts, (s[:-1], a[:-1], s[1:]), 1)
    return counts


def dirichlet_transition_estimate(log: EpisodeLog, n: int, m: int,
                                  method: str = "closed_form",
                                  n_posterior_samples: int = DEFAULT_POSTERIOR_SAMPLES,
                                  seed=0) -> np.ndarray:
    """Posterior-mean transition tensor under the band prior.

    ``closed_form`` returns (alpha + c) / Σ(alpha + c) row by row; ``sample``
    averages ``n_posterior_samples`` Dirichlet draws per (s, a) row instead.
    """
    problems = log.validate(n, m)
    if problems:
        raise ValueError("; ".join(problems))
    posterior = band_prior(n)[:, None, :] + transition_counts(log, n, m)

    if method == "closed_form":
        return posterior / posterior.sum(axis=2, keepdims=True)
    if method != "sample":
        raise ValueError(f"unknown estimation method: {method}")

    rng = make_rng(seed, Stream.DIRICHLET)
    estimate = np.empty_like(posterior)
    for s in range(n):
        for a in range(m):
            estimate[s, a] = rng.dirichlet(posterior[s, a], size=n_posterior_samples).mean(axis=0)
    # draws with tiny concentrations can underflow; renormalise the averages
    return estimate / estimate.sum(axis=2, keepdims=True)


def assign_rewards_from_log(log: EpisodeLog, n: int, m: Optional[int] = None,
                            forbid_unobserved: bool = True) -> np.ndarray:
    """R(s, a) = n - s for observed pairs; -inf for unobserved ones.

    With ``forbid_unobserved=False`` every pair gets n - s.
    """
    if m is None:
        m = max((max(e.actions) for e in log if e.actions), default=-1) + 1
        if log.vocabulary is not None:
            m = max(m, len(log.vocabulary.actions))
    reward = np.repeat((n - np.arange(n, dtype=float))[:, None], m, axis=1)
    if not forbid_unobserved:
        return reward
    seen = np.zeros((n, m), dtype=bool)
    for episode in log:
        seen[list(episode.states), list(episode.actions)] = True
    return np.where(seen, reward, NEG_INF)


def episode_name(episode: Trajectory, index: int) -> str:
    return episode.id if episode.id is not None else str(index)


@dataclass(frozen=True)
class EpisodeTask:
    model: Mdp
    episode: Trajectory
    index: int
    k_values: Tuple[int, ...]
    d: int
    n_samples: int
    seed: int


def _episode_mdp(task: EpisodeTask) -> Optional[Mdp]:
    mdp = task.model.with_horizon(task.episode.horizon)
    problems = validate_trajectory(mdp, task.episode)
    if problems:
        logger.warning("skipping episode %s: %s",
                       episode_name(task.episode, task.index), "; ".join(problems))
        return None
    return mdp


def explain_episode(task: EpisodeTask) -> MetricsReport:
    """Metrics and per-step change frequencies of one logged episode for each k."""
    report = MetricsReport()
    mdp = _episode_mdp(task)
    if mdp is None:
        return report
    traj = task.episode
    name = episode_name(traj, task.index)
    key = (task.seed, task.index)
    observed = outcome(mdp, traj)
    cf = estimate_counterfactual_transitions(mdp, traj, d=task.d, seed=key)

    for k in feasible_budgets(task.k_values, traj.horizon):
        policy = solve_optimal_cf_policy(mdp, traj, cf, k)
        unique = unique_explanations(policy, cf, traj, mdp.reward, task.n_samples,
                                     make_rng(key, Stream.EXPLANATION, k))
        report.records.append(RealizationRecord(
            realization=name,
            k=k,
            observed_outcome=observed,
            cf_outcome=policy.value(traj.s0),
            unique_explanations=unique,
            horizon=traj.horizon,
        ))
        profile = change_frequency_profile(policy, cf, traj, mdp.reward, task.n_samples,
                                           make_rng(key, Stream.PROFILE, k))
        for t, frequency in enumerate(profile.frequencies):
            report.profiles.append(ProfileRecord(
                realization=name,
                k=k,
                t=t,
                change_frequency=float(frequency),
                observed_state=traj.states[t],
                best_state=profile.best.states[t],
            ))
    logger.debug("explained episode %s", name)
    return report


def _episode_tasks(transition, reward, log: EpisodeLog, k_values, d, n_samples, seed):
    # the model is checked once; each episode only supplies its horizon
    model = Mdp(np.asarray(transition, dtype=float), np.asarray(reward, dtype=float), 1)
    model.require_valid()
    k_values = tuple(sorted(set(int(k) for k in k_values)))
    return [
        EpisodeTask(model=model, episode=episode, index=i,
                    k_values=k_values, d=d, n_samples=n_samples, seed=seed)
        for i, episode in enumerate(log)
    ]


def run_log_suite(transition: np.ndarray, reward: np.ndarray, log: EpisodeLog,
                  k_values: Sequence[int], d: int = DEFAULT_D,
                  n_samples: int = DEFAULT_LOG_SAMPLES, seed: int = 0,
                  workers: int = 1) -> MetricsReport:
    """Explain every logged episode under its own horizon."""
    tasks = _episode_tasks(transition, reward, log, k_values, d, n_samples, seed)
    logger.info("log suite: %d episodes, k=%s", len(tasks), list(tasks[0].k_values) if tasks else [])
    report = MetricsReport()
    for part in fan_out(explain_episode, tasks, workers):
        report.extend(part)
    return report


def compare_episode(task: EpisodeTask) -> List[BaselineRecord]:
    """Exact values of the observed, optimal and baseline policies on one episode."""
    mdp = _episode_mdp(task)
    if mdp is None:
        return []
    traj = task.episode
    name = episode_name(traj, task.index)
    key = (task.seed, task.index)
    observed = outcome(mdp, traj)
    cf = estimate_counterfactual_transitions(mdp, traj, d=task.d, seed=key)

    records = []
    for k in feasible_budgets(task.k_values, traj.horizon):
        policies = {
            "observed": observed_policy(traj, mdp.n, k),
            "optimal": solve_optimal_cf_policy(mdp, traj, cf, k),
        }
        for kind in BaselineKind:
            policies[kind.value] = baseline_policy(
                kind, mdp, traj, cf, k, make_rng(key, Stream.BASELINE, k)
            )
        for label, policy in policies.items():
            records.append(BaselineRecord(
                realization=name,
                k=k,
                policy=label,
                value=evaluate_policy_exact(policy, cf, traj, mdp.reward),
                observed_outcome=observed,
            ))
    return records


def compare_baselines(transition: np.ndarray, log: EpisodeLog, k_values: Sequence[int],
                      reward: Optional[np.ndarray] = None, forbid_unobserved: bool = True,
                      d: int = DEFAULT_D, seed: int = 0,
                      workers: int = 1) -> List[BaselineRecord]:
    """Optimal policy against the random, greedy and noisy greedy baselines.

    Without an explicit ``reward`` matrix the rewards are assigned from the
    log; ``forbid_unobserved=False`` gives the variant in which unobserved
    pairs keep their finite reward.
    """
    transition = np.asarray(transition, dtype=float)
    if reward is None:
        n, m = transition.shape[0], transition.shape[1]
        reward = assign_rewards_from_log(log, n, m, forbid_unobserved=forbid_unobserved)
    tasks = _episode_tasks(transition, reward, log, k_values, d, 1, seed)
    records = []
    for part in fan_out(compare_episode, tasks, workers):
        records.extend(part)
    return records
