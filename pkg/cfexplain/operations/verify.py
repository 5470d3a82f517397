"""Self-checks on small random instances.

Every instance runs the full pipeline (Bellman policy, behavior rollout,
counterfactual estimate, planner) and checks the results against the
brute-force oracle and the structural guarantees of the estimator.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List

from ..errors import BudgetExceededError
from ..models.mdp import outcome
from ..utils.rng import Stream, make_rng
from .baselines import BaselineKind, baseline_policy
from .bellman import optimal_policy_bellman, sample_trajectory
from .cf_estimate import check_counterfactual_stability, estimate_counterfactual_transitions
from .explain import rollout
from .planner import brute_force_oracle, evaluate_policy_exact, solve_optimal_cf_policy
from .synthetic import random_instance

logger = logging.getLogger(__name__)

MAX_STATES = 3
MAX_ACTIONS = 3
MAX_HORIZON = 4
MAX_BUDGET = 2
VERIFY_D = 200
VERIFY_SAMPLES = 1000
TOLERANCE = 1e-9


@dataclass
class CheckRecord:
    instance: int
    check: str
    passed: bool
    detail: str = ""


@dataclass
class VerificationResult:
    records: List[CheckRecord] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    @property
    def failures(self) -> List[CheckRecord]:
        return [r for r in self.records if not r.passed]

    def add(self, instance: int, check: str, passed: bool, detail: str = "") -> None:
        self.records.append(CheckRecord(instance, check, bool(passed), detail))


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=TOLERANCE, abs_tol=TOLERANCE)


def verify_instance(index: int, seed: int, result: VerificationResult, d: int = VERIFY_D) -> None:
    key = (seed, index)
    rng = make_rng(key, Stream.VERIFY)
    n = int(rng.integers(1, MAX_STATES + 1))
    m = int(rng.integers(1, MAX_ACTIONS + 1))
    horizon = int(rng.integers(1, MAX_HORIZON + 1))
    k = int(rng.integers(0, min(MAX_BUDGET, horizon) + 1))
    mdp = random_instance(n, m, horizon, key, zero_prob=0.2)
    behavior, _ = optimal_policy_bellman(mdp)
    s0 = int(rng.integers(n))
    traj = sample_trajectory(mdp, behavior, 0.3, make_rng(key, Stream.TRAJECTORY), s0)
    cf = estimate_counterfactual_transitions(mdp, traj, d=d, seed=key)
    label = f"n={n} m={m} T={horizon} k={k}"

    policy = solve_optimal_cf_policy(mdp, traj, cf, k)
    value = policy.value(traj.s0)
    oracle = brute_force_oracle(mdp, traj, cf, k)
    result.add(index, "oracle", _close(value, oracle), f"{label}: dp={value!r} oracle={oracle!r}")

    exact = evaluate_policy_exact(policy, cf, traj, mdp.reward)
    result.add(index, "exact_evaluation", _close(value, exact), f"{label}: dp={value!r} exact={exact!r}")

    violations = check_counterfactual_stability(mdp, traj, cf)
    result.add(index, "stability", not violations,
               "; ".join(v.describe() for v in violations[:3]))

    factual = all(
        cf.slices[t, traj.states[t], traj.actions[t], traj.states[t + 1]] == 1.0
        for t in range(cf.n_slices)
    )
    result.add(index, "factual_reproduction", factual, label)

    replay = solve_optimal_cf_policy(mdp, traj, cf, 0).value(traj.s0)
    observed = outcome(mdp, traj)
    result.add(index, "zero_budget", _close(replay, observed),
               f"{label}: h={replay!r} o={observed!r}")

    try:
        batch = rollout(policy, cf, traj, mdp.reward, VERIFY_SAMPLES,
                        make_rng(key, Stream.EXPLANATION))
        changes = batch.changed(traj).sum(axis=1)
        result.add(index, "budget", int(changes.max()) <= k, f"{label}: max changes {changes.max()}")
    except BudgetExceededError as e:
        result.add(index, "budget", False, str(e))

    for kind in BaselineKind:
        other = baseline_policy(kind, mdp, traj, cf, k, make_rng(key, Stream.BASELINE))
        score = evaluate_policy_exact(other, cf, traj, mdp.reward)
        result.add(index, f"dominates_{kind.value}", value >= score - TOLERANCE,
                   f"{label}: optimal={value!r} {kind.value}={score!r}")


def run_verification(instances: int = 100, seed: int = 0, d: int = VERIFY_D) -> VerificationResult:
    """Run every check on ``instances`` seeded random instances."""
    result = VerificationResult()
    for index in range(instances):
        verify_instance(index, seed, result, d=d)
    failures = result.failures
    if failures:
        logger.warning("%d of %d checks failed", len(failures), len(result.records))
    else:
        logger.info("all %d checks passed on %d instances", len(result.records), instances)
    return result
