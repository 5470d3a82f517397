"""Optimal counterfactual policies under a budget of k action changes.

The enhanced state (s, l) pairs a state with the number of actions changed so
far; l never exceeds k. ``solve_optimal_cf_policy`` fills the value table
h(s, r, c) bottom-up over the remaining horizon r and remaining budget c.
"""

import itertools
import logging
from typing import Optional

import numpy as np

from ..errors import BudgetExceededError, DimensionMismatchError, OracleTooLargeError
from ..models.counterfactual import (
    CfPolicy,
    CounterfactualTransitions,
    EnhancedPolicy,
    EnhancedState,
)
from ..models.mdp import Mdp, Trajectory
from ..utils.extended import NEG_INF, expectation, weighted_total

logger = logging.getLogger(__name__)

MAX_ENUMERATED_POLICIES = 200_000


def _check_dimensions(rewards: np.ndarray, traj: Trajectory,
                      cf: CounterfactualTransitions) -> None:
    n, m = rewards.shape
    if cf.n != n or cf.m != m:
        raise DimensionMismatchError(
            f"counterfactual transitions are {cf.n}x{cf.m} but rewards are {n}x{m}"
        )
    if cf.n_slices != traj.horizon - 1:
        raise DimensionMismatchError(
            f"{cf.n_slices} counterfactual slices for a trajectory of length {traj.horizon}"
        )


def _check_budget(k: int, horizon: int) -> None:
    if not 0 <= k <= horizon:
        raise ValueError(f"k must be in [0, {horizon}], got {k}")


def observed_policy(traj: Trajectory, n: int, k: int) -> EnhancedPolicy:
    """The policy that always replays the observed actions."""
    actions = np.broadcast_to(np.array(traj.actions)[None, :, None], (k + 1, traj.horizon, n))
    return EnhancedPolicy(k=k, actions=actions)


def enhanced_transition(cf: CounterfactualTransitions, traj: Trajectory, k: int, t: int,
                        src: EnhancedState, a: int, dst: EnhancedState) -> float:
    """P+ ((s', l') | (s, l), a) at time t.

    Keeping the observed action keeps l; any other action moves to l + 1.
    Destinations with l' > k have probability 0.
    """
    if dst.l > k:
        return 0.0
    observed = traj.actions[t]
    compatible = (a == observed and dst.l == src.l) or (a != observed and dst.l == src.l + 1)
    if not compatible:
        return 0.0
    return float(cf.slices[t, src.s, a, dst.s])


def solve_optimal_cf_policy(mdp: Mdp, traj: Trajectory, cf: CounterfactualTransitions,
                            k: int) -> CfPolicy:
    """Dynamic program for the optimal counterfactual policy with at most k changes.

    h(s, 0, c) = 0. For c = 0 the observed action a_{T-r} is forced. For c >= 1
    the observed action (budget kept) competes with the best alternative
    (budget spent); an alternative replaces it only on strict improvement, and
    alternatives are scanned in ascending action order.
    """
    rewards = mdp.reward
    _check_dimensions(rewards, traj, cf)
    horizon = traj.horizon
    _check_budget(k, horizon)
    n, m = rewards.shape
    states = np.arange(n)

    values = np.zeros((n, horizon + 1, k + 1))
    actions = np.zeros((k + 1, horizon, n), dtype=int)

    for r in range(1, horizon + 1):
        t = horizon - r
        observed = traj.actions[t]
        if t < horizon - 1:
            # continuation[c][s, a] = Σ_s' P_{τ,t}(s'|s,a) h(s', r-1, c)
            continuation = [expectation(cf.slices[t], values[:, r - 1, c]) for c in range(k + 1)]
        else:
            continuation = [np.zeros((n, m)) for _ in range(k + 1)]

        values[:, r, 0] = rewards[:, observed] + continuation[0][:, observed]
        actions[k, t, :] = observed

        for c in range(1, k + 1):
            keep = rewards[:, observed] + continuation[c][:, observed]
            alternatives = rewards + continuation[c - 1]
            alternatives[:, observed] = NEG_INF
            best_alt = np.argmax(alternatives, axis=1)
            best_alt_value = alternatives[states, best_alt]
            switch = best_alt_value > keep
            values[:, r, c] = np.where(switch, best_alt_value, keep)
            actions[k - c, t, :] = np.where(switch, best_alt, observed)

    logger.debug("solved counterfactual policy: n=%d m=%d T=%d k=%d", n, m, horizon, k)
    return CfPolicy(k=k, actions=actions, values=values)


def evaluate_policy_exact(policy: EnhancedPolicy, cf: CounterfactualTransitions,
                          traj: Trajectory, rewards: np.ndarray, k: Optional[int] = None) -> float:
    """Average counterfactual outcome of ``policy`` by forward propagation.

    Pushes the exact distribution over enhanced states forward from (s_0, 0).
    Raises BudgetExceededError if a reachable state with l = k prescribes a
    change.
    """
    rewards = np.asarray(rewards, dtype=float)
    _check_dimensions(rewards, traj, cf)
    k = policy.k if k is None else k
    if k > policy.k:
        raise DimensionMismatchError(f"policy covers l <= {policy.k}, asked for k={k}")
    horizon = traj.horizon
    n = rewards.shape[0]
    states = np.arange(n)

    mass = np.zeros((k + 1, n))
    mass[0, traj.s0] = 1.0
    total = 0.0
    for t in range(horizon):
        observed = traj.actions[t]
        chosen = policy.actions[: k + 1, t, :]
        changed = chosen != observed
        if (changed[k] & (mass[k] > 0)).any():
            raise BudgetExceededError(
                f"policy changes the observed action at t={t} with no budget left (l={k})"
            )
        total += weighted_total(mass, rewards[states[None, :], chosen])

        if t < horizon - 1:
            nxt = np.zeros_like(mass)
            for l in range(k + 1):
                live = mass[l] > 0
                if not live.any():
                    continue
                rows = cf.slices[t][states[live], chosen[l, live]]
                flow = mass[l, live, None] * rows
                target = l + changed[l, live].astype(int)
                for dst in np.unique(target):
                    nxt[dst] += flow[target == dst].sum(axis=0)
            mass = nxt
    return float(total)


def _reachable_cells(traj: Trajectory, n: int, k: int):
    """(l, t, s) cells with l < k that a policy can reach and where it may change."""
    cells = []
    for t in range(traj.horizon):
        for l in range(min(k, t + 1)):
            for s in range(n):
                if t == 0 and s != traj.s0:
                    continue
                cells.append((l, t, s))
    return cells


def _enumerate_oracle(mdp: Mdp, traj: Trajectory, cf: CounterfactualTransitions,
                      k: int, max_policies: int) -> float:
    n, m = mdp.n, mdp.m
    cells = _reachable_cells(traj, n, k)
    count = m ** len(cells)
    if count > max_policies:
        raise OracleTooLargeError(
            f"{count} policies to enumerate exceeds the limit of {max_policies}"
        )
    base = np.array(observed_policy(traj, n, k).actions)
    if not cells:
        return evaluate_policy_exact(EnhancedPolicy(k=k, actions=base), cf, traj, mdp.reward)
    index = tuple(np.array(cells).T)
    best = NEG_INF
    for choice in itertools.product(range(m), repeat=len(cells)):
        table = base.copy()
        table[index] = choice
        value = evaluate_policy_exact(EnhancedPolicy(k=k, actions=table), cf, traj, mdp.reward)
        best = max(best, value)
    return best


def _enhanced_mdp_oracle(mdp: Mdp, traj: Trajectory, cf: CounterfactualTransitions,
                         k: int) -> float:
    """Plain backward induction over the explicit enhanced MDP built from P+."""
    n, m = mdp.n, mdp.m
    horizon = traj.horizon
    enhanced = [EnhancedState(s, l) for l in range(k + 1) for s in range(n)]
    value = {state: 0.0 for state in enhanced}
    for t in range(horizon - 1, -1, -1):
        updated = {}
        for src in enhanced:
            best = NEG_INF
            for a in range(m):
                if src.l == k and a != traj.actions[t]:
                    continue
                q = float(mdp.reward[src.s, a])
                if t < horizon - 1:
                    for dst in enhanced:
                        p = enhanced_transition(cf, traj, k, t, src, a, dst)
                        if p > 0:
                            q += p * value[dst]
                best = max(best, q)
            updated[src] = best
        value = updated
    return float(value[EnhancedState(traj.s0, 0)])


def brute_force_oracle(mdp: Mdp, traj: Trajectory, cf: CounterfactualTransitions, k: int,
                       method: str = "auto",
                       max_policies: int = MAX_ENUMERATED_POLICIES) -> float:
    """Exact optimum of the budgeted problem, derived independently of the DP.

    ``enumerate`` scores every deterministic policy over the reachable enhanced
    states with ``evaluate_policy_exact``; ``enhanced`` runs textbook backward
    induction over the explicit enhanced MDP; ``auto`` enumerates when the
    policy count fits under ``max_policies`` and falls back otherwise.
    """
    _check_dimensions(mdp.reward, traj, cf)
    _check_budget(k, traj.horizon)
    if method == "enumerate":
        return _enumerate_oracle(mdp, traj, cf, k, max_policies)
    if method == "enhanced":
        return _enhanced_mdp_oracle(mdp, traj, cf, k)
    if method != "auto":
        raise ValueError(f"unknown oracle method: {method}")
    try:
        return _enumerate_oracle(mdp, traj, cf, k, max_policies)
    except OracleTooLargeError:
        return _enhanced_mdp_oracle(mdp, traj, cf, k)


def feasible_budgets(k_values, horizon: int) -> list:
    """Distinct budgets from ``k_values`` capped at the horizon, ascending."""
    return sorted({min(int(k), horizon) for k in k_values})
