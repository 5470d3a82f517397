"""Monte-Carlo estimation of counterfactual transition probabilities.

For every observed step (s_t, a_t, s_{t+1}) we draw d posterior noise vectors
once and push the same vectors through the Gumbel-Max mechanism of every
(s, a) row, so all rows of a slice share one exogenous U_t.
"""

import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from ..errors import DimensionMismatchError
from ..models.counterfactual import CounterfactualTransitions
from ..models.mdp import Mdp, Trajectory, require_valid_trajectory
from ..utils.rng import SeedKey, Stream, as_rng, make_rng
from .gumbel import g_s, log_probs, sample_posterior_noise, sample_prior_noise

logger = logging.getLogger(__name__)

DEFAULT_D = 1000


@dataclass(frozen=True)
class StabilityViolation:
    t: int
    s: int
    a: int
    next_state: int
    mass: float

    def describe(self) -> str:
        return (
            f"t={self.t}: P_cf({self.next_state} | s={self.s}, a={self.a}) = {self.mass}"
            " but counterfactual stability requires 0"
        )


def counterfactual_slice(mdp: Mdp, noise: np.ndarray) -> np.ndarray:
    """Indicator-average every (s, a) row over a shared (d, n) noise batch."""
    d = noise.shape[0]
    n, m = mdp.n, mdp.m
    logits = mdp.log_transition
    counts = np.zeros((n, m, n), dtype=np.int64)
    for s in range(n):
        # (d, m) argmax indices for every action from state s
        picks = g_s(logits[s][None, :, :], noise[:, None, :])
        for a in range(m):
            counts[s, a] = np.bincount(picks[:, a], minlength=n)
    return counts / d


def estimate_counterfactual_transitions(mdp: Mdp, traj: Trajectory, d: int = DEFAULT_D,
                                        seed: SeedKey = 0) -> CounterfactualTransitions:
    """Estimate P_{τ,t}(s' | s, a) for t = 0..T-2 from d posterior samples per step.

    Slice t draws its noise from the posterior stream (seed, t).
    """
    if d < 1:
        raise ValueError(f"need d >= 1 posterior samples, got {d}")
    require_valid_trajectory(mdp, traj)

    horizon = traj.horizon
    slices = np.zeros((max(horizon - 1, 0), mdp.n, mdp.m, mdp.n))
    for t in range(horizon - 1):
        s, a, nxt = traj.states[t], traj.actions[t], traj.states[t + 1]
        rng = make_rng(seed, Stream.POSTERIOR, t)
        noise = sample_posterior_noise(mdp.transition[s, a], nxt, rng, size=d)
        slices[t] = counterfactual_slice(mdp, noise)
        logger.debug("estimated counterfactual slice t=%d from %d samples", t, d)
    return CounterfactualTransitions(slices=slices, d=d)


def check_counterfactual_stability(mdp: Mdp, traj: Trajectory,
                                   cf: CounterfactualTransitions,
                                   tol: float = 1e-12) -> List[StabilityViolation]:
    """List every entry where counterfactual stability forces zero mass but cf has some.

    For s' != s_{t+1}: if P(s_{t+1}|s,a)/P(s_{t+1}|s_t,a_t) >= P(s'|s,a)/P(s'|s_t,a_t)
    then P_cf(s'|s,a) must be 0. Ratios are compared as log differences, the
    arithmetic g_s works in; a zero denominator makes a ratio +inf. Exact ties
    are always checked. Only a pair whose log ratios differ by at most ``tol``
    without being equal is left out, since rounding can flip its argmax.
    """
    if cf.n != mdp.n or cf.m != mdp.m or cf.n_slices != traj.horizon - 1:
        raise DimensionMismatchError("counterfactual transitions do not match the MDP/trajectory")

    violations = []
    P = mdp.transition
    log_p = mdp.log_transition
    for t in range(cf.n_slices):
        s_t, a_t, f = traj.states[t], traj.actions[t], traj.states[t + 1]
        factual = P[s_t, a_t]
        log_factual = log_p[s_t, a_t]
        with np.errstate(invalid="ignore"):
            ratio_f = (log_p[:, :, f] - log_factual[f])[:, :, None]
            ratio_alt = np.where(factual > 0, log_p - np.where(factual > 0, log_factual, 0.0), np.inf)
            gap = ratio_f - ratio_alt
        forced_zero = ratio_f >= ratio_alt
        rounding = forced_zero & (gap > 0) & (gap <= tol)
        forced_zero &= ~rounding
        forced_zero[:, :, f] = False
        bad = forced_zero & (cf.slices[t] > 0)
        for s, a, j in zip(*np.nonzero(bad)):
            violations.append(StabilityViolation(
                t=t, s=int(s), a=int(a), next_state=int(j), mass=float(cf.slices[t, s, a, j]),
            ))
    return violations


def rejection_sample_noise(transition_row: np.ndarray, observed_next: int,
                           n_samples: int, seed: int = 0,
                           batch: int = 65536) -> np.ndarray:
    """Reference posterior sampler: keep prior draws whose argmax is ``observed_next``."""
    rng = as_rng(seed)
    logits = log_probs(transition_row)
    n = logits.shape[0]
    kept = []
    total = 0
    while total < n_samples:
        draws = sample_prior_noise(n, rng, size=batch)
        accepted = draws[g_s(logits, draws) == observed_next]
        kept.append(accepted)
        total += accepted.shape[0]
    return np.concatenate(kept)[:n_samples]


def rejection_counterfactual_row(factual_row: np.ndarray, observed_next: int,
                                 counterfactual_row: np.ndarray, n_samples: int,
                                 seed: int = 0) -> np.ndarray:
    """Reference estimate of one counterfactual row via rejection sampling."""
    noise = rejection_sample_noise(factual_row, observed_next, n_samples, seed)
    picks = g_s(log_probs(counterfactual_row), noise)
    return np.bincount(picks, minlength=len(counterfactual_row)) / n_samples
