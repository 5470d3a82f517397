"""Gumbel-Max structural causal model machinery.

The next state is S' = argmax_s (log P(s | S, A) + U_s) with U_s i.i.d.
standard Gumbel. Given an observed transition, the noise posterior is sampled
top-down: draw the maximum first, then draw every other coordinate from a
Gumbel truncated below that maximum.
"""

from typing import Optional, Union

import numpy as np

from ..errors import NoiseSupportError
from ..utils.rng import as_rng, open_uniform

MAX_NUDGES = 64


def log_probs(row: np.ndarray) -> np.ndarray:
    """log of a probability vector, -inf where the probability is zero."""
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(row, dtype=float))


def g_s(logits: np.ndarray, noise: np.ndarray) -> Union[int, np.ndarray]:
    """Structural transition function: argmax over the last axis of logits + noise.

    Works on a single noise vector or a (d, n) batch. Ties go to the smallest
    state index.
    """
    logits = np.asarray(logits, dtype=float)
    if not np.isfinite(logits).any():
        raise NoiseSupportError("all logits are -inf; the argmax is undefined")
    scores = logits + np.asarray(noise, dtype=float)
    result = np.argmax(scores, axis=-1)
    if np.ndim(result) == 0:
        return int(result)
    return result


def gumbel_from_uniform(v: np.ndarray) -> np.ndarray:
    return -np.log(-np.log(v))


def sample_prior_noise(n: int, seed, size: Optional[int] = None) -> np.ndarray:
    """i.i.d. standard Gumbel noise, shape (n,) or (size, n)."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    rng = as_rng(seed)
    shape = (n,) if size is None else (size, n)
    return gumbel_from_uniform(open_uniform(rng, shape))


def _enforce_argmax(logits: np.ndarray, noise: np.ndarray, observed: int) -> np.ndarray:
    """Nudge losers down by one ulp at a time until ``observed`` strictly wins.

    Rounding in the truncated-Gumbel construction can leave a loser exactly
    tied with the winner when its unconstrained draw is far above the maximum.
    """
    winner = logits[observed] + noise[:, observed]
    for _ in range(MAX_NUDGES):
        scores = logits[None, :] + noise
        scores[:, observed] = -np.inf
        ties = scores >= winner[:, None]
        if not ties.any():
            return noise
        noise[ties] = np.nextafter(noise[ties], -np.inf)
    raise NoiseSupportError(
        f"posterior noise still ties state {observed} after {MAX_NUDGES} nudges"
    )


def sample_posterior_noise(transition_row: np.ndarray, observed_next: int,
                           seed, size: Optional[int] = None) -> np.ndarray:
    """Sample U | argmax(log p + U) = observed_next, shape (n,) or (size, n).

    Zero-probability coordinates keep their prior: a -inf logit satisfies the
    argmax constraint for any finite noise.
    """
    p = np.asarray(transition_row, dtype=float)
    n = p.shape[0]
    if not 0 <= observed_next < n or p[observed_next] <= 0:
        raise NoiseSupportError(
            f"observed state {observed_next} is outside the support of the transition row"
        )
    rng = as_rng(seed)
    count = 1 if size is None else size
    logits = log_probs(p)

    # Σ_j p_j = 1, so the maximum is a standard Gumbel.
    top = gumbel_from_uniform(open_uniform(rng, count))
    noise = np.empty((count, n))
    for j in range(n):
        if j == observed_next:
            noise[:, j] = top - logits[j]
        elif p[j] > 0:
            g = gumbel_from_uniform(open_uniform(rng, count)) + logits[j]
            truncated = -np.logaddexp(-top, -g)
            noise[:, j] = truncated - logits[j]
        else:
            noise[:, j] = gumbel_from_uniform(open_uniform(rng, count))

    noise = _enforce_argmax(logits, noise, observed_next)
    return noise[0] if size is None else noise
