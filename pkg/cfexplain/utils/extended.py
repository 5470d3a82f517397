"""Extended-real arithmetic.

Rewards and values live in R ∪ {-inf}. numpy already treats -inf as absorbing
under addition and handles max correctly; the one place it goes wrong is
0 * -inf = nan, which shows up whenever a zero-probability successor has a
-inf value. ``expectation`` is the only place that multiplies probabilities
by values and takes care of that case.
"""

import numpy as np

NEG_INF = -np.inf


def is_extended_real(values) -> np.ndarray:
    """Elementwise check: finite or exactly -inf (never +inf, never nan)."""
    values = np.asarray(values, dtype=float)
    return np.isfinite(values) | np.isneginf(values)


def expectation(probs: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Sum over the last axis of ``probs * values`` with 0 * -inf = 0.

    ``probs`` has shape (..., n) and ``values`` shape (n,). Any successor with
    positive probability and a -inf value makes the whole expectation -inf.
    """
    probs = np.asarray(probs, dtype=float)
    values = np.asarray(values, dtype=float)
    neg = np.isneginf(values)
    finite = np.where(neg, 0.0, values)
    result = probs @ finite
    if neg.any():
        doomed = (probs[..., neg] > 0).any(axis=-1)
        result = np.where(doomed, NEG_INF, result)
    return result


def ext_sum(values) -> float:
    """Sum of extended reals, -inf absorbing."""
    values = np.asarray(values, dtype=float)
    if np.isneginf(values).any():
        return NEG_INF
    return float(np.sum(values))


def weighted_total(weights: np.ndarray, values: np.ndarray) -> float:
    """Sum of ``weights * values`` over all cells, ignoring zero-weight cells."""
    weights = np.asarray(weights, dtype=float)
    values = np.asarray(values, dtype=float)
    live = weights > 0
    if np.isneginf(values[live]).any():
        return NEG_INF
    return float(np.sum(weights[live] * values[live]))
