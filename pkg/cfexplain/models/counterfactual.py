"""Counterfactual data model: transition slices, enhanced-state policies, explanations."""

from dataclasses import dataclass, field
from typing import FrozenSet, NamedTuple, Optional, Tuple

import numpy as np

from ..errors import DimensionMismatchError


class EnhancedState(NamedTuple):
    """A state paired with the number of actions changed so far."""

    s: int
    l: int


@dataclass(frozen=True, eq=False)
class CounterfactualTransitions:
    """Non-stationary counterfactual transition law P_{τ,t}(s' | s, a).

    ``slices`` has shape (T-1, n, m, n); slice t drives the step t -> t+1.
    ``d`` is the number of posterior noise samples each entry averages over.
    """

    slices: np.ndarray = field(repr=False)
    d: int

    def __post_init__(self):
        slices = np.array(self.slices, dtype=float)
        if slices.ndim != 4:
            raise DimensionMismatchError(
                f"counterfactual slices must have shape (T-1, n, m, n), got {slices.shape}"
            )
        slices.setflags(write=False)
        object.__setattr__(self, "slices", slices)
        object.__setattr__(self, "d", int(self.d))

    @property
    def n_slices(self) -> int:
        return self.slices.shape[0]

    @property
    def n(self) -> int:
        return self.slices.shape[1]

    @property
    def m(self) -> int:
        return self.slices.shape[2]

    @property
    def horizon(self) -> int:
        return self.n_slices + 1

    def row(self, t: int, s: int, a: int) -> np.ndarray:
        return self.slices[t, s, a]


@dataclass(frozen=True, eq=False)
class EnhancedPolicy:
    """Deterministic policy over enhanced states (s, l) and time.

    ``actions[l, t, s]`` is the action taken at time t in state s after l
    changes, for l in 0..k.
    """

    k: int
    actions: np.ndarray = field(repr=False)

    def __post_init__(self):
        actions = np.array(self.actions, dtype=int)
        if actions.ndim != 3 or actions.shape[0] != int(self.k) + 1:
            raise DimensionMismatchError(
                f"policy table must have shape (k+1, T, n) with k={self.k}, got {actions.shape}"
            )
        actions.setflags(write=False)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "k", int(self.k))

    @property
    def horizon(self) -> int:
        return self.actions.shape[1]

    @property
    def n(self) -> int:
        return self.actions.shape[2]

    def action(self, state: EnhancedState, t: int) -> int:
        return int(self.actions[state.l, t, state.s])


@dataclass(frozen=True, eq=False)
class CfPolicy(EnhancedPolicy):
    """Optimal counterfactual policy π*_τ plus its value table.

    ``values[s, r, c]`` is h(s, r, c): the best expected reward over the last r
    steps starting from s with at most c changes left, r in 0..T, c in 0..k.
    """

    values: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        super().__post_init__()
        values = np.array(self.values, dtype=float)
        expected = (self.n, self.horizon + 1, self.k + 1)
        if values.shape != expected:
            raise DimensionMismatchError(
                f"value table must have shape {expected}, got {values.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def value(self, s0: int) -> float:
        """h(s0, T, k): the optimal average counterfactual outcome."""
        return float(self.values[s0, self.horizon, self.k])


@dataclass(frozen=True)
class Explanation:
    """One counterfactual realization τ' = {((s'_t, l_t), a'_t)} with o(τ')."""

    states: Tuple[int, ...]
    levels: Tuple[int, ...]
    actions: Tuple[int, ...]
    outcome: float
    changed_steps: FrozenSet[int]

    @property
    def steps(self) -> Tuple[Tuple[EnhancedState, int], ...]:
        return tuple(
            (EnhancedState(s, l), a)
            for s, l, a in zip(self.states, self.levels, self.actions)
        )

    @property
    def n_changes(self) -> int:
        return len(self.changed_steps)

    def to_dict(self) -> dict:
        return {
            "states": list(self.states),
            "levels": list(self.levels),
            "actions": list(self.actions),
            "outcome": self.outcome,
            "changed_steps": sorted(self.changed_steps),
        }
