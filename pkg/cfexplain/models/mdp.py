"""Finite-horizon MDP data model: Mdp, Trajectory, DeterministicPolicy."""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..errors import InvalidMdpError, InvalidTrajectoryError
from ..utils.extended import ext_sum, is_extended_real

ROW_SUM_TOLERANCE = 1e-9


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Mdp:
    """Stationary finite-horizon MDP.

    ``transition[s, a, s']`` is P(s' | s, a) and ``reward[s, a]`` is R(s, a),
    an extended real (finite or -inf). Time steps run 0..horizon-1.
    """

    transition: np.ndarray
    reward: np.ndarray
    horizon: int

    def __post_init__(self):
        object.__setattr__(self, "transition", _frozen(np.array(self.transition, dtype=float)))
        object.__setattr__(self, "reward", _frozen(np.array(self.reward, dtype=float)))
        object.__setattr__(self, "horizon", int(self.horizon))

    @property
    def n(self) -> int:
        return self.transition.shape[0]

    @property
    def m(self) -> int:
        return self.transition.shape[1]

    @property
    def log_transition(self) -> np.ndarray:
        """log P with -inf for zero-probability successors."""
        with np.errstate(divide="ignore"):
            return np.log(self.transition)

    def with_horizon(self, horizon: int) -> "Mdp":
        return Mdp(self.transition, self.reward, horizon)

    def require_valid(self) -> None:
        problems = validate_mdp(self)
        if problems:
            raise InvalidMdpError("; ".join(problems))


@dataclass(frozen=True)
class Trajectory:
    """Observed realization: T state-action pairs, no terminal state."""

    states: tuple
    actions: tuple
    id: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(int(s) for s in self.states))
        object.__setattr__(self, "actions", tuple(int(a) for a in self.actions))

    def __len__(self) -> int:
        return len(self.states)

    @property
    def horizon(self) -> int:
        return len(self.states)

    @property
    def s0(self) -> int:
        return self.states[0]

    def to_dict(self) -> dict:
        return {"id": self.id, "states": list(self.states), "actions": list(self.actions)}

    @classmethod
    def from_dict(cls, data: dict) -> "Trajectory":
        return cls(
            states=data.get("states", []),
            actions=data.get("actions", []),
            id=None if data.get("id") is None else str(data["id"]),
        )


@dataclass(frozen=True, eq=False)
class DeterministicPolicy:
    """Time-indexed policy: ``table[t, s]`` is the action at time t in state s."""

    table: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "table", _frozen(np.array(self.table, dtype=int)))

    def action(self, t: int, s: int) -> int:
        return int(self.table[t, s])


def validate_mdp(mdp: Mdp) -> List[str]:
    """Return the list of violated MDP invariants (empty iff valid)."""
    problems = []
    transition, reward = mdp.transition, mdp.reward

    if transition.ndim != 3 or transition.shape[0] != transition.shape[2]:
        return [f"transition tensor must have shape (n, m, n), got {transition.shape}"]
    n, m = transition.shape[0], transition.shape[1]
    if n < 1 or m < 1:
        problems.append(f"need n >= 1 and m >= 1, got n={n}, m={m}")
    if mdp.horizon < 1:
        problems.append(f"horizon must be >= 1, got {mdp.horizon}")
    if reward.shape != (n, m):
        problems.append(f"reward matrix must have shape ({n}, {m}), got {reward.shape}")

    for s, a in zip(*np.nonzero(~np.isfinite(transition).all(axis=2))):
        problems.append(f"transition row (s={s}, a={a}) has non-finite entries")
    for s, a in zip(*np.nonzero((transition < 0).any(axis=2))):
        problems.append(f"transition row (s={s}, a={a}) has negative entries")
    sums = transition.sum(axis=2)
    for s, a in zip(*np.nonzero(np.abs(sums - 1.0) > ROW_SUM_TOLERANCE)):
        problems.append(f"transition row (s={s}, a={a}) sums to {sums[s, a]!r}")

    if reward.shape == (n, m):
        for s, a in zip(*np.nonzero(~is_extended_real(reward))):
            problems.append(f"reward (s={s}, a={a}) is {reward[s, a]!r}; must be finite or -inf")

    return problems


def validate_trajectory(mdp: Mdp, traj: Trajectory) -> List[str]:
    """Return the list of ways ``traj`` is inconsistent with ``mdp``."""
    problems = []
    if len(traj.states) != len(traj.actions):
        problems.append(
            f"{len(traj.states)} states but {len(traj.actions)} actions"
        )
    if len(traj.states) != mdp.horizon:
        problems.append(f"trajectory length {len(traj.states)} != horizon {mdp.horizon}")
    bad_states = [s for s in traj.states if not 0 <= s < mdp.n]
    bad_actions = [a for a in traj.actions if not 0 <= a < mdp.m]
    if bad_states:
        problems.append(f"states out of range [0, {mdp.n}): {bad_states}")
    if bad_actions:
        problems.append(f"actions out of range [0, {mdp.m}): {bad_actions}")
    if problems:
        return problems

    for t in range(len(traj.states) - 1):
        s, a, nxt = traj.states[t], traj.actions[t], traj.states[t + 1]
        if mdp.transition[s, a, nxt] <= 0:
            problems.append(f"observed transition at t={t} ({s}, {a}) -> {nxt} has probability 0")
    return problems


def require_valid_trajectory(mdp: Mdp, traj: Trajectory) -> None:
    problems = validate_trajectory(mdp, traj)
    if problems:
        raise InvalidTrajectoryError("; ".join(problems))


def outcome(mdp: Mdp, traj: Trajectory) -> float:
    """o(τ) = Σ_t R(s_t, a_t); -inf is absorbing."""
    if len(traj.states) != mdp.horizon or len(traj.actions) != mdp.horizon:
        raise InvalidTrajectoryError(
            f"trajectory length {len(traj.states)} != horizon {mdp.horizon}"
        )
    return ext_sum(mdp.reward[list(traj.states), list(traj.actions)])

