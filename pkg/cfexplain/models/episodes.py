"""Episode logs: observed trajectories of varying horizon plus label vocabularies."""

from dataclasses import dataclass, field
from typing import List, Optional

from .mdp import Trajectory


@dataclass
class Vocabulary:
    states: List[str] = field(default_factory=list)
    actions: List[str] = field(default_factory=list)

    def state_label(self, s: int) -> str:
        return self.states[s] if 0 <= s < len(self.states) else str(s)

    def action_label(self, a: int) -> str:
        return self.actions[a] if 0 <= a < len(self.actions) else str(a)

    def to_dict(self) -> dict:
        return {"states": list(self.states), "actions": list(self.actions)}

    @classmethod
    def from_dict(cls, data: dict) -> "Vocabulary":
        return cls(
            states=[str(s) for s in data.get("states", [])],
            actions=[str(a) for a in data.get("actions", [])],
        )


@dataclass
class EpisodeLog:
    episodes: List[Trajectory] = field(default_factory=list)
    vocabulary: Optional[Vocabulary] = None

    def __len__(self) -> int:
        return len(self.episodes)

    def __iter__(self):
        return iter(self.episodes)

    def find(self, episode_id: str) -> Optional[Trajectory]:
        for episode in self.episodes:
            if episode.id == episode_id:
                return episode
        return None

    def validate(self, n: int, m: int) -> List[str]:
        """Return the list of out-of-vocabulary indices and malformed episodes."""
        problems = []
        for i, episode in enumerate(self.episodes):
            name = episode.id if episode.id is not None else f"#{i}"
            if len(episode.states) != len(episode.actions):
                problems.append(f"episode {name}: {len(episode.states)} states but "
                                f"{len(episode.actions)} actions")
            if len(episode.states) == 0:
                problems.append(f"episode {name} is empty")
            if any(not 0 <= s < n for s in episode.states):
                problems.append(f"episode {name}: state index outside [0, {n})")
            if any(not 0 <= a < m for a in episode.actions):
                problems.append(f"episode {name}: action index outside [0, {m})")
        return problems
