"""Run configuration.

A run is described by a flat TOML file (``run.toml``); command-line flags
override its keys.
"""

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

try:
    import tomllib  # Python 3.11+
except ImportError:
    import tomli as tomllib  # Fallback for older Python

PathLike = Union[str, Path]

MODES = ("synthetic", "from-log")
DIRICHLET_METHODS = ("closed_form", "sample")


def load_config(path: PathLike) -> Dict[str, Any]:
    """Load a config file; an absent or unreadable file gives an empty dict."""
    config_file = Path(path)
    if not config_file.exists():
        return {}

    try:
        with open(config_file, "rb") as f:
            return tomllib.load(f)
    except Exception:
        return {}


def _format_value(value: Any) -> str:
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    return repr(value) if isinstance(value, float) else str(value)


def save_config(config: Dict[str, Any], path: PathLike) -> Optional[str]:
    """Save a flat configuration; ``None`` values are left out.

    Returns:
        Error message or None if successful.
    """
    try:
        lines = [f"{key} = {_format_value(value)}" for key, value in config.items()
                 if value is not None]
        with open(path, "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + "\n")
        return None
    except Exception as e:
        return f"Error saving config: {e}"


@dataclass
class RunConfig:
    mode: str = "synthetic"
    log_path: Optional[str] = None
    vocab_path: Optional[str] = None
    transition_path: Optional[str] = None
    reward_path: Optional[str] = None
    output_dir: str = "out"
    episode_id: Optional[str] = None
    n: int = 20
    m: int = 10
    horizon: int = 20
    alphas: List[float] = field(default_factory=lambda: [0.2, 0.4, 0.8])
    k_values: List[int] = field(default_factory=lambda: [1, 2, 3])
    d: int = 1000
    seed: int = 0
    deviation_prob: float = 0.05
    n_samples: int = 1000
    n_instances: int = 10
    realizations_per_instance: int = 50
    workers: int = 1
    dirichlet_method: str = "closed_form"
    dirichlet_samples: int = 100_000
    forbid_unobserved: bool = True

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        """Build from a config dict, ignoring unknown keys."""
        known = {f.name for f in fields(cls)}
        return cls(**{key: value for key, value in data.items() if key in known})

    @classmethod
    def load(cls, path: Optional[PathLike]) -> "RunConfig":
        if path is None:
            return cls()
        return cls.from_dict(load_config(path))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def save(self, path: PathLike) -> Optional[str]:
        return save_config(self.to_dict(), path)

    def override(self, **values: Any) -> "RunConfig":
        """Copy with every non-None value replaced."""
        data = self.to_dict()
        data.update({key: value for key, value in values.items() if value is not None})
        return RunConfig.from_dict(data)

    def validate(self) -> List[str]:
        """Return the list of violated settings (empty iff usable)."""
        problems = []
        if self.mode not in MODES:
            problems.append(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "from-log":
            for key in ("log_path", "transition_path", "reward_path"):
                value = getattr(self, key)
                if value is not None and not Path(value).exists():
                    problems.append(f"{key} does not exist: {value}")
            if self.log_path is None:
                problems.append("log_path is required in from-log mode")
        for key in ("n", "m", "horizon", "d", "n_samples", "n_instances",
                    "realizations_per_instance", "dirichlet_samples"):
            if getattr(self, key) < 1:
                problems.append(f"{key} must be >= 1, got {getattr(self, key)}")
        if not self.k_values:
            problems.append("k_values must not be empty")
        for k in self.k_values:
            if k < 0:
                problems.append(f"k must be >= 0, got {k}")
            elif self.mode == "synthetic" and k > self.horizon:
                problems.append(f"k={k} exceeds the horizon {self.horizon}")
        for alpha in self.alphas:
            if not 0.0 < alpha <= 1.0:
                problems.append(f"alpha must be in (0, 1], got {alpha}")
        if not 0.0 <= self.deviation_prob <= 1.0:
            problems.append(f"deviation_prob must be in [0, 1], got {self.deviation_prob}")
        if self.dirichlet_method not in DIRICHLET_METHODS:
            problems.append(
                f"dirichlet_method must be one of {DIRICHLET_METHODS}, got {self.dirichlet_method!r}"
            )
        return problems
