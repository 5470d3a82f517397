"""File formats: array text files, episode logs, vocabularies and reports.

Arrays are stored as text with a small ``#`` header (kind, shape and, for
counterfactual tensors, the sample count d) followed by the values in
row-major order, one innermost axis per line. Reals use ``%.17g`` so they
re-parse bit-exactly; -inf is written as ``-inf``.

Readers return ``(value, None)`` on success and ``(None, message)`` on
malformed input.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..models.counterfactual import CfPolicy, CounterfactualTransitions, Explanation
from ..models.episodes import EpisodeLog, Vocabulary
from ..models.mdp import Trajectory
from ..models.report import MetricsReport

PathLike = Union[str, Path]

FLOAT_FORMAT = "%.17g"
INT_FORMAT = "%d"


@dataclass
class ArrayFile:
    kind: str
    array: np.ndarray
    d: Optional[int] = None


def write_array(path: PathLike, array: np.ndarray, kind: str,
                d: Optional[int] = None) -> Optional[str]:
    """Write an array with its header.

    Returns:
        Error message or None if successful.
    """
    array = np.asarray(array)
    integer = np.issubdtype(array.dtype, np.integer)
    header = [f"kind: {kind}", "shape: " + " ".join(str(x) for x in array.shape)]
    if d is not None:
        header.append(f"d: {d}")
    width = array.shape[-1] if array.ndim else 1
    rows = array.reshape(-1, width) if array.ndim > 1 else array.reshape(1, -1)
    try:
        np.savetxt(path, rows, fmt=INT_FORMAT if integer else FLOAT_FORMAT,
                   header="\n".join(header), comments="# ")
        return None
    except Exception as e:
        return f"Error writing {path}: {e}"


def _read_header(path: Path) -> Dict[str, str]:
    header = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].partition(":")
            header[key.strip()] = value.strip()
    return header


def read_array(path: PathLike, kind: Optional[str] = None) -> Tuple[Optional[ArrayFile], Optional[str]]:
    path = Path(path)
    if not path.exists():
        return None, f"File not found: {path}"
    try:
        header = _read_header(path)
        if "kind" not in header or "shape" not in header:
            return None, f"{path}: missing kind/shape header"
        if kind is not None and header["kind"] != kind:
            return None, f"{path}: expected a {kind} file, found {header['kind']}"
        shape = tuple(int(x) for x in header["shape"].split())
        if int(np.prod(shape)) == 0:
            values = np.zeros(shape)
        else:
            values = np.loadtxt(path, comments="#", ndmin=2).reshape(shape)
        d = int(header["d"]) if "d" in header else None
        return ArrayFile(kind=header["kind"], array=values, d=d), None
    except (OSError, ValueError) as e:
        return None, f"{path}: {e}"


def write_transition(path: PathLike, transition: np.ndarray) -> Optional[str]:
    return write_array(path, np.asarray(transition, dtype=float), "transition")


def read_transition(path: PathLike) -> Tuple[Optional[np.ndarray], Optional[str]]:
    loaded, error = read_array(path, "transition")
    if error:
        return None, error
    if loaded.array.ndim != 3 or loaded.array.shape[0] != loaded.array.shape[2]:
        return None, f"{path}: transition tensor must have shape (n, m, n), got {loaded.array.shape}"
    return loaded.array, None


def write_reward(path: PathLike, reward: np.ndarray) -> Optional[str]:
    return write_array(path, np.asarray(reward, dtype=float), "reward")


def read_reward(path: PathLike) -> Tuple[Optional[np.ndarray], Optional[str]]:
    loaded, error = read_array(path, "reward")
    if error:
        return None, error
    if loaded.array.ndim != 2:
        return None, f"{path}: reward matrix must have shape (n, m), got {loaded.array.shape}"
    return loaded.array, None


def write_cf_transitions(path: PathLike, cf: CounterfactualTransitions) -> Optional[str]:
    return write_array(path, cf.slices, "cf_transitions", d=cf.d)


def read_cf_transitions(path: PathLike) -> Tuple[Optional[CounterfactualTransitions], Optional[str]]:
    loaded, error = read_array(path, "cf_transitions")
    if error:
        return None, error
    if loaded.array.ndim != 4 or loaded.d is None:
        return None, f"{path}: counterfactual tensor needs shape (T-1, n, m, n) and d"
    return CounterfactualTransitions(slices=loaded.array, d=loaded.d), None


def write_cf_policy(policy_path: PathLike, values_path: PathLike, policy: CfPolicy) -> Optional[str]:
    """Write the (k+1, T, n) action table and the (n, T+1, k+1) value table."""
    return (write_array(policy_path, policy.actions, "cf_policy")
            or write_array(values_path, policy.values, "cf_values"))


def read_cf_policy(policy_path: PathLike, values_path: PathLike) -> Tuple[Optional[CfPolicy], Optional[str]]:
    actions, error = read_array(policy_path, "cf_policy")
    if error:
        return None, error
    values, error = read_array(values_path, "cf_values")
    if error:
        return None, error
    table = actions.array.astype(int)
    try:
        return CfPolicy(k=table.shape[0] - 1, actions=table, values=values.array), None
    except ValueError as e:
        return None, str(e)


def write_episodes(path: PathLike, log: EpisodeLog) -> Optional[str]:
    """Write one JSON object per line: ``{"id", "states", "actions"}``."""
    try:
        with open(path, "w", encoding="utf-8") as f:
            for episode in log:
                f.write(json.dumps(episode.to_dict()) + "\n")
        return None
    except Exception as e:
        return f"Error writing {path}: {e}"


def _parse_episode(line: str, number: int) -> Tuple[Optional[Trajectory], Optional[str]]:
    try:
        data = json.loads(line)
    except json.JSONDecodeError as e:
        return None, f"line {number}: invalid JSON ({e.msg})"
    if not isinstance(data, dict):
        return None, f"line {number}: expected an object"
    states, actions = data.get("states"), data.get("actions")
    if not isinstance(states, list) or not isinstance(actions, list):
        return None, f"line {number}: states and actions must be arrays"
    if not all(isinstance(x, int) and not isinstance(x, bool) for x in states + actions):
        return None, f"line {number}: states and actions must be integers"
    if len(states) != len(actions):
        return None, f"line {number}: {len(states)} states but {len(actions)} actions"
    if data.get("id") is None:
        data = dict(data, id=str(number))
    return Trajectory.from_dict(data), None


def read_episodes(path: PathLike, vocab_path: Optional[PathLike] = None) -> Tuple[Optional[EpisodeLog], Optional[str]]:
    path = Path(path)
    if not path.exists():
        return None, f"File not found: {path}"
    vocabulary = None
    if vocab_path is not None:
        vocabulary, error = read_vocabulary(vocab_path)
        if error:
            return None, error

    episodes = []
    with open(path, "r", encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            if not line.strip():
                continue
            episode, error = _parse_episode(line, number)
            if error:
                return None, f"{path}: {error}"
            episodes.append(episode)
    return EpisodeLog(episodes=episodes, vocabulary=vocabulary), None


def write_vocabulary(path: PathLike, vocabulary: Vocabulary) -> Optional[str]:
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(vocabulary.to_dict(), f, indent=2)
        return None
    except Exception as e:
        return f"Error writing {path}: {e}"


def read_vocabulary(path: PathLike) -> Tuple[Optional[Vocabulary], Optional[str]]:
    path = Path(path)
    if not path.exists():
        return None, f"File not found: {path}"
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        return None, f"{path}: invalid JSON ({e.msg})"
    if not isinstance(data, dict):
        return None, f"{path}: expected an object with states and actions"
    return Vocabulary.from_dict(data), None


def write_json(path: PathLike, data: dict) -> Optional[str]:
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f, indent=2, allow_nan=True)
            f.write("\n")
        return None
    except Exception as e:
        return f"Error writing {path}: {e}"


def write_frame(path: PathLike, frame: pd.DataFrame) -> Optional[str]:
    try:
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        return None
    except Exception as e:
        return f"Error writing {path}: {e}"


def write_report(out_dir: PathLike, report: MetricsReport) -> Optional[str]:
    """metrics.csv and aggregates.csv, plus profile.csv when there are profiles."""
    out_dir = Path(out_dir)
    error = (write_frame(out_dir / "metrics.csv", report.to_frame())
             or write_frame(out_dir / "aggregates.csv", report.aggregates()))
    if error is None and report.profiles:
        error = write_frame(out_dir / "profile.csv", report.profile_frame())
    return error


def _labels(values, getter) -> str:
    return " ".join(getter(v) for v in values)


def explanations_frame(explanations: List[Explanation], traj: Trajectory,
                       vocabulary: Optional[Vocabulary] = None) -> pd.DataFrame:
    """One row per sampled explanation."""
    vocabulary = vocabulary or Vocabulary()
    rows = []
    for i, explanation in enumerate(explanations):
        rows.append({
            "sample": i,
            "outcome": explanation.outcome,
            "n_changes": explanation.n_changes,
            "changed_steps": " ".join(str(t) for t in sorted(explanation.changed_steps)),
            "states": _labels(explanation.states, vocabulary.state_label),
            "actions": _labels(explanation.actions, vocabulary.action_label),
            "observed_actions": _labels(traj.actions, vocabulary.action_label),
        })
    return pd.DataFrame(rows, columns=["sample", "outcome", "n_changes", "changed_steps",
                                       "states", "actions", "observed_actions"])


def explanation_groups_frame(groups, vocabulary: Optional[Vocabulary] = None) -> pd.DataFrame:
    """One row per distinct explanation with its frequency and mean outcome."""
    vocabulary = vocabulary or Vocabulary()
    rows = []
    for rank, group in enumerate(groups):
        changes = " ".join(
            f"{t}:{vocabulary.action_label(before)}->{vocabulary.action_label(after)}"
            for t, before, after in group.changes
        )
        rows.append({
            "rank": rank,
            "frequency": group.frequency,
            "mean_outcome": group.mean_outcome,
            "n_changes": len(group.changes),
            "changes": changes,
            "actions": _labels(group.actions, vocabulary.action_label),
        })
    return pd.DataFrame(rows, columns=["rank", "frequency", "mean_outcome", "n_changes",
                                       "changes", "actions"])


def error_record(kind: str, message: str, command: Optional[str]) -> str:
    """Single-line JSON error record for stderr."""
    return json.dumps({"error": kind, "message": message, "command": command})
