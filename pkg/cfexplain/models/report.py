"""Per-realization metric records and their aggregation."""

import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np
import pandas as pd
from scipy import stats

CONFIDENCE = 0.95


def relative_improvement(observed: float, counterfactual: float) -> float:
    """(ō - o) / |o|; nan when o is 0 or -inf."""
    if observed == 0 or not math.isfinite(observed):
        return math.nan
    if not math.isfinite(counterfactual):
        return math.nan
    return (counterfactual - observed) / abs(observed)


@dataclass
class RealizationRecord:
    realization: str
    k: int
    observed_outcome: float
    cf_outcome: float
    unique_explanations: Optional[int] = None
    instance: Optional[int] = None
    alpha: Optional[float] = None
    horizon: Optional[int] = None

    @property
    def improvement(self) -> float:
        if self.observed_outcome == -math.inf and self.cf_outcome == -math.inf:
            return 0.0
        return self.cf_outcome - self.observed_outcome

    @property
    def relative_improvement(self) -> float:
        return relative_improvement(self.observed_outcome, self.cf_outcome)

    def to_dict(self) -> dict:
        row = asdict(self)
        row["improvement"] = self.improvement
        row["relative_improvement"] = self.relative_improvement
        return row


@dataclass
class ProfileRecord:
    realization: str
    k: int
    t: int
    change_frequency: float
    observed_state: int
    best_state: int


def mean_interval(values) -> tuple:
    """Mean and Student-t 95% interval of the finite entries of ``values``."""
    values = np.asarray(values, dtype=float)
    values = values[np.isfinite(values)]
    if values.size == 0:
        return math.nan, math.nan, math.nan
    mean = float(values.mean())
    if values.size == 1:
        return mean, mean, mean
    sem = float(stats.sem(values))
    if sem == 0:
        return mean, mean, mean
    low, high = stats.t.interval(CONFIDENCE, values.size - 1, loc=mean, scale=sem)
    return mean, float(low), float(high)


@dataclass
class MetricsReport:
    records: List[RealizationRecord] = field(default_factory=list)
    profiles: List[ProfileRecord] = field(default_factory=list)

    def extend(self, other: "MetricsReport") -> None:
        self.records.extend(other.records)
        self.profiles.extend(other.profiles)

    def to_frame(self) -> pd.DataFrame:
        columns = list(RealizationRecord.__dataclass_fields__) + ["improvement", "relative_improvement"]
        return pd.DataFrame([r.to_dict() for r in self.records], columns=columns)

    def profile_frame(self) -> pd.DataFrame:
        columns = list(ProfileRecord.__dataclass_fields__)
        return pd.DataFrame([asdict(p) for p in self.profiles], columns=columns)

    def aggregates(self) -> pd.DataFrame:
        """One row per (alpha, k) with means and 95% intervals."""
        frame = self.to_frame()
        keys = ["alpha", "k"]
        frame["alpha"] = frame["alpha"].astype(float)
        rows = []
        for (alpha, k), group in frame.groupby(keys, dropna=False, sort=True):
            rel, rel_low, rel_high = mean_interval(group["relative_improvement"])
            uniq, uniq_low, uniq_high = mean_interval(group["unique_explanations"].astype(float))
            rows.append({
                "alpha": alpha,
                "k": int(k),
                "realizations": len(group),
                "mean_observed_outcome": float(np.mean(group["observed_outcome"])),
                "mean_cf_outcome": float(np.mean(group["cf_outcome"])),
                "mean_relative_improvement": rel,
                "relative_improvement_low": rel_low,
                "relative_improvement_high": rel_high,
                "mean_unique_explanations": uniq,
                "unique_explanations_low": uniq_low,
                "unique_explanations_high": uniq_high,
            })
        return pd.DataFrame(rows)


@dataclass
class BaselineRecord:
    """Exact average counterfactual outcome of one policy on one realization."""

    realization: str
    k: int
    policy: str
    value: float
    observed_outcome: float

    @property
    def relative_improvement(self) -> float:
        return relative_improvement(self.observed_outcome, self.value)


def baseline_frame(records: List[BaselineRecord]) -> pd.DataFrame:
    columns = list(BaselineRecord.__dataclass_fields__) + ["relative_improvement"]
    rows = [dict(asdict(r), relative_improvement=r.relative_improvement) for r in records]
    return pd.DataFrame(rows, columns=columns)
