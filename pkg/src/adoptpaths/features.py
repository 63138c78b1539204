"""Entry time, latest adoption intensity and latest trajectory."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .ati import AtiResult
from .dataset import RegionDataset
from .stats import moments

CANDIDATE_FRACTIONS = tuple(round(0.1 * k, 1) for k in range(1, 7))
MIN_COVERAGE = 0.6


class Trajectory(str, enum.Enum):
    UPHILL = "Uphill"
    DOWNHILL = "Downhill"
    STABLE = "Stable"
    NULL = "Null"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class EntryTime:
    value: Optional[float]
    threshold_fraction: float

    @property
    def reached(self) -> bool:
        return self.value is not None


@dataclass(frozen=True)
class FeatureVector:
    entity_id: str
    ati: float
    entry: EntryTime
    lai: float
    trajectory: Trajectory
    low_fit: bool = False


@dataclass(frozen=True)
class ThresholdCandidate:
    fraction: float
    coverage: float
    n_reached: int
    mean: float
    sd: float
    skewness: float
    excess_kurtosis: float

    @property
    def score(self) -> float:
        return abs(self.skewness) + abs(self.excess_kurtosis)


@dataclass(frozen=True)
class ThresholdSelection:
    fraction: float
    forced: bool
    table: tuple[ThresholdCandidate, ...]


def entry_time(values: Sequence[float], mean_series: Sequence[float], axis,
               fraction: float) -> EntryTime:
    """First time the entity reaches ``fraction`` of the regional mean.

    Both series are linearly interpolated between observations, so the
    crossing inside a bracketing segment is solved exactly.  Instants where
    entity and mean are both zero do not count as reaching the threshold.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"threshold fraction must be in (0, 1), got {fraction}")
    t = np.asarray(getattr(axis, "points", axis), dtype=np.float64)
    ai = np.asarray(values, dtype=np.float64)
    m = np.asarray(mean_series, dtype=np.float64)
    g = ai - fraction * m
    live = (ai > 0) | (m > 0)
    if g[0] >= 0 and live[0]:
        return EntryTime(float(t[0]), fraction)
    for k in range(1, t.shape[0]):
        if not (g[k] >= 0 and live[k]):
            continue
        if g[k - 1] >= 0:
            # previous node was a 0 >= 0 instant; the threshold holds right after it
            return EntryTime(float(t[k - 1]), fraction)
        x = t[k - 1] + (-g[k - 1]) / (g[k] - g[k - 1]) * (t[k] - t[k - 1])
        return EntryTime(float(min(max(x, t[k - 1]), t[k])), fraction)
    return EntryTime(None, fraction)


def latest_adoption_intensity(values: Sequence[float], mean_series: Sequence[float]) -> float:
    last_mean = float(mean_series[-1])
    if not last_mean > 0:
        raise ValueError("regional mean is zero at the last time point")
    return float(values[-1]) / last_mean * 100.0


def latest_trajectory(result: AtiResult) -> Trajectory:
    if result.ati == 0:
        return Trajectory.NULL
    if not result.intersections:
        return Trajectory.STABLE
    return Trajectory.UPHILL if result.intersections[-1].alpha_sign > 0 else Trajectory.DOWNHILL


def _candidate(dataset: RegionDataset, fraction: float) -> ThresholdCandidate:
    entries = [entry_time(s.values, dataset.mean_series, dataset.axis, fraction).value
               for s in dataset.series]
    reached = np.array([e for e in entries if e is not None], dtype=np.float64)
    n = len(entries)
    if reached.shape[0] >= 2:
        mo = moments(reached)
        return ThresholdCandidate(fraction, reached.shape[0] / n, reached.shape[0], mo.mean,
                                  mo.sd, mo.skewness, mo.excess_kurtosis)
    mean = float(reached[0]) if reached.shape[0] else math.nan
    return ThresholdCandidate(fraction, reached.shape[0] / n, reached.shape[0], mean, 0.0,
                              math.inf, math.inf)


def select_entry_threshold(dataset: RegionDataset,
                           candidates: Sequence[float] = CANDIDATE_FRACTIONS,
                           min_coverage: float = MIN_COVERAGE) -> ThresholdSelection:
    """Pick the fraction whose entry-time distribution is closest to normal.

    Candidates reaching fewer than ``min_coverage`` of entities are dropped;
    the rest are ranked by |skewness| + |excess kurtosis|, then by larger
    SD, then by smaller fraction.
    """
    table = tuple(_candidate(dataset, f) for f in sorted(candidates))
    ok = [c for c in table if c.coverage >= min_coverage and math.isfinite(c.score)]
    if not ok:
        best = max(table, key=lambda c: (c.coverage, -c.fraction))
        return ThresholdSelection(best.fraction, True, table)
    best = min(ok, key=lambda c: (c.score, -c.sd, c.fraction))
    return ThresholdSelection(best.fraction, False, table)


def extract_features(dataset: RegionDataset, results: Sequence[AtiResult],
                     fraction: float) -> list[FeatureVector]:
    by_id = {r.entity_id: r for r in results}
    out = []
    for s in dataset.series:
        r = by_id[s.entity_id]
        out.append(FeatureVector(
            s.entity_id, r.ati,
            entry_time(s.values, dataset.mean_series, dataset.axis, fraction),
            latest_adoption_intensity(s.values, dataset.mean_series),
            latest_trajectory(r), r.low_fit))
    return out
