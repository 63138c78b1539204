"""Timeline halves: per-half features and paths, the transition matrix,
transition magnitudes and per-path median curves."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .ati import QUAD_REL_TOL, AtiResult, RegionAti, ati_from_parts, compute_auc, zero_result
from .dataset import RegionDataset
from .features import EntryTime, FeatureVector, latest_trajectory
from .typology import PATH_ORDER, Path, PathAssignment, build_profiles, classify_profiles


@dataclass(frozen=True)
class HalfFeatures:
    half: int
    window: tuple[float, float]
    ati: tuple[AtiResult, ...]
    features: tuple[FeatureVector, ...]


@dataclass(frozen=True)
class TransitionRecord:
    entity_id: str
    path_first_half: Path
    path_second_half: Path

    @property
    def magnitude(self) -> int:
        return self.path_second_half.tier - self.path_first_half.tier


@dataclass(frozen=True)
class TransitionMatrix:
    counts: np.ndarray
    percentages: np.ndarray
    total: int


@dataclass(frozen=True)
class MagnitudeDistribution:
    counts: dict[int, int]
    upward: float
    downward: float
    unchanged: float


def _interp(t, values, x):
    return float(np.interp(x, t, values))


def _zero_within(t: np.ndarray, values: np.ndarray, lo: float, hi: float) -> bool:
    inside = values[(t >= lo) & (t <= hi)]
    return not np.any(inside) and _interp(t, values, lo) == 0 and _interp(t, values, hi) == 0


def split_features(dataset: RegionDataset, region: RegionAti,
                   features: Sequence[FeatureVector],
                   split_time: Optional[float] = None,
                   rel_tol: float = QUAD_REL_TOL) -> tuple[HalfFeatures, HalfFeatures]:
    """Recompute ATI, LAI and trajectory on each side of ``split_time``.

    The full-timeline curves are restricted to each window rather than
    refit.  Only crossings strictly inside a window count there.  Entry
    times stay as computed on the full timeline, except that an entity with
    no adoption inside a window is a non-adopter for that window.
    """
    t = dataset.axis.points
    t0, t1 = dataset.axis.t_first, dataset.axis.t_last
    split = 0.5 * (t0 + t1) if split_time is None else float(split_time)
    if not t0 < split < t1:
        raise ValueError(f"split time {split} outside ({t0}, {t1})")
    mean = dataset.mean_series
    by_id = {r.entity_id: r for r in region.results}
    feats = {f.entity_id: f for f in features}
    edge = 1e-6 * (t1 - t0)
    halves = []
    for h, (lo, hi) in enumerate(((t0, split), (split, t1)), start=1):
        a_m = compute_auc(region.mean_curve, lo, hi, rel_tol)
        m_last = _interp(t, mean, hi)
        if not m_last > 0:
            raise ValueError(f"regional mean is zero at t={hi}")
        results, vecs = [], []
        for s in dataset.series:
            full = by_id[s.entity_id]
            if s.is_zero or _zero_within(t, s.values, lo, hi):
                res = zero_result(s.entity_id, (lo, hi))
                entry = EntryTime(None, feats[s.entity_id].entry.threshold_fraction)
            else:
                pts = [x for x in full.intersections if lo + edge < x.t < hi - edge]
                a_i = compute_auc(region.curves[s.entity_id], lo, hi, rel_tol)
                res = ati_from_parts(a_i, a_m, pts, lo, hi, s.entity_id, full.low_fit,
                                     full.coincident)
                entry = feats[s.entity_id].entry
            lai = _interp(t, s.values, hi) / m_last * 100.0
            results.append(res)
            vecs.append(FeatureVector(s.entity_id, res.ati, entry, lai,
                                      latest_trajectory(res), full.low_fit))
        halves.append(HalfFeatures(h, (lo, hi), tuple(results), tuple(vecs)))
    return halves[0], halves[1]


def classify_half(half: HalfFeatures):
    profiles = build_profiles(half.features)
    return profiles, classify_profiles(profiles)


def transition_records(ids: Sequence[str], first: Sequence[Optional[PathAssignment]],
                       second: Sequence[Optional[PathAssignment]]) -> list[TransitionRecord]:
    """One record per entity classified in both halves."""
    return [TransitionRecord(e, a.path, b.path)
            for e, a, b in zip(ids, first, second) if a is not None and b is not None]


def transition_matrix(records: Sequence[TransitionRecord]) -> TransitionMatrix:
    counts = np.zeros((len(PATH_ORDER), len(PATH_ORDER)), dtype=np.int64)
    for r in records:
        counts[r.path_first_half.tier, r.path_second_half.tier] += 1
    n = len(records)
    pct = counts * (100.0 / n) if n else np.zeros(counts.shape)
    return TransitionMatrix(counts, pct, n)


def magnitude_distribution(records: Sequence[TransitionRecord]) -> MagnitudeDistribution:
    span = len(PATH_ORDER) - 1
    counts = {k: 0 for k in range(-span, span + 1)}
    for r in records:
        counts[r.magnitude] += 1
    n = len(records)
    if n == 0:
        return MagnitudeDistribution(counts, 0.0, 0.0, 0.0)
    up = sum(v for k, v in counts.items() if k > 0) / n
    down = sum(v for k, v in counts.items() if k < 0) / n
    return MagnitudeDistribution(counts, up, down, counts[0] / n)


def path_median_curves(dataset: RegionDataset,
                       assignments: Sequence[Optional[PathAssignment]]) -> dict[Path, np.ndarray]:
    """Per-time-point median intensity of each path's members."""
    groups: dict[Path, list[np.ndarray]] = {}
    for s, a in zip(dataset.series, assignments):
        if a is not None:
            groups.setdefault(a.path, []).append(s.values)
    return {p: np.median(np.stack(groups[p]), axis=0) for p in PATH_ORDER if p in groups}
