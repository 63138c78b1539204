"""In-memory end-to-end analysis of one region."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .ati import QUAD_REL_TOL, RegionAti, compute_region_ati
from .curves import R2_MIN
from .dataset import RegionDataset
from .features import FeatureVector, ThresholdSelection, extract_features, select_entry_threshold
from .stats import MomentSummary, WilcoxonResult, moments, wilcoxon_signed_rank
from .transitions import (HalfFeatures, MagnitudeDistribution, TransitionMatrix, TransitionRecord,
                          classify_half, magnitude_distribution, path_median_curves,
                          split_features, transition_matrix, transition_records)
from .typology import AdoptionProfile, PathAssignment, build_profiles, classify_profiles


@dataclass
class Analysis:
    dataset: RegionDataset
    region: RegionAti
    threshold: Optional[ThresholdSelection]
    fraction: float
    features: list[FeatureVector]
    profiles: list[AdoptionProfile]
    assignments: list[Optional[PathAssignment]]
    halves: tuple[HalfFeatures, HalfFeatures]
    half_profiles: tuple[list, list]
    half_assignments: tuple[list, list]
    records: list[TransitionRecord]
    matrix: TransitionMatrix
    magnitudes: MagnitudeDistribution
    medians: dict
    moments: dict[str, MomentSummary]
    wilcoxon: Optional[WilcoxonResult]

    def path_of(self, entity_id: str):
        a = self.assignments[self.dataset.ids.index(entity_id)]
        return None if a is None else a.path


def feature_moments(region: RegionAti, features) -> dict[str, MomentSummary]:
    out = {}
    cols = {
        "a_norm": [r.a_norm for r in region.results],
        "ati": [r.ati for r in region.results],
        "entry_time": [f.entry.value for f in features if f.entry.value is not None],
        "lai": [f.lai for f in features],
    }
    for name, vals in cols.items():
        if len(vals) >= 2:
            out[name] = moments(vals)
    return out


def compare_ati(region: RegionAti) -> Optional[WilcoxonResult]:
    a = [r.a_norm for r in region.results]
    b = [r.ati for r in region.results]
    try:
        return wilcoxon_signed_rank(a, b)
    except ValueError:
        return None


def analyze(dataset: RegionDataset, threshold: Union[str, float] = "auto",
            r2_min: float = R2_MIN, mode: str = "adjusted",
            split_time: Optional[float] = None, rel_tol: float = QUAD_REL_TOL) -> Analysis:
    region = compute_region_ati(dataset, r2_min, mode, rel_tol)
    if threshold == "auto":
        sel = select_entry_threshold(dataset)
        fraction = sel.fraction
    else:
        sel, fraction = None, float(threshold)
    features = extract_features(dataset, region.results, fraction)
    profiles = build_profiles(features)
    assignments = classify_profiles(profiles)
    h1, h2 = split_features(dataset, region, features, split_time, rel_tol)
    p1, a1 = classify_half(h1)
    p2, a2 = classify_half(h2)
    records = transition_records(dataset.ids, a1, a2)
    return Analysis(
        dataset, region, sel, fraction, features, profiles, assignments, (h1, h2),
        (p1, p2), (a1, a2), records, transition_matrix(records),
        magnitude_distribution(records), path_median_curves(dataset, assignments),
        feature_moments(region, features), compare_ati(region))
