"""Adoption-path typology for regional technology adoption panels.

Each entity's cumulative adoption curve is scored against the regional mean
curve (ATI), combined with entry time, latest adoption intensity and latest
trajectory into an ordinal profile, and mapped to one of eight adoption
paths.  Splitting the timeline in half gives path transitions.
"""

from .ati import AtiResult, RegionAti, compute_ati, compute_auc, compute_region_ati, find_intersections
from .curves import CurveFamily, FittedCurve, select_best_curve
from .dataset import AdoptionSeries, DataError, RegionDataset, TimeAxis, load_region
from .features import FeatureVector, Trajectory, extract_features, select_entry_threshold
from .pipeline import Analysis, analyze
from .stats import moments, wilcoxon_signed_rank
from .typology import AdoptionProfile, Entry, Level, Path, classify

__version__ = "0.1.0"

__all__ = [
    "AdoptionProfile", "AdoptionSeries", "Analysis", "AtiResult", "CurveFamily", "DataError",
    "Entry", "FeatureVector", "FittedCurve", "Level", "Path", "RegionAti", "RegionDataset",
    "TimeAxis", "Trajectory", "analyze", "classify", "compute_ati", "compute_auc",
    "compute_region_ati", "extract_features", "find_intersections", "load_region", "moments",
    "select_best_curve", "select_entry_threshold", "wilcoxon_signed_rank",
]
