"""Ordinal tiers, adoption profiles, feasibility rules and path assignment."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .features import FeatureVector, Trajectory

BAND = 0.44


class Level(str, enum.Enum):
    """Tier for ATI and latest adoption intensity."""
    ZERO = "Zero"
    LOW = "Low"
    MEDIUM = "Medium"
    HIGH = "High"

    def __str__(self):
        return self.value


class Entry(str, enum.Enum):
    NULL = "Null"
    EARLY = "Early"
    MIDDLE = "Middle"
    LATE = "Late"

    def __str__(self):
        return self.value


class Path(str, enum.Enum):
    NON_ADOPTING = "NonAdopting"
    LAGGING = "Lagging"
    DECLINING_MODERATE = "DecliningModerate"
    MODERATE = "Moderate"
    DECELERATING = "Decelerating"
    LEAPING = "Leaping"
    ACCELERATING = "Accelerating"
    LEADING = "Leading"

    def __str__(self):
        return self.value

    @property
    def tier(self) -> int:
        return PATH_ORDER.index(self)


# low to high
PATH_ORDER = tuple(Path)


class InfeasibleProfile(ValueError):
    pass


@dataclass(frozen=True)
class AdoptionProfile:
    ati: Level
    entry: Entry
    trajectory: Trajectory
    lai: Level

    def __str__(self):
        return f"({self.ati}, {self.entry}, {self.trajectory}, {self.lai})"


@dataclass(frozen=True)
class PathAssignment:
    path: Path
    rule_id: str


def assign_tiers(values: Sequence[float], zero_mask: Sequence[bool], kind: str = "level") -> list:
    """Three-band ordinal tiers around mean +/- 0.44 population SD.

    Moments use only unmasked entries.  Masked entries get ``Zero`` (or
    ``Null`` for ``kind="entry"``).  With fewer than two unmasked values
    every unmasked value is put in the middle band.
    """
    labels = (Level.ZERO, Level.LOW, Level.MEDIUM, Level.HIGH) if kind == "level" else \
        (Entry.NULL, Entry.EARLY, Entry.MIDDLE, Entry.LATE)
    mask = np.asarray(zero_mask, dtype=bool)
    x = np.array([np.nan if m else v for v, m in zip(values, mask)], dtype=np.float64)
    live = x[~mask]
    if live.shape[0] < 2:
        return [labels[0] if m else labels[2] for m in mask]
    mu = float(live.mean())
    sigma = float(live.std())
    lo, hi = mu - BAND * sigma, mu + BAND * sigma
    out = []
    for v, m in zip(x, mask):
        if m:
            out.append(labels[0])
        elif v < lo:
            out.append(labels[1])
        elif v > hi:
            out.append(labels[3])
        else:
            out.append(labels[2])
    return out


def _normalized(p: AdoptionProfile) -> AdoptionProfile:
    # adopters with no threshold crossing count as late; a zero last value as low
    if p.ati is Level.ZERO:
        return p
    entry = Entry.LATE if p.entry is Entry.NULL else p.entry
    lai = Level.LOW if p.lai is Level.ZERO else p.lai
    return AdoptionProfile(p.ati, entry, p.trajectory, lai)


def infeasibility(profile: AdoptionProfile) -> Optional[str]:
    """Id of the first rule that rules the profile out, or ``None``."""
    p = profile
    zero = p.ati is Level.ZERO
    if zero != (p.trajectory is Trajectory.NULL):
        return "R0"
    if zero and (p.entry is not Entry.NULL or p.lai is not Level.ZERO):
        return "R0"
    if zero:
        return None
    q = _normalized(p)
    if q.ati is Level.HIGH and q.entry is Entry.LATE:
        return "R1"
    if q.ati is Level.LOW and q.lai is Level.HIGH and \
            q.trajectory in (Trajectory.DOWNHILL, Trajectory.STABLE):
        return "R2"
    if q.ati is Level.HIGH and q.lai is Level.LOW and \
            q.trajectory in (Trajectory.UPHILL, Trajectory.STABLE):
        return "R3"
    return None


def is_feasible(profile: AdoptionProfile) -> bool:
    return infeasibility(profile) is None


H, M, L = Level.HIGH, Level.MEDIUM, Level.LOW
E, MI, LA = Entry.EARLY, Entry.MIDDLE, Entry.LATE
UP, DOWN, ST = Trajectory.UPHILL, Trajectory.DOWNHILL, Trajectory.STABLE

# (rule id, path, ati, entry, trajectory, lai)
CRITERIA = (
    ("row:Leading", Path.LEADING, {H}, {E}, {ST}, {H}),
    ("row:Accelerating", Path.ACCELERATING, {H}, {E}, {UP}, {H}),
    ("row:Decelerating", Path.DECELERATING, {H}, {E}, {DOWN}, {M, L}),
    ("row:Leaping", Path.LEAPING, {L, M}, {LA}, {UP}, {H}),
    ("row:Moderate", Path.MODERATE, {M}, {E, MI}, {ST, UP}, {M}),
    ("row:DecliningModerate", Path.DECLINING_MODERATE, {M}, {E, MI}, {DOWN}, {L}),
    ("row:Lagging", Path.LAGGING, {L}, {E, MI, LA}, {ST, DOWN}, {L}),
)


def _fallback(q: AdoptionProfile) -> PathAssignment:
    if q.ati is H:
        path = {DOWN: Path.DECELERATING, UP: Path.ACCELERATING, ST: Path.LEADING}[q.trajectory]
        return PathAssignment(path, f"FB:High/{q.trajectory}")
    if q.ati is M:
        if q.trajectory is DOWN:
            return PathAssignment(Path.DECLINING_MODERATE, "FB:Medium/Downhill")
        if q.entry is LA and q.trajectory is UP and q.lai is H:
            return PathAssignment(Path.LEAPING, "FB:Medium/LateUphillHigh")
        return PathAssignment(Path.MODERATE, "FB:Medium/other")
    if q.trajectory is UP and q.lai in (H, M):
        return PathAssignment(Path.LEAPING, "FB:Low/Uphill")
    return PathAssignment(Path.LAGGING, "FB:Low/other")


def classify(profile: AdoptionProfile) -> PathAssignment:
    """Table rows first, in order; unmatched profiles go to a fallback keyed
    on ATI tier and then trajectory."""
    rule = infeasibility(profile)
    if rule is not None:
        raise InfeasibleProfile(f"profile {profile} is infeasible ({rule})")
    if profile.ati is Level.ZERO:
        return PathAssignment(Path.NON_ADOPTING, "row:NonAdopting")
    q = _normalized(profile)
    for rule_id, path, a, e, tr, lai in CRITERIA:
        if q.ati in a and q.entry in e and q.trajectory in tr and q.lai in lai:
            return PathAssignment(path, rule_id)
    return _fallback(q)


def all_profiles():
    return [AdoptionProfile(*c) for c in itertools.product(Level, Entry, Trajectory, Level)]


def feasible_profile_count() -> int:
    return sum(is_feasible(p) for p in all_profiles())


def build_profiles(features: Sequence[FeatureVector]) -> list[AdoptionProfile]:
    zero = [f.ati == 0 for f in features]
    ati_t = assign_tiers([f.ati for f in features], zero)
    lai_zero = [f.lai == 0 for f in features]
    lai_t = assign_tiers([f.lai for f in features], lai_zero)
    nulls = [f.entry.value is None for f in features]
    ent_t = assign_tiers([np.nan if f.entry.value is None else f.entry.value for f in features],
                         nulls, kind="entry")
    return [AdoptionProfile(a, e, f.trajectory, l)
            for a, e, f, l in zip(ati_t, ent_t, features, lai_t)]


def classify_profiles(profiles: Sequence[AdoptionProfile]) -> list[Optional[PathAssignment]]:
    """``classify`` over a population; infeasible profiles map to ``None``."""
    return [classify(p) if is_feasible(p) else None for p in profiles]


def path_frequencies(assignments: Sequence[Optional[PathAssignment]]) -> dict[Path, int]:
    counts = {p: 0 for p in Path}
    for a in assignments:
        if a is not None:
            counts[a.path] += 1
    return counts
