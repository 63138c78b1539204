"""Panel ingestion: adoption intensity, time axis and regional mean series."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from datetime import date
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

DAYS_PER_YEAR = 365.25
AREA_SCALE = 1e6


class DataError(ValueError):
    """Input data violates the panel contract."""


@dataclass(frozen=True)
class TimeAxis:
    points: np.ndarray
    labels: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim != 1 or pts.shape[0] < 3:
            raise DataError(f"need at least 3 time points, got {pts.size}")
        if not np.all(np.isfinite(pts)) or np.any(np.diff(pts) <= 0):
            raise DataError("time points must be finite and strictly increasing")
        if pts[0] != 0.0:
            raise DataError("time axis must start at 0.0")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))

    def __len__(self):
        return self.points.shape[0]

    @property
    def t_first(self) -> float:
        return float(self.points[0])

    @property
    def t_last(self) -> float:
        return float(self.points[-1])

    @property
    def span(self) -> float:
        return self.t_last - self.t_first


@dataclass(frozen=True)
class AdoptionSeries:
    entity_id: str
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 1:
            raise DataError(f"{self.entity_id}: values must be one-dimensional")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise DataError(f"{self.entity_id}: values must be finite and >= 0")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values)


@dataclass(frozen=True)
class RegionDataset:
    axis: TimeAxis
    series: tuple[AdoptionSeries, ...]
    mean_series: np.ndarray

    @classmethod
    def from_series(cls, axis: TimeAxis, series: Iterable[AdoptionSeries]) -> "RegionDataset":
        items = tuple(sorted(series, key=lambda s: s.entity_id))
        if len(items) < 2:
            raise DataError(f"need at least 2 entities, got {len(items)}")
        ids = [s.entity_id for s in items]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate entity ids")
        for s in items:
            if s.values.shape[0] != len(axis):
                raise DataError(f"{s.entity_id}: {s.values.shape[0]} values for {len(axis)} time points")
        mean = np.stack([s.values for s in items]).mean(axis=0)
        mean.setflags(write=False)
        return cls(axis, items, mean)

    @classmethod
    def from_arrays(cls, times, values: Mapping[str, Sequence[float]]) -> "RegionDataset":
        return cls.from_series(TimeAxis(np.asarray(times, dtype=float)),
                               [AdoptionSeries(k, v) for k, v in values.items()])

    @property
    def ids(self) -> list[str]:
        return [s.entity_id for s in self.series]

    @property
    def matrix(self) -> np.ndarray:
        return np.stack([s.values for s in self.series])

    def __len__(self):
        return len(self.series)

    def get(self, entity_id: str) -> AdoptionSeries:
        for s in self.series:
            if s.entity_id == entity_id:
                return s
        raise KeyError(entity_id)


def compute_adoption_intensity(pv_area, built_area, entity_id: str = "?"):
    """PV area per built-up area, scaled by 10^6."""
    built = np.asarray(built_area, dtype=np.float64)
    pv = np.asarray(pv_area, dtype=np.float64)
    if np.any(~(built > 0)):
        raise DataError(f"{entity_id}: built-up area must be > 0")
    if np.any(~(pv >= 0)):
        raise DataError(f"{entity_id}: PV area must be >= 0")
    out = pv * AREA_SCALE / built
    return float(out) if out.ndim == 0 else out


def _parse_times(raw: Sequence[str]) -> tuple[np.ndarray, tuple[str, ...]]:
    """Map distinct time labels to fractional years since the first one."""
    labels = sorted(set(raw), key=lambda s: _time_key(s))
    keys = [_time_key(s) for s in labels]
    kinds = {k[0] for k in keys}
    if len(kinds) > 1:
        raise DataError("time column mixes dates and numbers")
    if kinds == {"date"}:
        first = keys[0][1]
        pts = [(k[1] - first).days / DAYS_PER_YEAR for k in keys]
    else:
        first = keys[0][1]
        pts = [k[1] - first for k in keys]
    return np.array(pts, dtype=np.float64), tuple(labels)


def _time_key(s: str):
    s = s.strip()
    try:
        return ("num", float(s))
    except ValueError:
        pass
    try:
        return ("date", date.fromisoformat(s[:10]))
    except ValueError:
        raise DataError(f"cannot parse time {s!r}") from None


def _num(row, col, ent, time):
    try:
        v = float(row[col])
    except (TypeError, ValueError):
        raise DataError(f"({ent}, {time}): {col} is not a number: {row[col]!r}") from None
    if not math.isfinite(v):
        raise DataError(f"({ent}, {time}): {col} is not finite")
    return v


def load_region(source: Union[str, os.PathLike, Iterable[Mapping[str, str]]]) -> RegionDataset:
    """Build a dense panel from long-format rows or a delimited file.

    Accepts ``entity_id,time,value`` or ``entity_id,time,pv_area,built_area``.
    Every entity needs exactly one row per time point.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="", encoding="utf-8") as fh:
            text = fh.read()
        try:
            dialect = csv.Sniffer().sniff(text.splitlines()[0] if text else ",", delimiters=",;\t|")
        except csv.Error:
            dialect = csv.excel
        rows = list(csv.DictReader(io.StringIO(text), dialect=dialect))
    else:
        rows = list(source)
    if not rows:
        raise DataError("no entities")
    cols = set(rows[0].keys())
    if {"entity_id", "time", "value"} <= cols:
        mode = "value"
    elif {"entity_id", "time", "pv_area", "built_area"} <= cols:
        mode = "area"
    else:
        raise DataError("header must contain entity_id,time,value or entity_id,time,pv_area,built_area")

    cells: dict[tuple[str, str], float] = {}
    built: dict[str, float] = {}
    for row in rows:
        ent = (row["entity_id"] or "").strip()
        time = (row["time"] or "").strip()
        if not ent:
            raise DataError("empty entity_id")
        if (ent, time) in cells:
            raise DataError(f"duplicate observation ({ent}, {time})")
        if mode == "value":
            v = _num(row, "value", ent, time)
            if v < 0:
                raise DataError(f"({ent}, {time}): negative adoption intensity")
        else:
            ba = _num(row, "built_area", ent, time)
            if built.setdefault(ent, ba) != ba:
                raise DataError(f"{ent}: built_area differs between time points")
            v = compute_adoption_intensity(_num(row, "pv_area", ent, time), ba, ent)
        cells[(ent, time)] = v
    if not cells:
        raise DataError("no entities")

    raw_times = sorted({k[1] for k in cells})
    pts, labels = _parse_times(raw_times)
    if pts.shape[0] != len(set(pts.tolist())):
        raise DataError("distinct time labels map to the same time point")
    entities = sorted({k[0] for k in cells})
    missing = [(e, t) for e in entities for t in labels if (e, t) not in cells]
    if missing:
        shown = ", ".join(f"({e}, {t})" for e, t in missing[:20])
        more = "" if len(missing) <= 20 else f" and {len(missing) - 20} more"
        raise DataError(f"missing observations: {shown}{more}")
    axis = TimeAxis(pts, labels)
    series = [AdoptionSeries(e, [cells[(e, t)] for t in labels]) for e in entities]
    return RegionDataset.from_series(axis, series)
