"""Synthetic regions built from archetype generators.

Each archetype is a closed-form cumulative curve sampled on the time axis.
Two archetypes are tied to the regional mean, which includes them: the
Moderate entity is a fixed multiple of the mean, and the Decelerating entity
saturates early at a fixed fraction of the mean's final value.  Both are
solved in closed form.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .dataset import AdoptionSeries, RegionDataset, TimeAxis

DEFAULT_TIMES = (0.0, 3.0, 5.0, 8.0, 9.0, 10.0)


def logistic(t, k, r, t0):
    return k / (1.0 + np.exp(-r * (np.asarray(t, dtype=float) - t0)))


def gompertz(t, k, b, c):
    return k * np.exp(-b * np.exp(-c * np.asarray(t, dtype=float)))


ARCHETYPES = {
    "Leading": lambda t: logistic(t, 230.0, 0.9, 3.0),
    "Accelerating": lambda t: gompertz(t, 220.0, 4.2, 0.45),
    "Leaping": lambda t: logistic(t, 260.0, 2.2, 8.6),
    "DecliningModerate": lambda t: logistic(t, 80.0, 1.0, 2.0),
    "Lagging": lambda t: logistic(t, 18.0, 0.8, 5.0),
    "NonAdopting": lambda t: np.zeros_like(np.asarray(t, dtype=float)),
}
MODERATE_RATIO = 1.12
DECELERATING_PLATEAU = 0.9


def decelerating_shape(t):
    return logistic(t, 1.0, 2.0, 0.5)


def archetype_series(times: Sequence[float] = DEFAULT_TIMES,
                     extra: dict | None = None,
                     moderate_ratio: float = MODERATE_RATIO,
                     plateau: float = DECELERATING_PLATEAU) -> dict[str, np.ndarray]:
    """Series for one entity per archetype, plus ``extra`` generators keyed
    by entity id."""
    t = np.asarray(times, dtype=float)
    series = {name: gen(t) for name, gen in ARCHETYPES.items()}
    for name, gen in (extra or {}).items():
        series[name] = gen(t)
    others = np.sum(list(series.values()), axis=0)
    n = len(series) + 2
    shape = decelerating_shape(t)
    # mean * (n - ratio) = others + k * shape, with k = plateau * mean[-1]
    k = plateau * others[-1] / (n - moderate_ratio - plateau * shape[-1])
    series["Decelerating"] = k * shape
    series["Moderate"] = moderate_ratio * (others + k * shape) / (n - moderate_ratio)
    return series


def archetype_region(times: Sequence[float] = DEFAULT_TIMES, **kw) -> RegionDataset:
    return RegionDataset.from_series(
        TimeAxis(np.asarray(times, dtype=float)),
        [AdoptionSeries(k, v) for k, v in archetype_series(times, **kw).items()])


def expected_path(entity_id: str) -> str:
    """Archetype name encoded in an entity id such as ``Lagging_2``."""
    return entity_id.split("_")[0]


# extra members that turn the eight archetypes into a twelve-entity region
FIXTURE_EXTRAS = {
    "Leaping_2": lambda t: logistic(t, 240.0, 2.0, 8.8),
    "Lagging_2": lambda t: logistic(t, 12.0, 0.7, 5.5),
    "NonAdopting_2": lambda t: np.zeros_like(np.asarray(t, dtype=float)),
    "DecliningModerate_2": lambda t: logistic(t, 85.0, 1.1, 2.2),
}
FIXTURE_YEARS = (2012, 2015, 2017, 2020, 2021, 2022)


def fixture_rows(years: Sequence[int] = FIXTURE_YEARS) -> list[tuple[str, int, float]]:
    """Long-format ``(entity_id, year, value)`` rows of the twelve-entity region."""
    t = np.asarray(years, dtype=float) - years[0]
    series = archetype_series(t, extra=FIXTURE_EXTRAS)
    return [(e, y, float(v)) for e in sorted(series) for y, v in zip(years, series[e])]
