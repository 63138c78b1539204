"""Area under the fitted curve, crossings with the regional mean curve and
the duration-weighted penalty/reward that turns normalized AUC into ATI."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import kernels as K
from .curves import FittedCurve, select_best_curve, R2_MIN
from .dataset import RegionDataset

QUAD_REL_TOL = 1e-10
QUAD_LIMIT = 2000
SCAN_CELLS = 2048
ROOT_TOL = 1e-9      # x span
MERGE_TOL = 1e-6     # x span
EDGE_TOL = 1e-6      # x span
SLOPE_TOL = 1e-9
PROBE = 1e-4         # x span


class DegenerateRegion(ValueError):
    """Regional mean curve has no positive area."""


@dataclass(frozen=True)
class Intersection:
    t: float
    alpha_sign: int
    s_factor: Optional[int] = None


@dataclass(frozen=True)
class AtiResult:
    entity_id: str
    a_i: float
    a_norm: float
    delta: float
    intersections: tuple[Intersection, ...]
    feedback_initial: float
    feedback_terms: tuple[float, ...]
    ati: float
    window: tuple[float, float]
    low_fit: bool = False
    coincident: bool = False

    @property
    def n_intersections(self) -> int:
        return len(self.intersections)

    @property
    def feedback_duration(self) -> float:
        return self.feedback_initial + sum(self.feedback_terms)


@dataclass(frozen=True)
class RegionAti:
    mean_curve: FittedCurve
    a_m: float
    curves: dict = field(default_factory=dict)
    results: tuple[AtiResult, ...] = ()

    def by_id(self) -> dict[str, AtiResult]:
        return {r.entity_id: r for r in self.results}


def _window(curve: FittedCurve, a, b):
    lo = curve.t_first if a is None else float(a)
    hi = curve.t_last if b is None else float(b)
    if not hi > lo:
        raise ValueError(f"empty integration window [{lo}, {hi}]")
    return lo, hi


def _poly_integral(coef: np.ndarray, a: float, b: float) -> float:
    anti = np.concatenate(([0.0], coef / np.arange(1, coef.shape[0] + 1)))
    pa = np.polynomial.polynomial.polyval(a, anti)
    pb = np.polynomial.polynomial.polyval(b, anti)
    return float(pb - pa)


def compute_auc(curve: FittedCurve, a: Optional[float] = None, b: Optional[float] = None,
                rel_tol: float = QUAD_REL_TOL) -> float:
    """Integral of the curve over its domain (or over ``[a, b]``).

    Polynomials and lines use the exact antiderivative; everything else goes
    through adaptive Gauss-Kronrod.
    """
    lo, hi = _window(curve, a, b)
    if curve.family.is_linear_in_params:
        return _poly_integral(np.asarray(curve.params), lo, hi)
    val, _ = K.integrate_curve(curve.family.code, curve.params, lo, hi, rel_tol, QUAD_LIMIT)
    if not math.isfinite(val):
        raise ValueError(f"{curve.family} is not finite on [{lo}, {hi}]")
    return float(val)


def crossings(c_i: FittedCurve, c_m: FittedCurve, a: Optional[float] = None,
              b: Optional[float] = None) -> tuple[list[Intersection], bool]:
    """Interior crossings plus a flag for stretches where the curves coincide."""
    lo, hi = _window(c_m, a, b)
    span = hi - lo
    roots, signs, coincident = K.scan_crossings(
        c_i.family.code, c_i.params, c_m.family.code, c_m.params, lo, hi, SCAN_CELLS,
        ROOT_TOL * span, EDGE_TOL * span, MERGE_TOL * span, SLOPE_TOL, PROBE * span)
    return [Intersection(float(t), int(s)) for t, s in zip(roots, signs)], bool(coincident)


def find_intersections(c_i: FittedCurve, c_m: FittedCurve, a: Optional[float] = None,
                       b: Optional[float] = None) -> list[Intersection]:
    return crossings(c_i, c_m, a, b)[0]


def _sgn(x: float) -> int:
    return (x > 0) - (x < 0)


def feedback_factor(alpha_sign: int, delta: float) -> float:
    """Whether the interval after a crossing counts as a deviation (1) or not (0)."""
    s = (1 - _sgn(alpha_sign) * _sgn(delta)) / 2
    return int(s) if s in (0, 1) else s


def ati_from_parts(a_i: float, a_m: float, intersections: Sequence[Intersection],
                   t_first: float, t_last: float, entity_id: str = "",
                   low_fit: bool = False, coincident: bool = False) -> AtiResult:
    """Apply the feedback rule given areas and crossings on ``[t_first, t_last]``."""
    if not a_m > 0:
        raise DegenerateRegion(f"regional mean area must be > 0, got {a_m}")
    a_norm = (a_i / a_m) * 100.0
    delta = a_norm - 100.0
    pts = tuple(Intersection(x.t, x.alpha_sign) for x in intersections)
    if not pts or delta == 0.0:
        return AtiResult(entity_id, a_i, a_norm, delta, pts, 0.0, (), a_norm,
                         (t_first, t_last), low_fit, coincident)
    pts = tuple(replace(x, s_factor=feedback_factor(x.alpha_sign, delta)) for x in pts)
    f_init = (pts[0].t - t_first) * (1 - pts[0].s_factor)
    ends = [x.t for x in pts[1:]] + [t_last]
    terms = tuple((end - x.t) * x.s_factor for x, end in zip(pts, ends))
    share = (f_init + sum(terms)) / (t_last - t_first)
    ati = a_norm - share * delta
    return AtiResult(entity_id, a_i, a_norm, delta, pts, f_init, terms, ati,
                     (t_first, t_last), low_fit, coincident)


def compute_ati(c_i: FittedCurve, c_m: FittedCurve, a_m: float, entity_id: str = "",
                a: Optional[float] = None, b: Optional[float] = None,
                rel_tol: float = QUAD_REL_TOL) -> AtiResult:
    """ATI of one entity curve against the regional mean curve.

    ``a``/``b`` restrict everything (areas, crossings, durations) to a
    sub-window; ``a_m`` must then be the mean curve's area on that window.
    """
    lo, hi = _window(c_m, a, b)
    if not a_m > 0:
        raise DegenerateRegion(f"regional mean area must be > 0, got {a_m}")
    a_i = compute_auc(c_i, lo, hi, rel_tol)
    pts, coincident = crossings(c_i, c_m, lo, hi)
    return ati_from_parts(a_i, a_m, pts, lo, hi, entity_id, c_i.low_fit, coincident)


def zero_result(entity_id: str, window: tuple[float, float]) -> AtiResult:
    return AtiResult(entity_id, 0.0, 0.0, -100.0, (), 0.0, (), 0.0, window)


def fit_region(dataset: RegionDataset, r2_min: float = R2_MIN,
               mode: str = "adjusted") -> tuple[FittedCurve, dict[str, FittedCurve]]:
    """Best curve for the regional mean and for every entity."""
    t = dataset.axis.points
    mean_curve = select_best_curve(t, dataset.mean_series, r2_min, mode)
    fits = {s.entity_id: select_best_curve(t, s.values, r2_min, mode) for s in dataset.series}
    return mean_curve, fits


def region_ati_from_fits(dataset: RegionDataset, mean_curve: FittedCurve,
                         fits: dict[str, FittedCurve],
                         rel_tol: float = QUAD_REL_TOL) -> RegionAti:
    a_m = compute_auc(mean_curve, rel_tol=rel_tol)
    if not a_m > 0:
        raise DegenerateRegion(f"regional mean curve area is {a_m}; nothing to normalize by")
    window = mean_curve.domain
    out = []
    for s in dataset.series:
        if s.is_zero:
            out.append(zero_result(s.entity_id, window))
        else:
            out.append(compute_ati(fits[s.entity_id], mean_curve, a_m, s.entity_id,
                                   rel_tol=rel_tol))
    return RegionAti(mean_curve, a_m, dict(fits), tuple(out))


def compute_region_ati(dataset: RegionDataset, r2_min: float = R2_MIN,
                       mode: str = "adjusted", rel_tol: float = QUAD_REL_TOL) -> RegionAti:
    """Fit the mean curve, then score every entity against it."""
    mean_curve, fits = fit_region(dataset, r2_min, mode)
    return region_ati_from_fits(dataset, mean_curve, fits, rel_tol)
