"""Cumulative adoption curve families, bounded least-squares fits and
best-curve selection."""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.stats import qmc

from . import kernels as K

MAX_ITER = 200
XTOL = 1e-10
N_STARTS = 8
R2_MIN = 0.9
TIE_TOL = 1e-12


class FitError(RuntimeError):
    """No candidate family produced a usable fit."""


@dataclass(frozen=True)
class CurveFamily:
    tag: str
    degree: Optional[int] = None

    @property
    def code(self) -> int:
        return _CODES[self.tag]

    @property
    def parameter_count(self) -> int:
        if self.tag == "Polynomial":
            return self.degree + 1
        return _NPARAMS[self.tag]

    @property
    def is_linear_in_params(self) -> bool:
        return self.tag in ("Polynomial", "Linear")

    @property
    def order(self) -> int:
        return FAMILY_ORDER.index(self.tag)

    def __str__(self) -> str:
        if self.tag == "Polynomial":
            return f"Polynomial({self.degree})"
        return self.tag

    @classmethod
    def parse(cls, text: str) -> "CurveFamily":
        m = re.fullmatch(r"Polynomial\((\d+)\)", text.strip())
        if m:
            return polynomial(int(m.group(1)))
        if text.strip() not in _CODES or text.strip() == "Polynomial":
            raise ValueError(f"unknown curve family {text!r}")
        return cls(text.strip())


FAMILY_ORDER = (
    "Logistic", "Gompertz", "Bass", "GeneralizedRichards", "CumulativeNormal",
    "Exponential", "Bertalanffy", "Polynomial", "Linear",
)
_CODES = {
    "Logistic": K.LOGISTIC, "Gompertz": K.GOMPERTZ, "Bass": K.BASS,
    "GeneralizedRichards": K.RICHARDS, "CumulativeNormal": K.CUMNORMAL,
    "Exponential": K.EXPONENTIAL, "Bertalanffy": K.BERTALANFFY,
    "Polynomial": K.POLYNOMIAL, "Linear": K.LINEAR,
}
_NPARAMS = {
    "Logistic": 3, "Gompertz": 3, "Bass": 3, "GeneralizedRichards": 4,
    "CumulativeNormal": 3, "Exponential": 2, "Bertalanffy": 3, "Linear": 2,
}

LOGISTIC = CurveFamily("Logistic")
GOMPERTZ = CurveFamily("Gompertz")
BASS = CurveFamily("Bass")
RICHARDS = CurveFamily("GeneralizedRichards")
CUMNORMAL = CurveFamily("CumulativeNormal")
EXPONENTIAL = CurveFamily("Exponential")
BERTALANFFY = CurveFamily("Bertalanffy")
LINEAR = CurveFamily("Linear")
NONLINEAR = (LOGISTIC, GOMPERTZ, BASS, RICHARDS, CUMNORMAL, EXPONENTIAL, BERTALANFFY)
SIGMOIDS = frozenset(f.tag for f in (LOGISTIC, GOMPERTZ, BASS, RICHARDS, CUMNORMAL, BERTALANFFY))


def polynomial(degree: int) -> CurveFamily:
    if degree < 2:
        raise ValueError("polynomial degree must be >= 2 (use Linear for degree 1)")
    return CurveFamily("Polynomial", degree)


def candidate_families(n_points: int) -> list[CurveFamily]:
    """Every family admissible for a series of ``n_points`` observations."""
    fams = [f for f in NONLINEAR if f.parameter_count <= n_points]
    fams += [polynomial(d) for d in range(2, n_points)]
    fams.append(LINEAR)
    return fams


@dataclass(frozen=True)
class FittedCurve:
    """A fitted cumulative curve that can be evaluated, differentiated and
    integrated on its domain."""

    family: CurveFamily
    params: np.ndarray
    r2: float
    r2_adjusted: float
    domain: tuple[float, float]
    sse: float = 0.0
    low_fit: bool = False
    n_points: int = 0

    def __post_init__(self):
        p = np.ascontiguousarray(self.params, dtype=np.float64)
        p.setflags(write=False)
        object.__setattr__(self, "params", p)

    def _eval(self, fn, t):
        arr = np.atleast_1d(np.asarray(t, dtype=np.float64)).ravel()
        out = fn(self.family.code, self.params, np.ascontiguousarray(arr))
        if np.ndim(t) == 0:
            return float(out[0])
        return out.reshape(np.shape(t))

    def value(self, t):
        return self._eval(K.curve_value, t)

    def derivative(self, t):
        return self._eval(K.curve_slope, t)

    @property
    def t_first(self) -> float:
        return self.domain[0]

    @property
    def t_last(self) -> float:
        return self.domain[1]

    def with_low_fit(self, flag: bool) -> "FittedCurve":
        return FittedCurve(self.family, self.params, self.r2, self.r2_adjusted,
                           self.domain, self.sse, flag, self.n_points)


def r_squared(y: np.ndarray, fitted: np.ndarray) -> tuple[float, float]:
    """Return ``(r2, sse)``; r2 is nan for a constant series with residuals."""
    resid = y - fitted
    sse = float(np.dot(resid, resid))
    dev = y - y.mean()
    sst = float(np.dot(dev, dev))
    if sst == 0.0:
        return (1.0 if sse == 0.0 else math.nan), sse
    return 1.0 - sse / sst, sse


def adjusted_r2(r2: float, n: int, p: int) -> float:
    # p counts every free parameter, intercept included
    if n - p <= 0:
        return -math.inf
    return 1.0 - (1.0 - r2) * (n - 1) / (n - p)


def parameter_bounds(family: CurveFamily, t: np.ndarray, y: np.ndarray):
    """Box bounds and log-scale mask for the nonlinear families."""
    t0, t1 = float(t[0]), float(t[-1])
    span = t1 - t0
    ymax = float(np.max(y))
    eps = 1e-9 * ymax + 1e-12
    k_lo, k_hi = ymax, 10.0 * ymax + eps
    rate = (1e-3 / span, 30.0 / span)
    shift = (t0 - span, t1 + span)
    tag = family.tag
    if tag == "Logistic":
        b = [(k_lo, k_hi), rate, shift]
        logs = [True, True, False]
    elif tag == "Gompertz":
        b = [(k_lo, k_hi), (1e-6, 1e3), rate]
        logs = [True, True, True]
    elif tag == "Bass":
        b = [(k_lo, k_hi), (1e-5 / span, 30.0 / span), (1e-5 / span, 30.0 / span)]
        logs = [True, True, True]
    elif tag == "GeneralizedRichards":
        b = [(k_lo, k_hi), rate, shift, (0.02, 50.0)]
        logs = [True, True, False, True]
    elif tag == "CumulativeNormal":
        b = [(k_lo, k_hi), shift, (span / 200.0, 10.0 * span)]
        logs = [True, False, True]
    elif tag == "Exponential":
        b = [(1e-12 * (ymax + 1.0), k_hi), rate]
        logs = [True, True]
    elif tag == "Bertalanffy":
        b = [(k_lo, k_hi), rate, shift]
        logs = [True, True, False]
    else:
        raise ValueError(f"{family} has no iterative bounds")
    lo = np.array([x[0] for x in b], dtype=np.float64)
    hi = np.array([x[1] for x in b], dtype=np.float64)
    return lo, hi, np.array(logs)


@lru_cache(maxsize=None)
def _unit_seeds(dim: int) -> np.ndarray:
    # first Halton point is the origin corner; skip it
    pts = qmc.Halton(d=dim, scramble=False).random(N_STARTS + 1)[1:]
    pts.setflags(write=False)
    return pts


def start_points(lo: np.ndarray, hi: np.ndarray, logs: np.ndarray) -> np.ndarray:
    """Deterministic multi-start seeds spread over the bounds box."""
    u = _unit_seeds(lo.shape[0])
    seeds = np.empty_like(u)
    for k in range(lo.shape[0]):
        if logs[k] and lo[k] > 0.0:
            seeds[:, k] = lo[k] * np.exp(u[:, k] * math.log(hi[k] / lo[k]))
        else:
            seeds[:, k] = lo[k] + u[:, k] * (hi[k] - lo[k])
    return np.ascontiguousarray(seeds)


def _linear_in_params(t, y, family):
    deg = 1 if family.tag == "Linear" else family.degree
    if np.all(y == y[0]):
        coef = np.zeros(deg + 1)
        coef[0] = y[0]
        return coef
    with warnings.catch_warnings():
        # high degrees on few points are ill-conditioned but still least squares
        warnings.simplefilter("ignore", np.exceptions.RankWarning)
        return np.polynomial.polynomial.polyfit(t, y, deg)


def fit_family(t, values, family: CurveFamily) -> Optional[FittedCurve]:
    """Least-squares fit of one family; ``None`` when the fit fails.

    Failure covers too few points, non-convergence of every start, and a
    constant series that the family cannot reproduce exactly.
    """
    t = np.ascontiguousarray(getattr(t, "points", t), dtype=np.float64)
    y = np.ascontiguousarray(values, dtype=np.float64)
    n = t.shape[0]
    p_count = family.parameter_count
    if n < p_count or (family.tag == "Polynomial" and n < family.degree + 1):
        return None
    if family.is_linear_in_params:
        params = _linear_in_params(t, y, family)
    else:
        lo, hi, logs = parameter_bounds(family, t, y)
        seeds = start_points(lo, hi, logs)
        params, sse, n_ok = K.fit_multistart(family.code, seeds, lo, hi, t, y, MAX_ITER, XTOL)
        if n_ok == 0:
            return None
    fitted = K.curve_value(family.code, np.ascontiguousarray(params), t)
    if not np.all(np.isfinite(fitted)):
        return None
    r2, sse = r_squared(y, fitted)
    if math.isnan(r2):
        return None
    return FittedCurve(family, params, r2, adjusted_r2(r2, n, p_count),
                       (float(t[0]), float(t[-1])), sse, False, n)


def _better(a: FittedCurve, b: FittedCurve, key) -> bool:
    """True when ``a`` beats ``b``: higher score, then fewer params, then
    earlier family order (and lower degree)."""
    ka, kb = key(a), key(b)
    if ka > kb + TIE_TOL:
        return True
    if kb > ka + TIE_TOL:
        return False
    ra = (a.family.parameter_count, a.family.order, a.family.degree or 0)
    rb = (b.family.parameter_count, b.family.order, b.family.degree or 0)
    return ra < rb


def select_best_curve(t, values, r2_min: float = R2_MIN, mode: str = "adjusted",
                      families: Optional[Sequence[CurveFamily]] = None) -> FittedCurve:
    """Fit every admissible family and pick the best.

    Families with r2 > ``r2_min`` are admitted and ranked by adjusted R^2
    (``mode="adjusted"``) or plain R^2 (``mode="plain"``).  When nothing is
    admitted the highest-r2 fit is returned with ``low_fit=True``.
    """
    if mode not in ("adjusted", "plain"):
        raise ValueError(f"selection mode must be 'adjusted' or 'plain', got {mode!r}")
    t = np.asarray(getattr(t, "points", t), dtype=np.float64)
    if t.shape[0] < 3:
        raise ValueError("need at least 3 time points")
    fams = candidate_families(t.shape[0]) if families is None else list(families)
    fits = [f for f in (fit_family(t, values, fam) for fam in fams) if f is not None]
    if not fits:
        raise FitError("every curve family failed to fit")
    score = (lambda c: c.r2_adjusted) if mode == "adjusted" else (lambda c: c.r2)
    admitted = [c for c in fits if c.r2 > r2_min]
    pool, key, low = (admitted, score, False) if admitted else (fits, lambda c: c.r2, True)
    best = pool[0]
    for c in pool[1:]:
        if _better(c, best, key):
            best = c
    return best.with_low_fit(low) if low else best
