"""Descriptive moments and the paired Wilcoxon signed-rank test."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr
from scipy.stats import rankdata

from . import kernels as K

EXACT_MAX_N = 25
MIN_N = 5


@dataclass(frozen=True)
class MomentSummary:
    n: int
    mean: float
    median: float
    sd: float
    excess_kurtosis: float
    skewness: float


def moments(values: Sequence[float]) -> MomentSummary:
    """Mean, median, population SD, Fisher-Pearson skewness and excess
    kurtosis.  A constant sample reports skewness and kurtosis as 0."""
    x = np.asarray(values, dtype=np.float64)
    n = x.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 values, got {n}")
    mean = float(x.mean())
    dev = x - mean
    m2 = float(np.mean(dev ** 2))
    if m2 == 0.0:
        return MomentSummary(n, mean, float(np.median(x)), 0.0, 0.0, 0.0)
    m3 = float(np.mean(dev ** 3))
    m4 = float(np.mean(dev ** 4))
    return MomentSummary(n, mean, float(np.median(x)), math.sqrt(m2),
                         m4 / m2 ** 2 - 3.0, m3 / m2 ** 1.5)


@dataclass(frozen=True)
class WilcoxonResult:
    n: int
    n_zero: int
    statistic: Optional[float]
    t_plus: Optional[float]
    t_minus: Optional[float]
    p_value: Optional[float]
    method: str
    note: str = ""

    @property
    def degenerate(self) -> bool:
        return self.statistic is None


def _exact_p(ranks: np.ndarray, w: float) -> float:
    doubled = np.rint(2.0 * ranks).astype(np.int64)
    counts = K.signed_rank_null_counts(doubled)
    cdf = counts[: int(round(2.0 * w)) + 1].sum() / counts.sum()
    return min(1.0, 2.0 * cdf)


def _normal_p(ranks: np.ndarray, w: float) -> float:
    n = ranks.shape[0]
    mu = n * (n + 1) / 4.0
    _, ties = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(ties ** 3 - ties)) / 48.0
    if var <= 0:
        return 1.0
    z = max(abs(w - mu) - 0.5, 0.0) / math.sqrt(var)
    return min(1.0, 2.0 * float(ndtr(-z)))


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float],
                         method: str = "auto") -> WilcoxonResult:
    """Two-sided paired signed-rank test of ``a - b``.

    Zero differences are dropped, ties get mid-ranks, W is the smaller of the
    positive and negative rank sums.  ``method="auto"`` enumerates the exact
    null distribution for n <= 25 and otherwise uses the normal
    approximation with tie and continuity corrections.
    """
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("paired samples must have equal length")
    d = x - y
    nz = d != 0
    n = int(nz.sum())
    n_zero = int(d.shape[0] - n)
    if n == 0:
        return WilcoxonResult(0, n_zero, None, None, None, None, "none",
                              "no nonzero differences")
    if n < MIN_N:
        raise ValueError(f"need at least {MIN_N} nonzero differences, got {n}")
    d = d[nz]
    ranks = rankdata(np.abs(d))
    t_plus = float(ranks[d > 0].sum())
    t_minus = float(ranks[d < 0].sum())
    w = min(t_plus, t_minus)
    if method == "auto":
        method = "exact" if n <= EXACT_MAX_N else "normal"
    if method == "exact":
        p = _exact_p(ranks, w)
    elif method == "normal":
        p = _normal_p(ranks, w)
    else:
        raise ValueError(f"unknown method {method!r}")
    return WilcoxonResult(n, n_zero, w, t_plus, t_minus, p, method)
