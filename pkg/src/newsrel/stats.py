"""Correlation coefficients and paired t-test with t-distribution p-values.

Only the t-distribution CDF is taken from scipy; coefficients, ranks and
test statistics are computed here.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.special import stdtr


class UndefinedCorrelation(ValueError):
    pass


def _two_sided_t(t: float, df: float) -> float:
    if np.isinf(t):
        return 0.0
    return float(min(1.0, 2.0 * stdtr(df, -abs(t))))


def _pair(x, y, minimum: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError(f"x and y must be 1-d with equal length, got {x.shape} and {y.shape}")
    if x.size < minimum:
        raise ValueError(f"need at least {minimum} pairs, got {x.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("inputs must be finite")
    return x, y


def _correlation_p(r: float, n: int) -> float:
    if abs(r) >= 1.0:
        return 0.0
    t = r * np.sqrt((n - 2) / (1.0 - r * r))
    return _two_sided_t(t, n - 2)


def _pearson_r(x: np.ndarray, y: np.ndarray) -> float:
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelation("correlation is undefined for constant input")
    r = float(dx @ dy) / np.sqrt(sxx * syy)
    return float(np.clip(r, -1.0, 1.0))


def pearson(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Pearson r and its two-sided p-value (t-test with n - 2 dof)."""
    x, y = _pair(x, y, 3)
    r = _pearson_r(x, y)
    return r, _correlation_p(r, x.size)


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the mean of the ranks they span."""
    v = np.asarray(values, dtype=np.float64)
    order = np.argsort(v, kind="mergesort")
    sorted_v = v[order]
    ranks = np.empty(v.size)
    start = 0
    while start < v.size:
        stop = start + 1
        while stop < v.size and sorted_v[stop] == sorted_v[start]:
            stop += 1
        ranks[order[start:stop]] = (start + stop + 1) / 2.0
        start = stop
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Spearman rho (Pearson on average ranks) with t-approximation p-value."""
    x, y = _pair(x, y, 3)
    r = _pearson_r(average_ranks(x), average_ranks(y))
    return r, _correlation_p(r, x.size)


def permutation_pvalue(
    x: Sequence[float],
    y: Sequence[float],
    method: str = "spearman",
    permutations: int = 10_000,
    seed: int = 0,
) -> float:
    """Two-sided permutation p-value for small samples.

    Uses the (count + 1) / (permutations + 1) estimator so it is never 0.
    """
    x, y = _pair(x, y, 3)
    if method == "spearman":
        x, y = average_ranks(x), average_ranks(y)
    elif method != "pearson":
        raise ValueError(f"method must be 'pearson' or 'spearman', got {method!r}")
    observed = abs(_pearson_r(x, y))
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(permutations):
        if abs(_pearson_r(x, rng.permutation(y))) >= observed - 1e-12:
            hits += 1
    return (hits + 1) / (permutations + 1)


def paired_ttest(a: Sequence[float], b: Sequence[float]) -> float:
    """Two-sided p-value of the paired t-test on ``a - b``.

    Constant differences: p = 1 when they are all zero, p = 0 otherwise.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"paired samples must have equal length, got {a.shape} and {b.shape}")
    if a.size < 2:
        raise ValueError("paired t-test needs at least two pairs")
    d = a - b
    mean = d.mean()
    sd = d.std(ddof=1)
    if sd == 0.0:
        return 1.0 if mean == 0.0 else 0.0
    t = mean / (sd / np.sqrt(d.size))
    return _two_sided_t(t, d.size - 1)
