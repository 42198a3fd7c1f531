"""Estimator helpers: standard errors, KS distance, simple gates.

Every Monte Carlo statistic reports a standard error computed from the
independent replicas; no gate is tighter than a few standard errors.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr


def mean_stderr(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else math.nan


def variance_stderr(x: np.ndarray) -> tuple[float, float]:
    """Sample variance and its standard error from the fourth central moment."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    v = float(x.var(ddof=1))
    m4 = float(np.mean((x - x.mean()) ** 4))
    se = math.sqrt(max(m4 - (n - 3) / (n - 1) * v * v, 0.0) / n)
    return v, se


def ks_distance_normal(x: np.ndarray, mu: float | None = None, sigma: float | None = None) -> float:
    """sup |ECDF - Phi((x-mu)/sigma)|; parameters fitted when omitted."""
    x = np.sort(np.asarray(x, dtype=np.float64))
    if mu is None:
        mu = float(x.mean())
    if sigma is None:
        sigma = float(x.std(ddof=1))
    if sigma <= 0:
        raise ValueError("need a positive scale")
    f = ndtr((x - mu) / sigma)
    n = x.size
    up = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    return float(max(np.max(up - f), np.max(f - lo)))


def percentile(x: np.ndarray, q: float) -> float:
    return float(np.percentile(np.asarray(x, dtype=np.float64), q))


def strictly_decreasing(values) -> bool:
    return all(a > b for a, b in zip(values, values[1:]))


def non_increasing(values) -> bool:
    return all(a >= b for a, b in zip(values, values[1:]))


def monotone_approach(values, target: float) -> bool:
    """|v_k - target| strictly decreasing along the ladder."""
    gaps = [abs(v - target) for v in values]
    return strictly_decreasing(gaps)
