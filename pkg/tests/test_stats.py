import math

import numpy as np
import pytest
from scipy import stats as sps

from polymer2d.stats import (
    ks_distance_normal,
    mean_stderr,
    monotone_approach,
    non_increasing,
    percentile,
    strictly_decreasing,
    variance_stderr,
)


def test_mean_stderr():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    m, se = mean_stderr(x)
    assert m == 2.5
    assert se == pytest.approx(x.std(ddof=1) / 2.0)


def test_variance_stderr_gaussian():
    rng = np.random.default_rng(7)
    x = rng.normal(0.0, 2.0, size=40_000)
    v, se = variance_stderr(x)
    # for a normal, SE(s^2) ~ s^2 sqrt(2/n)
    assert v == pytest.approx(4.0, rel=0.05)
    assert se == pytest.approx(4.0 * math.sqrt(2.0 / x.size), rel=0.1)


def test_ks_distance_matches_scipy_fixed_params():
    rng = np.random.default_rng(3)
    x = rng.normal(0.3, 1.4, size=5000)
    ours = ks_distance_normal(x, 0.3, 1.4)
    ref = sps.kstest(x, "norm", args=(0.3, 1.4)).statistic
    assert ours == pytest.approx(ref, abs=1e-12)


def test_ks_distance_detects_mismatch():
    rng = np.random.default_rng(4)
    x = rng.exponential(1.0, size=4000)
    assert ks_distance_normal(x) > 0.05


def test_trend_helpers():
    assert strictly_decreasing([3, 2, 1])
    assert not strictly_decreasing([3, 3, 1])
    assert non_increasing([3, 3, 1])
    assert monotone_approach([0.5, 0.8, 0.9], 1.0)
    assert monotone_approach([0.5, 1.4, 0.99], 1.0)  # overshoot still shrinks the gap
    assert not monotone_approach([0.5, 0.9, 0.7], 1.0)
    assert percentile(np.arange(101), 95) == 95.0
