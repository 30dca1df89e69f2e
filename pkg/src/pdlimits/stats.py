"""Small statistical helpers shared by the experiment suites."""
from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy import stats as _st

__all__ = ["mean_se", "sample_skewness", "ks_one_sample", "ks_two_sample", "var_se", "ols_slope"]


def mean_se(x) -> tuple[float, float]:
    """Sample mean and its standard error (ddof = 1)."""
    x = np.asarray(x, dtype=float)
    return float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(len(x)))


def var_se(x) -> tuple[float, float]:
    """Sample variance and the large-sample standard error sqrt((m4 - s^4) / n)."""
    x = np.asarray(x, dtype=float)
    d = x - x.mean()
    s2 = float(np.mean(d ** 2))
    m4 = float(np.mean(d ** 4))
    return float(np.var(x, ddof=1)), math.sqrt(max(m4 - s2 * s2, 0.0) / len(x))


def sample_skewness(x) -> float:
    """Moment skewness m3 / m2^(3/2) (biased form)."""
    return float(_st.skew(np.asarray(x, dtype=float), bias=True))


def ks_one_sample(x, cdf: Callable) -> tuple[float, float]:
    r = _st.kstest(np.asarray(x, dtype=float), cdf)
    return float(r.statistic), float(r.pvalue)


def ks_two_sample(x, y) -> tuple[float, float]:
    r = _st.ks_2samp(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return float(r.statistic), float(r.pvalue)


def ols_slope(x, y) -> tuple[float, float]:
    """Least-squares slope and intercept of y on x."""
    r = _st.linregress(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return float(r.slope), float(r.intercept)
