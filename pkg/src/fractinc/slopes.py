"""Least-squares slope fitting on log-log axes, used by every scaling experiment."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats


@dataclass
class SlopeFit:
    """Result of a log2-log2 linear fit of values against scales."""

    scales: np.ndarray
    values: np.ndarray
    slope: float
    intercept: float
    r_squared: float
    stderr: float = 0.0

    def predicted(self) -> np.ndarray:
        return 2.0 ** (self.intercept + self.slope * np.log2(self.scales))

    def matches(self, target: float, tol: float) -> bool:
        return abs(self.slope - target) <= tol


def fit_loglog_slope(pairs) -> SlopeFit:
    """Fit log2(value) = slope * log2(scale) + intercept by least squares.

    `pairs` is an iterable of (scale, value); scales and values must be
    positive, and at least two distinct scales are required.
    """
    arr = np.array([(float(a), float(b)) for a, b in pairs], dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 2:
        raise ValueError("need at least two (scale, value) pairs")
    scales, values = arr[:, 0], arr[:, 1]
    if np.any(scales <= 0) or np.any(values <= 0):
        raise ValueError("scales and values must be positive for a log-log fit")
    if np.unique(scales).size < 2:
        raise ValueError("scales must not be all equal")
    x, y = np.log2(scales), np.log2(values)
    res = stats.linregress(x, y)
    ss_res = float(np.sum((y - (res.intercept + res.slope * x)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    stderr = float(res.stderr) if math.isfinite(res.stderr) else 0.0
    return SlopeFit(scales=scales, values=values, slope=float(res.slope),
                    intercept=float(res.intercept), r_squared=r2, stderr=stderr)
