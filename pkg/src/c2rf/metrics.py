"""Classification metrics, method deltas, and run-time ECDF curves."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class Confusion:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def confusion(predicted, truth) -> Confusion:
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape or predicted.size == 0:
        raise ValueError("predicted and truth must be equal-length, nonempty")
    tp = int(np.sum((predicted == 1) & (truth == 1)))
    tn = int(np.sum((predicted == -1) & (truth == -1)))
    fp = int(np.sum((predicted == 1) & (truth == -1)))
    fn = int(np.sum((predicted == -1) & (truth == 1)))
    return Confusion(tp, tn, fp, fn)


def accuracy(c: Confusion) -> float:
    """Correctly classified fraction, (tp + tn) / total."""
    if c.total == 0:
        raise ValueError("empty confusion")
    return (c.tp + c.tn) / c.total


def mcc(c: Confusion) -> float:
    """Matthews correlation coefficient in [-1, 1].

    When any marginal is empty (a constant predictor or single-class truth)
    the denominator vanishes; 0 is returned by convention.
    """
    if c.total == 0:
        raise ValueError("empty confusion")
    denom = ((c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn))
    if denom == 0:
        return 0.0
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(denom)


def paper_scale(value: float, metric: str) -> float:
    """Percentage display: accuracy as 100*AC, MCC as 100*(MCC+1)/2
    (a degenerate classifier shows as 50.0)."""
    if metric == "accuracy":
        return 100.0 * value
    if metric == "mcc":
        return 100.0 * (value + 1.0) / 2.0
    raise ValueError(f"unknown metric {metric!r}")


def deltas(a, b):
    """Elementwise metric differences (a - b); positive means a is better."""
    return tuple(x - y for x, y in zip(a, b))


def ecdf(times, limit: float):
    """Solved-fraction curve: breakpoints (sigma, gamma) with
    gamma(sigma) = |{p : t_p <= sigma}| / |P|, times above `limit` never
    counting as solved.  Nondecreasing, right-continuous, bounded by the
    solved fraction."""
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise ValueError("empty time vector")
    if np.any(times < 0):
        raise ValueError("negative run time")
    total = times.size
    solved = np.sort(times[times <= limit])
    points = []
    for sigma in np.unique(solved):
        points.append((float(sigma), float(np.sum(solved <= sigma) / total)))
    return points


def ecdf_value(points, sigma: float) -> float:
    """Evaluate an ecdf breakpoint list at sigma."""
    value = 0.0
    for s, g in points:
        if s <= sigma:
            value = g
        else:
            break
    return value
