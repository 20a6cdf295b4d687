"""
Goodness-of-fit statistics as sums of per-cell contributions.

Keeping every statistic cellwise lets the chain update it from the four
cells a move touches.
"""

import math
from typing import Sequence

import numpy as np
from scipy.special import xlogy

from .config.schema import StatisticName

# T(x) >= T(x_obs) is tested as T(x) >= T(x_obs) - TIE_SLACK
TIE_SLACK = 1e-9


def cell_contributions(counts, fitted, statistic: StatisticName = StatisticName.PEARSON) -> np.ndarray:
    """
    Per-cell terms of the statistic; cells with a zero fitted value add nothing.

    counts may be one table (shape (q,)) or a stack of tables (shape (n, q)).
    """
    statistic = StatisticName(statistic)
    x = np.asarray(counts, dtype=float)
    m = np.broadcast_to(np.asarray(fitted, dtype=float), x.shape)
    positive = m > 0
    out = np.zeros_like(x)
    if statistic is StatisticName.PEARSON:
        np.divide((x - m) ** 2, m, out=out, where=positive)
    elif statistic is StatisticName.LIKELIHOOD_RATIO:
        ratio = np.ones_like(x)
        np.divide(x, m, out=ratio, where=positive & (x > 0))
        out = 2.0 * xlogy(x, ratio)
    return out


def statistic_value(counts, fitted, statistic: StatisticName = StatisticName.PEARSON) -> float:
    return float(cell_contributions(counts, fitted, statistic).sum(axis=-1))


def statistic_values(members, fitted, statistic: StatisticName = StatisticName.PEARSON) -> np.ndarray:
    """The statistic for every row of a (n, q) array of tables."""
    return cell_contributions(np.atleast_2d(members), fitted, statistic).sum(axis=1)


class CellwiseStatistic:
    """Scalar per-cell contribution, used inside the sampling loop."""

    def __init__(self, fitted: Sequence[float], statistic: StatisticName):
        self.fitted = [float(m) for m in fitted]
        self.statistic = StatisticName(statistic)

    def contribution(self, k: int, value: int) -> float:
        m = self.fitted[k]
        if m <= 0:
            return 0.0
        if self.statistic is StatisticName.PEARSON:
            return (value - m) ** 2 / m
        if self.statistic is StatisticName.LIKELIHOOD_RATIO:
            return 2.0 * value * math.log(value / m) if value > 0 else 0.0
        return 0.0

    def total(self, counts: Sequence[int]) -> float:
        return sum(self.contribution(k, v) for k, v in enumerate(counts))
