"""
Maximum-likelihood fit of the change-point model by iterative proportional scaling.
"""

import logging
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.special import gammaincc, xlogy

from .exceptions import NoConvergenceError, ShapeMismatchError
from .model import (
    LadderShape,
    Subtable,
    Table,
    configuration_matrix,
    degrees_of_freedom,
)
from .statistics import statistic_value

logger = logging.getLogger(__name__)


class FitResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    shape: LadderShape
    fitted: Tuple[float, ...]
    chi_square: float
    df: int
    asymptotic_p: float
    iterations: int
    residual: float
    loglik_trace: Tuple[float, ...] = ()

    def fitted_array(self) -> np.ndarray:
        return np.asarray(self.fitted, dtype=float)

    def __getitem__(self, cell) -> float:
        return self.fitted[self.shape.index(cell)]


def _margin_groups(table: Table, subtable: Subtable) -> List[Tuple[np.ndarray, float]]:
    """(mask, observed total) for rows, columns and the two subtable blocks."""
    shape = table.shape
    rows = np.array([i for i, _ in shape.cells])
    cols = np.array([j for _, j in shape.cells])
    in_b = np.array(subtable.indicator(), dtype=bool)
    x = table.as_array()

    groups = [(rows == i, float(x[rows == i].sum())) for i in range(1, shape.n_rows + 1)]
    groups += [(cols == j, float(x[cols == j].sum())) for j in range(1, shape.n_cols + 1)]
    for block in (in_b, ~in_b):
        if block.any():
            groups.append((block, float(x[block].sum())))
    return groups


def poisson_loglik(counts: np.ndarray, fitted: np.ndarray) -> float:
    """Kernel of the Poisson log-likelihood, sum of x log m - m."""
    return float(np.sum(xlogy(counts, fitted) - fitted))


def fit_mle(
    table: Table,
    subtable: Subtable,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    trace: bool = False,
) -> FitResult:
    """
    Fit log m_ij = a_i + b_j + c * 1_B(i, j) by iterative proportional scaling.

    Starts from m = 1 on S and cycles through row, column and block
    scalings until the largest margin residual drops below tol.

    Args:
        table: Observed counts.
        subtable: The subtable B.
        tol: Absolute tolerance on the margin residuals.
        max_iter: Maximum number of full cycles.
        trace: Record the Poisson log-likelihood after every cycle.

    Returns:
        FitResult with fitted means, Pearson chi-square, df and asymptotic p.

    Raises:
        NoConvergenceError: If max_iter cycles do not reach tol.
    """
    shape = table.shape
    if subtable.shape != shape:
        raise ShapeMismatchError("subtable was built for a different table shape")

    x = table.as_array().astype(float)
    n = float(x.sum())
    groups = _margin_groups(table, subtable)
    m = np.ones(shape.q)

    for mask, target in groups:
        if target == 0:
            m[mask] = 0.0

    x_b = float(x[np.array(subtable.indicator(), dtype=bool)].sum())
    if (len(subtable) and x_b == 0) or (len(subtable) < shape.q and x_b == n):
        logger.warning(
            f"Degenerate subtable block (x_B = {x_b:g}, n = {n:g}); "
            f"the empty block is fitted as zero"
        )

    loglik_trace: List[float] = []
    residual = float("inf")
    iterations = 0
    while iterations < max_iter:
        iterations += 1
        for mask, target in groups:
            current = m[mask].sum()
            if current > 0:
                m[mask] *= target / current
        residual = max(abs(m[mask].sum() - target) for mask, target in groups)
        if trace:
            loglik_trace.append(poisson_loglik(x, m))
            logger.debug(f"cycle {iterations}: loglik {loglik_trace[-1]:.12g}, residual {residual:.3e}")
        if residual < tol:
            break
    else:
        raise NoConvergenceError(residual, iterations)

    logger.info(f"Iterative scaling converged after {iterations} cycles (residual {residual:.3e})")

    df = degrees_of_freedom(configuration_matrix(shape, subtable))
    chi_square = statistic_value(x, m)
    return FitResult(
        shape=shape,
        fitted=tuple(float(v) for v in m),
        chi_square=chi_square,
        df=df,
        asymptotic_p=chi_square_survival(chi_square, df) if df > 0 else 1.0,
        iterations=iterations,
        residual=float(residual),
        loglik_trace=tuple(loglik_trace),
    )


def pearson_chi_square(table: Table, fit: FitResult) -> float:
    """Sum of (x - m)^2 / m over cells with m > 0."""
    if table.shape != fit.shape:
        raise ShapeMismatchError("table and fit have different shapes")
    return statistic_value(table.as_array(), fit.fitted_array())


def chi_square_survival(x: float, df: int) -> float:
    """Upper tail of the chi-square law, the regularized gamma Q(df/2, x/2)."""
    if x < 0:
        raise ValueError(f"chi-square value must be nonnegative, got {x}")
    if df < 1:
        raise ValueError(f"degrees of freedom must be positive, got {df}")
    return float(gammaincc(df / 2.0, x / 2.0))
