"""
Exhaustive fiber enumeration and the Markov basis oracles built on it.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.special import gammaln, logsumexp

from .basis import Move, is_move
from .config.schema import StatisticName
from .exceptions import CapExceededError, DimensionMismatchError
from .model import ConfigMatrix, SuffStat, Table
from .statistics import TIE_SLACK, statistic_value, statistic_values

logger = logging.getLogger(__name__)

DEFAULT_CAP = 1_000_000


class Fiber(BaseModel):
    """All nonnegative integer tables x with A x = t, in lexicographic order."""
    model_config = ConfigDict(frozen=True)

    matrix: ConfigMatrix
    statistic: SuffStat
    members: Tuple[Tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, counts: object) -> bool:
        return tuple(counts) in set(self.members)

    def tables(self) -> List[Table]:
        shape = self.matrix.table_shape()
        return [Table(shape=shape, counts=member) for member in self.members]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.members, dtype=np.int64).reshape(len(self.members), self.matrix.q)


class Connectivity(BaseModel):
    connected: bool
    components: int


def enumerate_fiber(
    matrix: ConfigMatrix,
    statistic: SuffStat,
    cap: int = DEFAULT_CAP,
    order: Optional[Sequence[int]] = None,
) -> Fiber:
    """
    Depth-first search over the cells with row, column and block budgets.

    The last cell of a row, column or block in the visiting order is
    forced to its remaining budget.

    Args:
        matrix: Configuration matrix A.
        statistic: Target t.
        cap: Largest fiber that may be returned.
        order: Visiting order as a permutation of cell positions
            (defaults to cell order).

    Raises:
        InconsistentStatisticError: If t cannot come from any table.
        CapExceededError: If the fiber has more than cap members.
    """
    if len(statistic.row_sums) != matrix.n_table_rows or len(statistic.col_sums) != matrix.n_table_cols:
        raise DimensionMismatchError(len(matrix.rows), len(statistic.as_vector()))
    statistic.check_consistent()

    q = matrix.q
    order = list(range(q)) if order is None else list(order)
    if sorted(order) != list(range(q)):
        raise ValueError("order must be a permutation of the cell positions")

    n_rows, n_cols = matrix.n_table_rows, matrix.n_table_cols
    # budget slots: rows, then columns, then the B block and its complement
    slots = [
        (i - 1, n_rows + j - 1, n_rows + n_cols + (0 if in_b else 1))
        for (i, j), in_b in zip(matrix.cell_order, matrix.subtable_row)
    ]
    budget = list(statistic.row_sums) + list(statistic.col_sums)
    budget += [statistic.subtable_sum, statistic.total - statistic.subtable_sum]

    remaining_cells = [0] * len(budget)
    for k in order:
        for s in slots[k]:
            remaining_cells[s] += 1
    if any(b > 0 and c == 0 for b, c in zip(budget, remaining_cells)):
        logger.debug("A positive total has no cells to hold it; the fiber is empty")
        return Fiber(matrix=matrix, statistic=statistic, members=())

    # a cell is forced when it is the last visited cell of one of its slots
    seen = [0] * len(budget)
    forced: List[Tuple[int, ...]] = [()] * q
    for k in order:
        last = []
        for s in slots[k]:
            seen[s] += 1
            if seen[s] == remaining_cells[s]:
                last.append(s)
        forced[k] = tuple(last)

    members: List[Tuple[int, ...]] = []
    x = [0] * q

    def search(depth: int) -> None:
        if depth == q:
            if len(members) >= cap:
                raise CapExceededError(len(members), cap)
            members.append(tuple(x))
            return
        k = order[depth]
        s_row, s_col, s_blk = slots[k]
        upper = min(budget[s_row], budget[s_col], budget[s_blk])
        if forced[k]:
            values = {budget[s] for s in forced[k]}
            if len(values) != 1:
                return
            (value,) = values
            if value > upper:
                return
            candidates = (value,)
        else:
            candidates = range(upper + 1)
        for v in candidates:
            x[k] = v
            budget[s_row] -= v
            budget[s_col] -= v
            budget[s_blk] -= v
            search(depth + 1)
            budget[s_row] += v
            budget[s_col] += v
            budget[s_blk] += v
        x[k] = 0

    search(0)
    logger.debug(f"Enumerated fiber with {len(members)} members")
    return Fiber(matrix=matrix, statistic=statistic, members=tuple(sorted(members)))


def connectivity_check(fiber: Fiber, basis: Sequence[Move]) -> Connectivity:
    """Connected components of the graph x ~ x +/- z, z in the basis."""
    n = len(fiber)
    if n == 0:
        return Connectivity(connected=True, components=0)

    shape = fiber.matrix.table_shape()
    position = {member: k for k, member in enumerate(fiber.members)}
    members = fiber.as_array()
    heads, tails = [], []
    for move in basis:
        z = np.asarray(move.to_vector(shape), dtype=np.int64)
        for k, neighbour in enumerate(members + z):
            target = position.get(tuple(int(v) for v in neighbour))
            if target is not None:
                heads.append(k)
                tails.append(target)

    graph = coo_matrix((np.ones(len(heads)), (heads, tails)), shape=(n, n))
    components, _ = connected_components(graph, directed=False)
    return Connectivity(connected=components == 1, components=int(components))


def indispensability_check(matrix: ConfigMatrix, move: Move) -> bool:
    """True iff the fiber through the positive part of the move is {z+, z-}."""
    shape = matrix.table_shape()
    if not is_move(matrix, move.to_vector(shape)):
        logger.info(f"{move.label} is not a move for this configuration")
        return False
    target = SuffStat.from_vector(
        matrix.dot(move.positive_part(shape)), matrix.n_table_rows, matrix.n_table_cols
    )
    try:
        fiber = enumerate_fiber(matrix, target, cap=2)
    except CapExceededError:
        return False
    return len(fiber) == 2


def null_distribution(fiber: Fiber) -> np.ndarray:
    """f(x | t) proportional to the product of 1 / x_ij! over the members."""
    if len(fiber) == 0:
        return np.zeros(0)
    log_weights = -gammaln(fiber.as_array() + 1.0).sum(axis=1)
    return np.exp(log_weights - logsumexp(log_weights))


def exact_p_value(
    fiber: Fiber,
    fitted: Sequence[float],
    observed: Sequence[int],
    statistic: StatisticName = StatisticName.PEARSON,
) -> float:
    """Sum of f(x | t) over members whose statistic is at least the observed one."""
    observed_value = statistic_value(observed, fitted, statistic)
    values = statistic_values(fiber.as_array(), fitted, statistic)
    probabilities = null_distribution(fiber)
    return float(probabilities[values >= observed_value - TIE_SLACK].sum())
