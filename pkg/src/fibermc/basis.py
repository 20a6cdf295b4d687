"""
Square-free degree-2 moves and the unique minimal Markov basis.
"""

import logging
from typing import Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, model_validator

from .exceptions import DimensionMismatchError
from .lattice import build_lattice, incomparable_pairs, pair_to_move, require_ideal
from .model import Cell, ConfigMatrix, LadderShape, Subtable, Table

logger = logging.getLogger(__name__)


class Move(BaseModel):
    """
    Basic move z(i1, i2; j1, j2): +1 at (i1, j1) and (i2, j2), -1 at
    (i1, j2) and (i2, j1).
    """
    model_config = ConfigDict(frozen=True)

    i1: int
    i2: int
    j1: int
    j2: int

    @model_validator(mode="after")
    def _check_order(self) -> "Move":
        if not (self.i1 < self.i2 and self.j1 < self.j2):
            raise ValueError(f"move needs i1 < i2 and j1 < j2, got {self.key}")
        return self

    @property
    def key(self) -> Tuple[int, int, int, int]:
        return self.i1, self.i2, self.j1, self.j2

    @property
    def label(self) -> str:
        return f"z({self.i1},{self.i2};{self.j1},{self.j2})"

    def __str__(self) -> str:
        return self.label

    @property
    def positive_cells(self) -> Tuple[Cell, Cell]:
        return (self.i1, self.j1), (self.i2, self.j2)

    @property
    def negative_cells(self) -> Tuple[Cell, Cell]:
        return (self.i1, self.j2), (self.i2, self.j1)

    @property
    def cells(self) -> Tuple[Cell, Cell, Cell, Cell]:
        return self.positive_cells + self.negative_cells

    def sparse(self) -> Dict[Cell, int]:
        entries = {cell: 1 for cell in self.positive_cells}
        entries.update({cell: -1 for cell in self.negative_cells})
        return entries

    def indices(self, shape: LadderShape) -> Tuple[int, int, int, int]:
        """Cell-order positions: two positive cells, then two negative cells."""
        return tuple(shape.index(cell) for cell in self.cells)

    def to_vector(self, shape: LadderShape) -> Tuple[int, ...]:
        vector = [0] * shape.q
        for cell, coefficient in self.sparse().items():
            vector[shape.index(cell)] = coefficient
        return tuple(vector)

    def positive_part(self, shape: LadderShape) -> Tuple[int, ...]:
        return tuple(max(v, 0) for v in self.to_vector(shape))

    def negative_part(self, shape: LadderShape) -> Tuple[int, ...]:
        return tuple(max(-v, 0) for v in self.to_vector(shape))


def _minors(shape: LadderShape):
    """Every 2x2 minor with all four cells in S, in (i1, i2, j1, j2) order."""
    for i1 in range(1, shape.n_rows + 1):
        for i2 in range(i1 + 1, shape.n_rows + 1):
            lo = max(shape.lower[i1 - 1], shape.lower[i2 - 1])
            hi = min(shape.upper[i1 - 1], shape.upper[i2 - 1])
            for j1 in range(lo, hi + 1):
                for j2 in range(j1 + 1, hi + 1):
                    yield Move(i1=i1, i2=i2, j1=j1, j2=j2)


def _preserves_subtable_sum(move: Move, subtable: Subtable) -> bool:
    (a, d), (b, c) = move.positive_cells, move.negative_cells
    # a = (i1, j1), b = (i1, j2), c = (i2, j1), d = (i2, j2)
    pattern = (a in subtable, b in subtable, c in subtable, d in subtable)
    return pattern in {
        (True, True, True, True),
        (False, False, False, False),
        (True, True, False, False),   # top row pair in B
        (True, False, True, False),   # left column pair in B
    }


def generate_markov_basis(shape: LadderShape, subtable: Subtable) -> List[Move]:
    """
    The unique minimal Markov basis for a poset-ideal subtable, ordered
    lexicographically by (i1, i2, j1, j2).

    Raises:
        NotAnIdealError: if B is not downward closed.
    """
    require_ideal(build_lattice(shape), subtable)
    moves = [move for move in _minors(shape) if _preserves_subtable_sum(move, subtable)]
    logger.debug(f"Markov basis has {len(moves)} moves ({subtable.describe()})")
    return moves


def kernel_basic_moves(shape: LadderShape, matrix: ConfigMatrix) -> List[Move]:
    """All 2x2 minors z with A z = 0, found by direct multiplication."""
    return [move for move in _minors(shape) if is_move(matrix, move.to_vector(shape))]


def is_move(matrix: ConfigMatrix, vector: Sequence[int]) -> bool:
    if len(vector) != matrix.q:
        raise DimensionMismatchError(matrix.q, len(vector))
    return all(v == 0 for v in matrix.dot(vector))


def apply_move(table: Table, move: Move, sign: int = 1) -> Optional[Table]:
    """x + sign * z, or None when a count would go negative."""
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    counts = list(table.counts)
    for cell, coefficient in move.sparse().items():
        k = table.shape.index(cell)
        counts[k] += sign * coefficient
        if counts[k] < 0:
            return None
    return table.with_counts(counts)


def verify_basis_equals_lattice(shape: LadderShape, subtable: Subtable) -> bool:
    """Compare the moves of the incomparable pairs with the generated basis."""
    lattice = build_lattice(shape)
    from_pairs = [pair_to_move(pair) for pair in incomparable_pairs(lattice, subtable)]
    basis = generate_markov_basis(shape, subtable)

    if len(set(from_pairs)) != len(from_pairs):
        logger.info("Two incomparable pairs map to the same move")
        return False
    missing = set(basis) - set(from_pairs)
    extra = set(from_pairs) - set(basis)
    if missing or extra:
        logger.info(
            f"Basis and pair moves differ: missing {sorted(m.label for m in missing)}, "
            f"extra {sorted(m.label for m in extra)}"
        )
        return False
    return True
