"""
The cells of a ladder table as a planar distributive lattice.

Cells are ordered componentwise; meet and join are componentwise min and
max. The join-irreducible cells split into two chains C and D, and the
incomparable pairs relative to the subtable B index the Markov basis.
"""

import logging
from enum import Enum
from functools import lru_cache
from itertools import combinations
from typing import Dict, FrozenSet, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, PrivateAttr

from .exceptions import NotALatticeError, NotAnIdealError, ShapeMismatchError
from .model import Cell, LadderShape, Subtable, closure_violations

logger = logging.getLogger(__name__)


def leq(a: Cell, b: Cell) -> bool:
    return a[0] <= b[0] and a[1] <= b[1]


def comparable(a: Cell, b: Cell) -> bool:
    return leq(a, b) or leq(b, a)


def meet(a: Cell, b: Cell) -> Cell:
    return min(a[0], b[0]), min(a[1], b[1])


def join(a: Cell, b: Cell) -> Cell:
    return max(a[0], b[0]), max(a[1], b[1])


def _maximal(candidates: List[Cell]) -> List[Cell]:
    return [a for a in candidates if not any(a != b and leq(a, b) for b in candidates)]


def _minimal(candidates: List[Cell]) -> List[Cell]:
    return [a for a in candidates if not any(a != b and leq(b, a) for b in candidates)]


class CellLattice(BaseModel):
    """Cells of S under the componentwise order, with precomputed covers."""
    model_config = ConfigDict(frozen=True)

    shape: LadderShape

    _lower: Dict[Cell, Tuple[Cell, ...]] = PrivateAttr(default_factory=dict)
    _upper: Dict[Cell, Tuple[Cell, ...]] = PrivateAttr(default_factory=dict)

    def model_post_init(self, __context) -> None:
        shape = self.shape
        for i, j in shape.cells:
            below = []
            for r in range(1, i + 1):
                lo, hi = shape.row_interval(r)
                c = j - 1 if r == i else min(j, hi)
                if c >= lo:
                    below.append((r, c))
            above = []
            for r in range(i, shape.n_rows + 1):
                lo, hi = shape.row_interval(r)
                c = j + 1 if r == i else max(j, lo)
                if c <= hi:
                    above.append((r, c))
            # same-row neighbour first
            self._lower[(i, j)] = tuple(sorted(_maximal(below), key=lambda c: (-c[0], c[1])))
            self._upper[(i, j)] = tuple(sorted(_minimal(above)))

    @property
    def elements(self) -> Tuple[Cell, ...]:
        return self.shape.cells

    @property
    def bottom(self) -> Cell:
        return 1, self.shape.lower[0]

    @property
    def top(self) -> Cell:
        return self.shape.n_rows, self.shape.upper[-1]

    def __contains__(self, cell: object) -> bool:
        return cell in self.shape

    def __len__(self) -> int:
        return self.shape.q

    def lower_covers(self, cell: Cell) -> Tuple[Cell, ...]:
        return self._lower[cell]

    def upper_covers(self, cell: Cell) -> Tuple[Cell, ...]:
        return self._upper[cell]

    def meet(self, a: Cell, b: Cell) -> Cell:
        result = meet(a, b)
        if result not in self.shape:
            raise NotALatticeError(f"meet of {a} and {b} is {result}, not a cell")
        return result

    def join(self, a: Cell, b: Cell) -> Cell:
        result = join(a, b)
        if result not in self.shape:
            raise NotALatticeError(f"join of {a} and {b} is {result}, not a cell")
        return result


class JoinIrreducibles(BaseModel):
    """The poset P of join-irreducible cells, split into two chains."""
    model_config = ConfigDict(frozen=True)

    chain_c: Tuple[Cell, ...]
    chain_d: Tuple[Cell, ...]
    pinned: Tuple[Cell, ...] = ()
    planar: bool = True

    @property
    def elements(self) -> Tuple[Cell, ...]:
        return tuple(sorted(self.chain_c + self.chain_d + self.pinned))


class PairClass(str, Enum):
    JOIN_IN_B = "join-in-b"
    MEET_OUT_B = "meet-out-b"
    SPLIT = "split"


class IncomparablePair(BaseModel):
    """
    Two incomparable cells alpha = (i1, j2) and beta = (i2, j1) with
    i1 < i2 and j1 < j2.
    """
    model_config = ConfigDict(frozen=True)

    alpha: Cell
    beta: Cell
    pair_class: PairClass

    @property
    def meet(self) -> Cell:
        return meet(self.alpha, self.beta)

    @property
    def join(self) -> Cell:
        return join(self.alpha, self.beta)

    @property
    def key(self) -> Tuple[int, int, int, int]:
        """(i1, i2, j1, j2) of the corresponding minor."""
        return self.alpha[0], self.beta[0], self.beta[1], self.alpha[1]


class IdealCheck(BaseModel):
    """Result of a downward-closure test; witness is (a in B, b <= a with b outside B)."""
    is_ideal: bool
    witness: Optional[Tuple[Cell, Cell]] = None

    def __bool__(self) -> bool:
        return self.is_ideal


def build_lattice(shape: LadderShape) -> CellLattice:
    """
    Raises:
        NotALatticeError: if componentwise min or max of two cells leaves S.
    """
    problems = closure_violations(shape)
    if problems:
        raise NotALatticeError("; ".join(problems))
    lattice = CellLattice(shape=shape)
    logger.debug(f"Built lattice on {len(lattice)} cells")
    return lattice


def hasse_edges(lattice: CellLattice) -> List[Tuple[Cell, Cell]]:
    """Cover relations (x, y) with x covered by y, in lexicographic order."""
    return sorted((x, y) for x in lattice.elements for y in lattice.upper_covers(x))


def _is_chain(cells: List[Cell]) -> bool:
    return all(comparable(a, b) for a, b in combinations(cells, 2))


def join_irreducibles(lattice: CellLattice) -> JoinIrreducibles:
    """
    Split the join-irreducible cells into two chains.

    A join-irreducible cell whose unique lower cover sits in the previous
    row goes to C, one whose lower cover sits in the previous column goes
    to D. Cells comparable to every other join-irreducible are pinned and
    kept out of both chains.
    """
    irreducibles = [x for x in lattice.elements if len(lattice.lower_covers(x)) == 1]
    pinned = [
        x for x in irreducibles
        if all(comparable(x, y) for y in irreducibles if y != x)
    ]
    core = [x for x in irreducibles if x not in pinned]

    if not core or _is_chain(core):
        logger.warning(
            f"Lattice on {len(lattice)} cells is a chain; "
            f"returning its {len(irreducibles)} join-irreducibles as one chain"
        )
        return JoinIrreducibles(chain_c=tuple(sorted(irreducibles)), chain_d=(), planar=False)

    chain_c = []
    chain_d = []
    for x in core:
        (below,) = lattice.lower_covers(x)
        if below[0] < x[0]:
            chain_c.append(x)
        else:
            chain_d.append(x)
    return JoinIrreducibles(
        chain_c=tuple(sorted(chain_c)),
        chain_d=tuple(sorted(chain_d)),
        pinned=tuple(sorted(pinned)),
    )


def _count_ideals(poset: FrozenSet[Cell]) -> int:
    @lru_cache(maxsize=None)
    def count(remaining: FrozenSet[Cell]) -> int:
        if not remaining:
            return 1
        m = min(remaining)
        # ideals without m avoid everything above it; ideals with m extend ideals of the rest
        above = frozenset(p for p in remaining if leq(m, p))
        return count(remaining - above) + count(remaining - {m})

    return count(poset)


def verify_birkhoff(lattice: CellLattice) -> bool:
    """
    Check that x -> {p in P : p <= x} maps L bijectively onto the poset
    ideals of P and sends covers to one-element extensions.
    """
    poset = frozenset(join_irreducibles(lattice).elements)
    down = {x: frozenset(p for p in poset if leq(p, x)) for x in lattice.elements}

    if len(set(down.values())) != len(lattice):
        logger.info("Distinct cells share the same set of join-irreducibles below them")
        return False
    n_ideals = _count_ideals(poset)
    if n_ideals != len(lattice):
        logger.info(f"P has {n_ideals} ideals but L has {len(lattice)} elements")
        return False
    for x, y in hasse_edges(lattice):
        if not (down[x] < down[y] and len(down[y] - down[x]) == 1):
            logger.info(f"Cover {x} < {y} is not a one-element ideal extension")
            return False
    return True


def _check_subtable(lattice: CellLattice, subtable: Subtable) -> None:
    if subtable.shape != lattice.shape:
        raise ShapeMismatchError("subtable was built for a different table shape")


def is_poset_ideal(lattice: CellLattice, subtable: Subtable) -> IdealCheck:
    """B is an ideal iff every lower cover of every cell of B is in B."""
    _check_subtable(lattice, subtable)
    for a in sorted(subtable.cells):
        for b in lattice.lower_covers(a):
            if b not in subtable:
                return IdealCheck(is_ideal=False, witness=(a, b))
    return IdealCheck(is_ideal=True)


def require_ideal(lattice: CellLattice, subtable: Subtable) -> None:
    check = is_poset_ideal(lattice, subtable)
    if not check:
        raise NotAnIdealError(check.witness)


def _classify(alpha: Cell, beta: Cell, subtable: Subtable) -> Optional[PairClass]:
    a_in, b_in = alpha in subtable, beta in subtable
    if a_in and b_in:
        return PairClass.JOIN_IN_B if join(alpha, beta) in subtable else None
    if not a_in and not b_in:
        return PairClass.MEET_OUT_B if meet(alpha, beta) not in subtable else None
    return PairClass.SPLIT


def incomparable_pairs(lattice: CellLattice, subtable: Subtable) -> List[IncomparablePair]:
    """
    Incomparable cell pairs whose class condition holds for B, ordered by
    the (i1, i2, j1, j2) key of their minor.

    Raises:
        NotAnIdealError: if B is not downward closed.
    """
    require_ideal(lattice, subtable)
    pairs = []
    for a, b in combinations(lattice.elements, 2):
        if comparable(a, b):
            continue
        # a precedes b lexicographically: smaller row, larger column
        alpha, beta = a, b
        pair_class = _classify(alpha, beta, subtable)
        if pair_class is not None:
            pairs.append(IncomparablePair(alpha=alpha, beta=beta, pair_class=pair_class))
    pairs.sort(key=lambda p: p.key)
    return pairs


def pair_to_move(pair: IncomparablePair):
    """The canonical-sign basic move z(i1, i2; j1, j2) of the pair's minor."""
    from .basis import Move

    i1, i2, j1, j2 = pair.key
    return Move(i1=i1, i2=i2, j1=j1, j2=j2)
