"""
Ladder determinantal tables and the two-way change-point model.

A table lives on a cell set S given row by row as column intervals
[lower_i, upper_i]. Every vector in the package (counts, moves, fitted
values, matrix columns) is indexed by the cells of S in row-major
lexicographic order.
"""

import logging
from enum import Enum
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator

from .exceptions import (
    CellNotInShapeError,
    DimensionMismatchError,
    EmptyRowError,
    InconsistentStatisticError,
    InvalidTokenError,
    NegativeCountError,
    NonIntervalRowError,
    RaggedInputError,
    ShapeMismatchError,
    TableParseError,
)

logger = logging.getLogger(__name__)

Cell = Tuple[int, int]

STRUCTURAL_ZERO = "."


class LadderShape(BaseModel):
    """Cell set S of an incomplete two-way table, one column interval per row."""
    model_config = ConfigDict(frozen=True)

    n_rows: int = Field(ge=1)
    n_cols: int = Field(ge=1)
    lower: Tuple[int, ...]
    upper: Tuple[int, ...]
    separable: bool = False

    _cells: Tuple[Cell, ...] = PrivateAttr(default=())
    _index: Dict[Cell, int] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def _check_intervals(self) -> "LadderShape":
        if len(self.lower) != self.n_rows or len(self.upper) != self.n_rows:
            raise ValueError(
                f"lower/upper must have {self.n_rows} entries, "
                f"got {len(self.lower)} and {len(self.upper)}"
            )
        for i, (lo, hi) in enumerate(zip(self.lower, self.upper), start=1):
            if not 1 <= lo <= hi <= self.n_cols:
                raise ValueError(f"row {i}: interval [{lo}, {hi}] is not inside [1, {self.n_cols}]")
        return self

    def model_post_init(self, __context) -> None:
        cells = tuple(
            (i, j)
            for i, (lo, hi) in enumerate(zip(self.lower, self.upper), start=1)
            for j in range(lo, hi + 1)
        )
        self._cells = cells
        self._index = {cell: k for k, cell in enumerate(cells)}

    @classmethod
    def complete(cls, n_rows: int, n_cols: int) -> "LadderShape":
        return cls(
            n_rows=n_rows,
            n_cols=n_cols,
            lower=(1,) * n_rows,
            upper=(n_cols,) * n_rows,
        )

    @classmethod
    def from_intervals(cls, intervals: Sequence[Tuple[int, int]], **kwargs) -> "LadderShape":
        """Build a shape from per-row (lower, upper) pairs."""
        return cls(
            n_rows=len(intervals),
            n_cols=max(hi for _, hi in intervals),
            lower=tuple(lo for lo, _ in intervals),
            upper=tuple(hi for _, hi in intervals),
            **kwargs,
        )

    @property
    def cells(self) -> Tuple[Cell, ...]:
        return self._cells

    @property
    def q(self) -> int:
        return len(self._cells)

    def __contains__(self, cell: object) -> bool:
        return cell in self._index

    def index(self, cell: Cell) -> int:
        try:
            return self._index[cell]
        except KeyError:
            raise CellNotInShapeError(cell) from None

    def row_interval(self, i: int) -> Tuple[int, int]:
        return self.lower[i - 1], self.upper[i - 1]

    def row_cells(self, i: int) -> Tuple[Cell, ...]:
        lo, hi = self.row_interval(i)
        return tuple((i, j) for j in range(lo, hi + 1))

    def column_bounds(self) -> Tuple[Optional[Tuple[int, int]], ...]:
        """Per-column row range (first row, last row); None for an empty column."""
        bounds: List[Optional[Tuple[int, int]]] = [None] * self.n_cols
        for i, j in self._cells:
            current = bounds[j - 1]
            bounds[j - 1] = (i, i) if current is None else (current[0], i)
        return tuple(bounds)


class Table(BaseModel):
    """Nonnegative counts on the cells of a shape, in cell order."""
    model_config = ConfigDict(frozen=True)

    shape: LadderShape
    counts: Tuple[int, ...]

    @model_validator(mode="after")
    def _check_counts(self) -> "Table":
        if len(self.counts) != self.shape.q:
            raise ValueError(f"expected {self.shape.q} counts, got {len(self.counts)}")
        if any(c < 0 for c in self.counts):
            raise ValueError("counts must be nonnegative")
        return self

    def __getitem__(self, cell: Cell) -> int:
        return self.counts[self.shape.index(cell)]

    @property
    def total(self) -> int:
        return sum(self.counts)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64)

    def with_counts(self, counts: Sequence[int]) -> "Table":
        return Table(shape=self.shape, counts=tuple(int(c) for c in counts))


class SubtableOrigin(str, Enum):
    CHANGE_POINT = "change-point"
    EXPLICIT = "explicit"


class Subtable(BaseModel):
    """The cell subset B whose total is held fixed by the model."""
    model_config = ConfigDict(frozen=True)

    shape: LadderShape
    cells: FrozenSet[Cell]
    origin: SubtableOrigin = SubtableOrigin.EXPLICIT
    change_point: Optional[Cell] = None

    @model_validator(mode="after")
    def _check_cells(self) -> "Subtable":
        outside = sorted(c for c in self.cells if c not in self.shape)
        if outside:
            raise ValueError(f"subtable cells {outside} are not cells of the table")
        if self.origin is SubtableOrigin.CHANGE_POINT:
            if self.change_point is None:
                raise ValueError("change-point subtable needs (i*, j*)")
            i_star, j_star = self.change_point
            expected = {(i, j) for i, j in self.shape.cells if i <= i_star and j <= j_star}
            if set(self.cells) != expected:
                raise ValueError(f"cells do not match change point {self.change_point}")
        return self

    def __contains__(self, cell: object) -> bool:
        return cell in self.cells

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def is_empty(self) -> bool:
        return not self.cells

    @property
    def is_full(self) -> bool:
        return len(self.cells) == self.shape.q

    def indicator(self) -> Tuple[int, ...]:
        return tuple(1 if cell in self.cells else 0 for cell in self.shape.cells)

    def describe(self) -> str:
        if self.origin is SubtableOrigin.CHANGE_POINT:
            i_star, j_star = self.change_point
            return f"change point (i*, j*) = ({i_star}, {j_star})"
        if self.is_empty:
            return "empty subtable (quasi-independence)"
        return f"explicit subtable with {len(self.cells)} cells"


class ConfigMatrix(BaseModel):
    """0/1 matrix A with A x = (row sums, column sums, subtable sum)."""
    model_config = ConfigDict(frozen=True)

    rows: Tuple[Tuple[int, ...], ...]
    cell_order: Tuple[Cell, ...]
    n_table_rows: int
    n_table_cols: int

    @model_validator(mode="after")
    def _check_rows(self) -> "ConfigMatrix":
        if len(self.rows) != self.n_table_rows + self.n_table_cols + 1:
            raise ValueError("configuration matrix needs I + J + 1 rows")
        q = len(self.cell_order)
        for r, row in enumerate(self.rows):
            if len(row) != q:
                raise ValueError(f"row {r} has {len(row)} entries, expected {q}")
            if any(v not in (0, 1) for v in row):
                raise ValueError(f"row {r} has entries outside {{0, 1}}")
        return self

    @property
    def q(self) -> int:
        return len(self.cell_order)

    @property
    def subtable_row(self) -> Tuple[int, ...]:
        return self.rows[-1]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.rows, dtype=np.int64).reshape(len(self.rows), self.q)

    def dot(self, vector: Sequence[int]) -> Tuple[int, ...]:
        if len(vector) != self.q:
            raise DimensionMismatchError(self.q, len(vector))
        product = self.as_array() @ np.asarray(vector, dtype=np.int64)
        return tuple(int(v) for v in product)

    def table_shape(self) -> LadderShape:
        """Recover the shape from the cell order."""
        intervals: Dict[int, Tuple[int, int]] = {}
        for i, j in self.cell_order:
            lo, hi = intervals.get(i, (j, j))
            intervals[i] = (min(lo, j), max(hi, j))
        return LadderShape(
            n_rows=self.n_table_rows,
            n_cols=self.n_table_cols,
            lower=tuple(intervals[i][0] for i in range(1, self.n_table_rows + 1)),
            upper=tuple(intervals[i][1] for i in range(1, self.n_table_rows + 1)),
        )

    def to_text(self) -> str:
        """Rows as 0/1 strings, the way the matrices are printed by hand."""
        return "\n".join("".join(str(v) for v in row) for row in self.rows)


class SuffStat(BaseModel):
    """Row sums, column sums and subtable sum: the vector t = A x."""
    model_config = ConfigDict(frozen=True)

    row_sums: Tuple[int, ...]
    col_sums: Tuple[int, ...]
    subtable_sum: int

    @model_validator(mode="after")
    def _check_nonnegative(self) -> "SuffStat":
        if any(v < 0 for v in self.row_sums + self.col_sums) or self.subtable_sum < 0:
            raise ValueError("sufficient statistics must be nonnegative")
        return self

    @classmethod
    def from_vector(cls, vector: Sequence[int], n_rows: int, n_cols: int) -> "SuffStat":
        if len(vector) != n_rows + n_cols + 1:
            raise DimensionMismatchError(n_rows + n_cols + 1, len(vector))
        values = [int(v) for v in vector]
        return cls(
            row_sums=tuple(values[:n_rows]),
            col_sums=tuple(values[n_rows:n_rows + n_cols]),
            subtable_sum=values[-1],
        )

    @property
    def total(self) -> int:
        return sum(self.row_sums)

    @property
    def is_consistent(self) -> bool:
        return sum(self.row_sums) == sum(self.col_sums) and self.subtable_sum <= self.total

    def check_consistent(self) -> None:
        if sum(self.row_sums) != sum(self.col_sums):
            raise InconsistentStatisticError(
                f"row sums total {sum(self.row_sums)} but column sums total {sum(self.col_sums)}"
            )
        if self.subtable_sum > self.total:
            raise InconsistentStatisticError(
                f"subtable sum {self.subtable_sum} exceeds the grand total {self.total}"
            )

    def as_vector(self) -> Tuple[int, ...]:
        return self.row_sums + self.col_sums + (self.subtable_sum,)


class LadderReport(BaseModel):
    """Outcome of checking a shape against the ladder determinantal conditions."""
    ok: bool
    violations: Tuple[str, ...] = ()
    warnings: Tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# Parsing and formatting
# ---------------------------------------------------------------------------

def _content_lines(text: str) -> List[Tuple[int, List[str]]]:
    """Non-blank, non-comment lines as (line number, tokens)."""
    lines = []
    for number, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        lines.append((number, stripped.split()))
    return lines


def _row_interval(tokens: List[str], line: int) -> Tuple[int, int]:
    present = [k for k, tok in enumerate(tokens) if tok != STRUCTURAL_ZERO]
    if not present:
        raise EmptyRowError("row has no cells", line=line)
    first, last = present[0], present[-1]
    if last - first + 1 != len(present):
        raise NonIntervalRowError(
            f"cells {[k + 1 for k in present]} are not one contiguous interval", line=line
        )
    return first + 1, last + 1


def _check_rectangular(lines: List[Tuple[int, List[str]]]) -> int:
    if not lines:
        raise TableParseError("input has no rows")
    width = len(lines[0][1])
    for number, tokens in lines:
        if len(tokens) != width:
            raise RaggedInputError(f"expected {width} tokens, got {len(tokens)}", line=number)
    return width


def parse_table(text: str) -> Tuple[LadderShape, Table]:
    """
    Parse a whitespace-separated table with "." for structural zeros.

    Blank lines and lines starting with "#" are ignored.

    Raises:
        RaggedInputError, EmptyRowError, NonIntervalRowError,
        NegativeCountError, InvalidTokenError
    """
    lines = _content_lines(text)
    width = _check_rectangular(lines)

    intervals = []
    counts: List[int] = []
    for number, tokens in lines:
        lo, hi = _row_interval(tokens, number)
        intervals.append((lo, hi))
        for tok in tokens[lo - 1:hi]:
            try:
                value = int(tok)
            except ValueError:
                raise InvalidTokenError(f"'{tok}' is neither a count nor '{STRUCTURAL_ZERO}'", line=number) from None
            if value < 0:
                raise NegativeCountError(f"negative count {value}", line=number)
            counts.append(value)

    shape = LadderShape(
        n_rows=len(lines),
        n_cols=width,
        lower=tuple(lo for lo, _ in intervals),
        upper=tuple(hi for _, hi in intervals),
    )
    return shape, Table(shape=shape, counts=tuple(counts))


def format_table(table: Table) -> str:
    """Inverse of parse_table: one line per row, right-aligned columns."""
    shape = table.shape
    width = max([len(str(c)) for c in table.counts] + [1])
    lines = []
    for i in range(1, shape.n_rows + 1):
        tokens = []
        for j in range(1, shape.n_cols + 1):
            token = str(table[(i, j)]) if (i, j) in shape else STRUCTURAL_ZERO
            tokens.append(token.rjust(width))
        lines.append(" ".join(tokens))
    return "\n".join(lines) + "\n"


def parse_subtable_mask(text: str, shape: LadderShape) -> Subtable:
    """
    Parse a mask with 1 (in B), 0 (in S but not B) and "." (structural zero).

    The "." pattern must coincide with the table's structural zeros.
    Whether the mask is a poset ideal is checked where it matters
    (basis generation, pair enumeration).
    """
    lines = _content_lines(text)
    width = _check_rectangular(lines)
    if len(lines) != shape.n_rows or width != shape.n_cols:
        raise ShapeMismatchError(
            f"mask is {len(lines)}x{width} but the table is {shape.n_rows}x{shape.n_cols}"
        )

    cells = set()
    for i, (number, tokens) in enumerate(lines, start=1):
        for j, tok in enumerate(tokens, start=1):
            if tok not in ("0", "1", STRUCTURAL_ZERO):
                raise InvalidTokenError(f"mask token '{tok}' must be 0, 1 or '{STRUCTURAL_ZERO}'", line=number)
            if (tok == STRUCTURAL_ZERO) == ((i, j) in shape):
                raise ShapeMismatchError(f"line {number}: structural zeros differ from the table at column {j}")
            if tok == "1":
                cells.add((i, j))
    return Subtable(shape=shape, cells=frozenset(cells))


def load_table(path: Union[str, Path]) -> Tuple[LadderShape, Table]:
    return parse_table(Path(path).read_text())


def load_subtable(path: Union[str, Path], shape: LadderShape) -> Subtable:
    return parse_subtable_mask(Path(path).read_text(), shape)


# ---------------------------------------------------------------------------
# Shape validation
# ---------------------------------------------------------------------------

def closure_violations(shape: LadderShape) -> List[str]:
    # For rows i < k the componentwise min of (i, j) and (k, j') ranges over
    # row i, columns [min(l_i, l_k), min(u_i, u_k)]; the max ranges over row k,
    # columns [max(l_i, l_k), max(u_i, u_k)].
    problems = []
    for i in range(1, shape.n_rows + 1):
        lo_i, hi_i = shape.row_interval(i)
        for k in range(i + 1, shape.n_rows + 1):
            lo_k, hi_k = shape.row_interval(k)
            if min(lo_i, lo_k) < lo_i:
                problems.append(f"min of rows {i} and {k} leaves S (column {lo_k} in row {i})")
            if max(hi_i, hi_k) > hi_k:
                problems.append(f"max of rows {i} and {k} leaves S (column {hi_i} in row {k})")
    return problems


def validate_ladder(shape: LadderShape, allow_separable: bool = False) -> LadderReport:
    """
    Check the ladder determinantal conditions.

    With allow_separable (or a shape flagged separable) a failure of
    u_i >= l_{i+1} is reported as a warning instead of a violation.
    """
    violations: List[str] = []
    warnings: List[str] = []
    lower, upper = shape.lower, shape.upper
    separable_ok = allow_separable or shape.separable

    if lower[0] != 1:
        violations.append(f"(1,1) is not a cell (ℓ_1 = {lower[0]})")
    if upper[-1] != shape.n_cols:
        violations.append(f"({shape.n_rows},{shape.n_cols}) is not a cell (u_{shape.n_rows} = {upper[-1]})")

    for i in range(1, shape.n_rows):
        l_i, l_next = lower[i - 1], lower[i]
        u_i, u_next = upper[i - 1], upper[i]
        if l_i > l_next:
            violations.append(f"ℓ_{i} ≤ ℓ_{i + 1} violated: ℓ_{i} = {l_i} > {l_next} = ℓ_{i + 1}")
        if u_i > u_next:
            violations.append(f"u_{i} ≤ u_{i + 1} violated: u_{i} = {u_i} > {u_next} = u_{i + 1}")
        if u_i < l_next:
            message = f"u_{i} ≥ ℓ_{i + 1} violated: u_{i} = {u_i} < {l_next} = ℓ_{i + 1}"
            if separable_ok:
                warnings.append(f"separable table accepted: {message}")
            else:
                violations.append(message)

    for j, bounds in enumerate(shape.column_bounds(), start=1):
        if bounds is None:
            violations.append(f"column {j} has no cells")

    violations.extend(closure_violations(shape))

    for message in warnings:
        logger.warning(message)
    return LadderReport(ok=not violations, violations=tuple(violations), warnings=tuple(warnings))


# ---------------------------------------------------------------------------
# Subtables, configuration matrix, sufficient statistic
# ---------------------------------------------------------------------------

def change_point_subtable(shape: LadderShape, i_star: int, j_star: int) -> Subtable:
    """B = {(i, j) in S : i <= i*, j <= j*} for a change point (i*, j*) in S."""
    if (i_star, j_star) not in shape:
        raise CellNotInShapeError((i_star, j_star))
    cells = frozenset((i, j) for i, j in shape.cells if i <= i_star and j <= j_star)
    return Subtable(
        shape=shape,
        cells=cells,
        origin=SubtableOrigin.CHANGE_POINT,
        change_point=(i_star, j_star),
    )


def quasi_independence_subtable(shape: LadderShape) -> Subtable:
    """B = {} : the gamma = 0 special case."""
    return Subtable(shape=shape, cells=frozenset())


def explicit_subtable(shape: LadderShape, cells) -> Subtable:
    return Subtable(shape=shape, cells=frozenset(tuple(c) for c in cells))


def _check_same_shape(shape: LadderShape, subtable: Subtable) -> None:
    if subtable.shape != shape:
        raise ShapeMismatchError("subtable was built for a different table shape")


def configuration_matrix(shape: LadderShape, subtable: Subtable) -> ConfigMatrix:
    """I row-sum rows, J column-sum rows and the subtable row; columns in cell order."""
    _check_same_shape(shape, subtable)
    if subtable.is_empty or subtable.is_full:
        logger.warning(
            f"Subtable has {len(subtable)} of {shape.q} cells; "
            f"the model reduces to quasi-independence"
        )

    rows: List[Tuple[int, ...]] = []
    for r in range(1, shape.n_rows + 1):
        rows.append(tuple(1 if i == r else 0 for i, _ in shape.cells))
    for c in range(1, shape.n_cols + 1):
        rows.append(tuple(1 if j == c else 0 for _, j in shape.cells))
    rows.append(subtable.indicator())

    return ConfigMatrix(
        rows=tuple(rows),
        cell_order=shape.cells,
        n_table_rows=shape.n_rows,
        n_table_cols=shape.n_cols,
    )


def sufficient_statistic(table: Table, subtable: Subtable) -> SuffStat:
    shape = table.shape
    _check_same_shape(shape, subtable)
    row_sums = [0] * shape.n_rows
    col_sums = [0] * shape.n_cols
    subtable_sum = 0
    for (i, j), count in zip(shape.cells, table.counts):
        row_sums[i - 1] += count
        col_sums[j - 1] += count
        if (i, j) in subtable:
            subtable_sum += count
    return SuffStat(row_sums=tuple(row_sums), col_sums=tuple(col_sums), subtable_sum=subtable_sum)


# ---------------------------------------------------------------------------
# Exact rank
# ---------------------------------------------------------------------------

def exact_rank(rows: Sequence[Sequence[int]]) -> int:
    """Rank over the rationals by fraction-free (Bareiss) elimination on Python ints."""
    m = [[int(v) for v in row] for row in rows]
    if not m or not m[0]:
        return 0
    n_rows, n_cols = len(m), len(m[0])
    rank = 0
    previous_pivot = 1
    for col in range(n_cols):
        pivot_row = next((r for r in range(rank, n_rows) if m[r][col] != 0), None)
        if pivot_row is None:
            continue
        m[rank], m[pivot_row] = m[pivot_row], m[rank]
        pivot = m[rank][col]
        for r in range(rank + 1, n_rows):
            factor = m[r][col]
            for c in range(col + 1, n_cols):
                # exact division by the previous pivot
                m[r][c] = (pivot * m[r][c] - factor * m[rank][c]) // previous_pivot
            m[r][col] = 0
        previous_pivot = pivot
        rank += 1
        if rank == n_rows:
            break
    return rank


def degrees_of_freedom(matrix: ConfigMatrix) -> int:
    """q minus the exact rank of A."""
    return matrix.q - exact_rank(matrix.rows)


def has_homogeneity(matrix: ConfigMatrix) -> bool:
    """True iff the all-ones row lies in the rational row space of A."""
    ones = (1,) * matrix.q
    return exact_rank(matrix.rows + (ones,)) == exact_rank(matrix.rows)
