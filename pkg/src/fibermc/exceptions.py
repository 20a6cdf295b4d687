from typing import Optional, Tuple

Cell = Tuple[int, int]


class FiberMCError(Exception):
    """Base exception for fibermc"""
    pass


class TableParseError(FiberMCError):
    """Raised when a table or mask file cannot be read"""
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        self.message = message
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class NonIntervalRowError(TableParseError):
    """A row's cells do not form one contiguous interval"""
    pass


class EmptyRowError(TableParseError):
    """A row consists of structural zeros only"""
    pass


class RaggedInputError(TableParseError):
    """Rows have differing numbers of tokens"""
    pass


class NegativeCountError(TableParseError):
    pass


class InvalidTokenError(TableParseError):
    pass


class CellNotInShapeError(FiberMCError):
    def __init__(self, cell: Cell):
        self.cell = cell
        super().__init__(f"Cell {cell} is not a cell of the table")


class ShapeMismatchError(FiberMCError):
    """Raised when two objects disagree on their cell set"""
    pass


class DimensionMismatchError(FiberMCError):
    def __init__(self, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(f"Expected a vector of length {expected}, got {actual}")


class NotALatticeError(FiberMCError):
    """The cell set is not closed under componentwise min and max"""
    pass


class NotAnIdealError(FiberMCError):
    """The subtable is not downward closed in the cell order"""
    def __init__(self, witness: Optional[Tuple[Cell, Cell]] = None):
        self.witness = witness
        if witness is None:
            super().__init__("Subtable is not a poset ideal")
        else:
            a, b = witness
            super().__init__(f"Subtable is not a poset ideal: {a} is in B but {b} <= {a} is not")


class InconsistentStatisticError(FiberMCError):
    """Row, column and subtable totals cannot come from one table"""
    pass


class CapExceededError(FiberMCError):
    def __init__(self, partial_count: int, cap: int):
        self.partial_count = partial_count
        self.cap = cap
        super().__init__(f"Fiber has more than {cap} members (stopped after {partial_count})")


class NoConvergenceError(FiberMCError):
    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"Iterative scaling did not converge after {iterations} cycles (residual {residual:.3e})"
        )


class EmptyBasisError(FiberMCError):
    """A Metropolis step needs at least one move"""
    pass
