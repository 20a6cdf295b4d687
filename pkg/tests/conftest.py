"""Shared fixtures: the hydra data and a few small ladder shapes."""

from pathlib import Path

import pytest

from fibermc.model import (
    LadderShape,
    change_point_subtable,
    explicit_subtable,
    parse_table,
)

DATA_DIR = Path(__file__).resolve().parent.parent / "data"

HYDRA_TEXT = """\
 4  .  .  .  .  .  .
 4  0  .  .  .  .  .
19  5  1  .  .  .  .
24 15  4  5  .  .  .
 . 19 18 18  8  .  .
 .  . 24 21 16  5  .
 .  .  . 23 22  8  1
"""

HYDRA_BASIS = [
    "z(2,3;1,2)", "z(2,4;1,2)", "z(3,4;1,2)", "z(3,4;1,3)", "z(3,4;2,3)",
    "z(4,5;3,4)", "z(4,6;3,4)", "z(5,6;3,4)", "z(5,6;3,5)", "z(5,6;4,5)",
    "z(5,7;4,5)", "z(6,7;4,5)", "z(6,7;4,6)", "z(6,7;5,6)",
]


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture
def hydra_path():
    return DATA_DIR / "hydra.tab"


@pytest.fixture
def hydra():
    return parse_table(HYDRA_TEXT)


@pytest.fixture
def hydra_shape(hydra):
    return hydra[0]


@pytest.fixture
def hydra_table(hydra):
    return hydra[1]


@pytest.fixture
def hydra_b42(hydra_shape):
    return change_point_subtable(hydra_shape, 4, 2)


@pytest.fixture
def example_shape():
    """4x4 shape with rows [1,3], [2,4], [3,4], [3,4]."""
    return LadderShape.from_intervals([(1, 3), (2, 4), (3, 4), (3, 4)])


@pytest.fixture
def example_subtable(example_shape):
    return explicit_subtable(example_shape, [(1, 1), (1, 2), (1, 3), (2, 2), (2, 3)])


@pytest.fixture
def square():
    """Complete 2x2 shape."""
    return LadderShape.complete(2, 2)


@pytest.fixture
def staircase_shapes():
    return {
        "a": LadderShape.from_intervals([(1, 2), (1, 3), (1, 3), (1, 5), (1, 5)]),
        "b": LadderShape.from_intervals([(1, 2), (1, 3), (1, 3), (2, 5), (5, 5)]),
        "c": LadderShape.from_intervals([(1, 2), (1, 3), (1, 3), (4, 5), (5, 5)]),
    }
