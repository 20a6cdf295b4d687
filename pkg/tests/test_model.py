"""Tests for shapes, parsing, subtables and configuration matrices."""

import itertools

import numpy as np
import pytest
from pydantic import ValidationError

from fibermc.exceptions import (
    CellNotInShapeError,
    EmptyRowError,
    InconsistentStatisticError,
    InvalidTokenError,
    NegativeCountError,
    NonIntervalRowError,
    RaggedInputError,
    ShapeMismatchError,
    TableParseError,
)
from fibermc.model import (
    LadderShape,
    SubtableOrigin,
    SuffStat,
    Table,
    change_point_subtable,
    configuration_matrix,
    degrees_of_freedom,
    exact_rank,
    explicit_subtable,
    format_table,
    has_homogeneity,
    load_subtable,
    load_table,
    parse_subtable_mask,
    parse_table,
    quasi_independence_subtable,
    sufficient_statistic,
    validate_ladder,
)

HYDRA_MATRIX = """\
1000000000000000000000
0110000000000000000000
0001110000000000000000
0000001111000000000000
0000000000111100000000
0000000000000011110000
0000000000000000001111
1101001000000000000000
0010100100100000000000
0000010010010010000000
0000000001001001001000
0000000000000100100100
0000000000000000010010
0000000000000000000001
1111101100000000000000"""

EXAMPLE_MATRIX = """\
1110000000
0001110000
0000001100
0000000011
1000000000
0101000000
0010101010
0000010101
1111100000"""


class TestParseTable:
    """Tests for the whitespace table format."""

    def test_hydra_shape(self, hydra_shape, hydra_table):
        intervals = [hydra_shape.row_interval(i) for i in range(1, 8)]
        assert intervals == [(1, 1), (1, 2), (1, 3), (1, 4), (2, 5), (3, 6), (4, 7)]
        assert hydra_shape.q == 22
        assert hydra_table.counts[:6] == (4, 4, 0, 19, 5, 1)
        assert hydra_table.total == 264

    def test_complete_square(self):
        shape, table = parse_table("1 2\n3 4")
        assert shape == LadderShape.complete(2, 2)
        assert table.counts == (1, 2, 3, 4)

    def test_comments_and_blank_lines_ignored(self):
        shape, table = parse_table("# header\n\n1 2\n  \n3 4\n")
        assert shape.n_rows == 2
        assert table.counts == (1, 2, 3, 4)

    def test_non_interval_row(self):
        with pytest.raises(NonIntervalRowError) as exc_info:
            parse_table("1 . 2\n3 4 5")
        assert exc_info.value.line == 1

    def test_empty_row(self):
        with pytest.raises(EmptyRowError):
            parse_table("1 2\n. .")

    def test_ragged_input(self):
        with pytest.raises(RaggedInputError) as exc_info:
            parse_table("1 2\n3 4 5")
        assert exc_info.value.line == 2

    def test_negative_count(self):
        with pytest.raises(NegativeCountError):
            parse_table("1 -2\n3 4")

    def test_invalid_token(self):
        with pytest.raises(InvalidTokenError):
            parse_table("1 x\n3 4")

    def test_empty_input(self):
        with pytest.raises(TableParseError):
            parse_table("# nothing here\n")

    def test_format_round_trip(self, hydra_table):
        shape, table = parse_table(format_table(hydra_table))
        assert shape == hydra_table.shape
        assert table == hydra_table

    def test_format_uses_structural_zero_token(self, hydra_table):
        first_line = format_table(hydra_table).splitlines()[0].split()
        assert first_line == ["4", ".", ".", ".", ".", ".", "."]

    def test_load_shipped_hydra(self, hydra_path, hydra_table):
        _, table = load_table(hydra_path)
        assert table == hydra_table


class TestShape:
    """Tests for LadderShape and Table records."""

    def test_cells_are_row_major(self, example_shape):
        assert example_shape.cells == (
            (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (2, 4), (3, 3), (3, 4), (4, 3), (4, 4)
        )

    def test_index_of_missing_cell(self, hydra_shape):
        with pytest.raises(CellNotInShapeError):
            hydra_shape.index((1, 2))

    def test_column_bounds(self, hydra_shape):
        bounds = hydra_shape.column_bounds()
        assert bounds[0] == (1, 4)
        assert bounds[1] == (2, 5)
        assert bounds[6] == (7, 7)

    def test_interval_outside_columns_rejected(self):
        with pytest.raises(ValidationError):
            LadderShape(n_rows=1, n_cols=2, lower=(1,), upper=(3,))

    def test_table_rejects_wrong_length(self, square):
        with pytest.raises(ValidationError):
            Table(shape=square, counts=(1, 2, 3))

    def test_table_rejects_negative_counts(self, square):
        with pytest.raises(ValidationError):
            Table(shape=square, counts=(1, 2, 3, -1))

    def test_table_lookup(self, hydra_table):
        assert hydra_table[(5, 3)] == 18
        assert hydra_table[(7, 7)] == 1


class TestValidateLadder:
    """Tests for the ladder determinantal conditions."""

    def test_full_width_staircase_is_ladder(self, staircase_shapes):
        assert validate_ladder(staircase_shapes["a"]).ok

    def test_narrowing_staircase_is_ladder(self, staircase_shapes):
        assert validate_ladder(staircase_shapes["b"]).ok

    def test_split_staircase_violates_band_condition(self, staircase_shapes):
        report = validate_ladder(staircase_shapes["c"])
        assert not report.ok
        assert len(report.violations) == 1
        assert "u_3 ≥ ℓ_4" in report.violations[0]
        assert "u_3 = 3 < 4 = ℓ_4" in report.violations[0]

    def test_separable_flag_downgrades_to_warning(self, staircase_shapes):
        report = validate_ladder(staircase_shapes["c"], allow_separable=True)
        assert report.ok
        assert any("u_3" in w for w in report.warnings)

    def test_separable_shape_flag(self):
        shape = LadderShape.from_intervals([(1, 2), (1, 3), (1, 3), (4, 5), (5, 5)], separable=True)
        assert validate_ladder(shape).ok

    def test_complete_shape(self):
        assert validate_ladder(LadderShape.complete(3, 4)).ok

    def test_hydra(self, hydra_shape):
        assert validate_ladder(hydra_shape).ok

    def test_corner_and_monotonicity_violations(self):
        shape = LadderShape.from_intervals([(2, 3), (1, 2)])
        report = validate_ladder(shape)
        assert not report.ok
        assert any("(1,1)" in v for v in report.violations)
        assert any("ℓ_1 ≤ ℓ_2" in v for v in report.violations)
        assert any("u_1 ≤ u_2" in v for v in report.violations)

    def test_closure_holds_for_valid_ladders(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n_rows, n_cols = rng.integers(1, 8, size=2)
            lower = np.sort(rng.integers(1, n_cols + 1, size=n_rows))
            lower[0] = 1
            upper = np.sort(rng.integers(1, n_cols + 1, size=n_rows))
            upper[-1] = n_cols
            upper = np.maximum(upper, lower)
            upper[:-1] = np.maximum(upper[:-1], lower[1:])
            upper = np.maximum.accumulate(upper)
            shape = LadderShape(
                n_rows=int(n_rows), n_cols=int(n_cols),
                lower=tuple(int(v) for v in lower), upper=tuple(int(v) for v in upper),
            )
            assert validate_ladder(shape).ok
            for a, b in itertools.combinations(shape.cells, 2):
                assert (min(a[0], b[0]), min(a[1], b[1])) in shape
                assert (max(a[0], b[0]), max(a[1], b[1])) in shape


class TestSubtables:
    """Tests for change-point and explicit subtables."""

    def test_hydra_change_point(self, hydra_b42):
        assert hydra_b42.cells == {(1, 1), (2, 1), (2, 2), (3, 1), (3, 2), (4, 1), (4, 2)}
        assert hydra_b42.origin is SubtableOrigin.CHANGE_POINT
        assert hydra_b42.change_point == (4, 2)

    def test_corner_change_point_is_whole_table(self, hydra_shape):
        subtable = change_point_subtable(hydra_shape, 7, 7)
        assert subtable.is_full

    def test_change_point_outside_shape(self, hydra_shape):
        with pytest.raises(CellNotInShapeError):
            change_point_subtable(hydra_shape, 1, 5)

    def test_example_mask_equals_change_point(self, example_shape, example_subtable):
        assert example_subtable.cells == change_point_subtable(example_shape, 2, 3).cells
        assert example_subtable.origin is SubtableOrigin.EXPLICIT

    def test_quasi_independence_is_empty(self, hydra_shape):
        assert quasi_independence_subtable(hydra_shape).is_empty

    def test_explicit_cells_must_be_in_shape(self, hydra_shape):
        with pytest.raises(ValidationError):
            explicit_subtable(hydra_shape, [(1, 2)])

    def test_parse_mask(self, example_shape):
        mask = "1 1 1 .\n. 1 1 0\n. . 0 0\n. . 0 0\n"
        subtable = parse_subtable_mask(mask, example_shape)
        assert subtable.cells == {(1, 1), (1, 2), (1, 3), (2, 2), (2, 3)}

    def test_mask_with_wrong_zero_pattern(self, example_shape):
        mask = "1 1 1 0\n. 1 1 0\n. . 0 0\n. . 0 0\n"
        with pytest.raises(ShapeMismatchError):
            parse_subtable_mask(mask, example_shape)

    def test_mask_with_wrong_size(self, example_shape):
        with pytest.raises(ShapeMismatchError):
            parse_subtable_mask("1 1\n0 0\n", example_shape)

    def test_mask_with_bad_token(self, example_shape):
        mask = "1 1 2 .\n. 1 1 0\n. . 0 0\n. . 0 0\n"
        with pytest.raises(InvalidTokenError):
            parse_subtable_mask(mask, example_shape)

    def test_load_shipped_mask(self, data_dir, hydra_shape, hydra_b42):
        subtable = load_subtable(data_dir / "hydra_b42.mask", hydra_shape)
        assert subtable.cells == hydra_b42.cells


class TestConfigurationMatrix:
    """Tests for A, t and degrees of freedom."""

    def test_hydra_matrix_bit_exact(self, hydra_shape, hydra_b42):
        matrix = configuration_matrix(hydra_shape, hydra_b42)
        assert matrix.to_text() == HYDRA_MATRIX
        assert matrix.as_array().shape == (15, 22)

    def test_example_matrix_bit_exact(self, example_shape, example_subtable):
        assert configuration_matrix(example_shape, example_subtable).to_text() == EXAMPLE_MATRIX

    def test_square_matrix(self, square):
        subtable = explicit_subtable(square, [(1, 1)])
        rows = configuration_matrix(square, subtable).rows
        assert rows == ((1, 1, 0, 0), (0, 0, 1, 1), (1, 0, 1, 0), (0, 1, 0, 1), (1, 0, 0, 0))

    def test_trivial_subtable_warns(self, square, caplog):
        with caplog.at_level("WARNING", logger="fibermc.model"):
            configuration_matrix(square, quasi_independence_subtable(square))
        assert "quasi-independence" in caplog.text

    def test_shape_mismatch(self, hydra_b42, square):
        with pytest.raises(ShapeMismatchError):
            configuration_matrix(square, hydra_b42)

    def test_hydra_sufficient_statistic(self, hydra_table, hydra_b42):
        t = sufficient_statistic(hydra_table, hydra_b42)
        assert t.row_sums == (4, 4, 25, 48, 63, 66, 54)
        assert t.col_sums == (51, 39, 47, 67, 46, 13, 1)
        assert t.subtable_sum == 71

    def test_matrix_times_counts_is_statistic(self, hydra_shape, hydra_table, hydra_b42):
        matrix = configuration_matrix(hydra_shape, hydra_b42)
        t = sufficient_statistic(hydra_table, hydra_b42)
        assert matrix.dot(hydra_table.counts) == t.as_vector()

    def test_zero_table_statistic(self, hydra_shape, hydra_b42):
        zero = Table(shape=hydra_shape, counts=(0,) * hydra_shape.q)
        assert set(sufficient_statistic(zero, hydra_b42).as_vector()) == {0}

    def test_square_statistic(self, square):
        table = Table(shape=square, counts=(1, 2, 3, 4))
        t = sufficient_statistic(table, explicit_subtable(square, [(1, 1)]))
        assert (t.row_sums, t.col_sums, t.subtable_sum) == ((3, 7), (4, 6), 1)

    def test_degrees_of_freedom(self, hydra_shape, hydra_b42, example_shape, example_subtable, square):
        hydra_matrix = configuration_matrix(hydra_shape, hydra_b42)
        assert exact_rank(hydra_matrix.rows) == 14
        assert degrees_of_freedom(hydra_matrix) == 8

        example_matrix = configuration_matrix(example_shape, example_subtable)
        assert exact_rank(example_matrix.rows) == 8
        assert degrees_of_freedom(example_matrix) == 2

        square_matrix = configuration_matrix(square, explicit_subtable(square, [(1, 1)]))
        assert degrees_of_freedom(square_matrix) == 0

    def test_homogeneity(self, hydra_shape, hydra_b42, example_shape, example_subtable):
        assert has_homogeneity(configuration_matrix(hydra_shape, hydra_b42))
        assert has_homogeneity(configuration_matrix(example_shape, example_subtable))

    def test_table_shape_recovered_from_matrix(self, hydra_shape, hydra_b42):
        assert configuration_matrix(hydra_shape, hydra_b42).table_shape() == hydra_shape


class TestExactRank:
    """Tests for fraction-free elimination."""

    def test_identity(self):
        assert exact_rank([[1, 0, 0], [0, 1, 0], [0, 0, 1]]) == 3

    def test_dependent_rows(self):
        assert exact_rank([[1, 2, 3], [2, 4, 6], [1, 0, 1]]) == 2

    def test_zero_column_skipped(self):
        assert exact_rank([[0, 2, 4], [0, 1, 3]]) == 2

    def test_empty(self):
        assert exact_rank([]) == 0

    def test_agrees_with_floating_point_rank(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            m = rng.integers(-3, 4, size=(5, 7))
            m[4] = m[0] - 2 * m[1]
            assert exact_rank(m.tolist()) == np.linalg.matrix_rank(m)


class TestSuffStat:
    """Tests for the sufficient statistic record."""

    def test_inconsistent_margins(self):
        t = SuffStat(row_sums=(1, 2), col_sums=(1, 1), subtable_sum=0)
        assert not t.is_consistent
        with pytest.raises(InconsistentStatisticError):
            t.check_consistent()

    def test_subtable_sum_above_total(self):
        t = SuffStat(row_sums=(1,), col_sums=(1,), subtable_sum=2)
        with pytest.raises(InconsistentStatisticError):
            t.check_consistent()

    def test_from_vector(self):
        t = SuffStat.from_vector([3, 7, 4, 6, 1], 2, 2)
        assert t.as_vector() == (3, 7, 4, 6, 1)
        assert t.total == 10
