"""Tests for the cell lattice, join-irreducibles and incomparable pairs."""

import logging

import pytest

from fibermc.basis import generate_markov_basis
from fibermc.exceptions import NotALatticeError, NotAnIdealError
from fibermc.lattice import (
    PairClass,
    build_lattice,
    comparable,
    hasse_edges,
    incomparable_pairs,
    is_poset_ideal,
    join_irreducibles,
    pair_to_move,
    verify_birkhoff,
)
from fibermc.model import (
    LadderShape,
    change_point_subtable,
    explicit_subtable,
    quasi_independence_subtable,
)

from .conftest import HYDRA_BASIS


class TestBuildLattice:
    """Tests for lattice construction and covers."""

    def test_hydra_bounds(self, hydra_shape):
        lattice = build_lattice(hydra_shape)
        assert len(lattice) == 22
        assert lattice.bottom == (1, 1)
        assert lattice.top == (7, 7)

    def test_diamond(self, square):
        lattice = build_lattice(square)
        assert hasse_edges(lattice) == [
            ((1, 1), (1, 2)),
            ((1, 1), (2, 1)),
            ((1, 2), (2, 2)),
            ((2, 1), (2, 2)),
        ]

    def test_single_row_is_chain(self):
        lattice = build_lattice(LadderShape.complete(1, 4))
        assert hasse_edges(lattice) == [((1, 1), (1, 2)), ((1, 2), (1, 3)), ((1, 3), (1, 4))]

    def test_covers_skip_structural_zeros(self, hydra_shape):
        lattice = build_lattice(hydra_shape)
        assert lattice.lower_covers((5, 2)) == ((4, 2),)
        assert set(lattice.lower_covers((3, 2))) == {(3, 1), (2, 2)}
        assert set(lattice.upper_covers((4, 1))) == {(4, 2)}

    def test_meet_and_join(self, hydra_shape):
        lattice = build_lattice(hydra_shape)
        assert lattice.meet((3, 3), (5, 2)) == (3, 2)
        assert lattice.join((3, 3), (5, 2)) == (5, 3)

    def test_closure_failure(self):
        shape = LadderShape.from_intervals([(2, 3), (1, 3)])
        with pytest.raises(NotALatticeError):
            build_lattice(shape)


class TestJoinIrreducibles:
    """Tests for the two chains of join-irreducible cells."""

    def test_hydra_chains(self, hydra_shape):
        irreducibles = join_irreducibles(build_lattice(hydra_shape))
        assert irreducibles.chain_c == ((3, 1), (4, 1), (5, 2), (6, 3), (7, 4))
        assert irreducibles.chain_d == ((2, 2), (3, 3), (4, 4), (5, 5), (6, 6))
        assert irreducibles.pinned == ((2, 1), (7, 7))
        assert irreducibles.planar

    def test_chains_are_chains(self, hydra_shape):
        irreducibles = join_irreducibles(build_lattice(hydra_shape))
        for chain in (irreducibles.chain_c, irreducibles.chain_d):
            assert all(comparable(a, b) for a in chain for b in chain)

    def test_diamond(self, square):
        irreducibles = join_irreducibles(build_lattice(square))
        assert irreducibles.chain_c == ((2, 1),)
        assert irreducibles.chain_d == ((1, 2),)

    def test_chain_lattice_warns(self, caplog):
        lattice = build_lattice(LadderShape.complete(1, 4))
        with caplog.at_level(logging.WARNING, logger="fibermc.lattice"):
            irreducibles = join_irreducibles(lattice)
        assert not irreducibles.planar
        assert irreducibles.chain_c == ((1, 2), (1, 3), (1, 4))
        assert irreducibles.chain_d == ()
        assert "chain" in caplog.text

    def test_birkhoff_representation(self, hydra_shape, example_shape, square):
        for shape in (hydra_shape, example_shape, square, LadderShape.complete(1, 4), LadderShape.complete(3, 3)):
            assert verify_birkhoff(build_lattice(shape))


class TestPosetIdeal:
    """Tests for downward-closure of subtables."""

    def test_change_points_are_ideals(self, hydra_shape):
        lattice = build_lattice(hydra_shape)
        for i, j in hydra_shape.cells:
            assert is_poset_ideal(lattice, change_point_subtable(hydra_shape, i, j))

    def test_hydra_b42(self, hydra_shape, hydra_b42):
        check = is_poset_ideal(build_lattice(hydra_shape), hydra_b42)
        assert check.is_ideal
        assert check.witness is None

    def test_single_cell_witness(self, hydra_shape):
        check = is_poset_ideal(build_lattice(hydra_shape), explicit_subtable(hydra_shape, [(3, 2)]))
        assert not check
        assert check.witness == ((3, 2), (3, 1))

    def test_example_mask_is_ideal(self, example_shape, example_subtable):
        assert is_poset_ideal(build_lattice(example_shape), example_subtable)


class TestIncomparablePairs:
    """Tests for the pair set and its moves."""

    def test_hydra_has_fourteen_pairs(self, hydra_shape, hydra_b42):
        pairs = incomparable_pairs(build_lattice(hydra_shape), hydra_b42)
        assert len(pairs) == 14

    def test_hydra_pairs_map_onto_basis(self, hydra_shape, hydra_b42):
        pairs = incomparable_pairs(build_lattice(hydra_shape), hydra_b42)
        assert [pair_to_move(p).label for p in pairs] == HYDRA_BASIS

    def test_pairs_are_incomparable(self, hydra_shape, hydra_b42):
        for pair in incomparable_pairs(build_lattice(hydra_shape), hydra_b42):
            assert not comparable(pair.alpha, pair.beta)
            i1, i2, j1, j2 = pair.key
            assert i1 < i2 and j1 < j2

    def test_pair_classes(self, hydra_shape, hydra_b42):
        pairs = {pair.key: pair.pair_class for pair in incomparable_pairs(build_lattice(hydra_shape), hydra_b42)}
        assert pairs[(2, 3, 1, 2)] is PairClass.JOIN_IN_B
        assert pairs[(3, 4, 2, 3)] is PairClass.SPLIT
        assert pairs[(6, 7, 5, 6)] is PairClass.MEET_OUT_B

    def test_subtable_cell_counts_never_odd(self, hydra_shape, hydra_b42):
        for pair in incomparable_pairs(build_lattice(hydra_shape), hydra_b42):
            cells = pair_to_move(pair).cells
            assert sum(cell in hydra_b42 for cell in cells) in (0, 2, 4)

    def test_empty_subtable_gives_meet_out_pairs(self, hydra_shape):
        empty = quasi_independence_subtable(hydra_shape)
        pairs = incomparable_pairs(build_lattice(hydra_shape), empty)
        assert pairs
        assert {p.pair_class for p in pairs} == {PairClass.MEET_OUT_B}
        assert len(pairs) == len(generate_markov_basis(hydra_shape, empty))

    def test_pair_to_move_labels(self, hydra_shape, hydra_b42):
        pairs = {
            frozenset((p.alpha, p.beta)): p
            for p in incomparable_pairs(build_lattice(hydra_shape), hydra_b42)
        }
        assert pair_to_move(pairs[frozenset({(2, 2), (3, 1)})]).label == "z(2,3;1,2)"
        assert pair_to_move(pairs[frozenset({(6, 6), (7, 5)})]).label == "z(6,7;5,6)"
        assert pair_to_move(pairs[frozenset({(4, 4), (5, 3)})]).label == "z(4,5;3,4)"

    def test_not_an_ideal(self, hydra_shape):
        with pytest.raises(NotAnIdealError) as exc_info:
            incomparable_pairs(build_lattice(hydra_shape), explicit_subtable(hydra_shape, [(3, 2)]))
        assert exc_info.value.witness == ((3, 2), (3, 1))
