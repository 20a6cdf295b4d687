"""Exact conditional tests for two-way change-point models on ladder tables."""

__version__ = "0.1.0"

from .basis import Move, apply_move, generate_markov_basis, is_move, verify_basis_equals_lattice
from .fiber import connectivity_check, enumerate_fiber, indispensability_check
from .fit import FitResult, chi_square_survival, fit_mle, pearson_chi_square
from .lattice import build_lattice, incomparable_pairs, is_poset_ideal, join_irreducibles, pair_to_move
from .model import (
    LadderShape,
    Subtable,
    Table,
    change_point_subtable,
    configuration_matrix,
    degrees_of_freedom,
    parse_table,
    sufficient_statistic,
    validate_ladder,
)
from .sampler import ChainSummary, metropolis_step, run_chain, scan_change_points

__all__ = [
    "__version__",
    "LadderShape",
    "Table",
    "Subtable",
    "parse_table",
    "validate_ladder",
    "change_point_subtable",
    "configuration_matrix",
    "sufficient_statistic",
    "degrees_of_freedom",
    "build_lattice",
    "join_irreducibles",
    "is_poset_ideal",
    "incomparable_pairs",
    "pair_to_move",
    "Move",
    "generate_markov_basis",
    "is_move",
    "apply_move",
    "verify_basis_equals_lattice",
    "enumerate_fiber",
    "connectivity_check",
    "indispensability_check",
    "FitResult",
    "fit_mle",
    "pearson_chi_square",
    "chi_square_survival",
    "ChainSummary",
    "metropolis_step",
    "run_chain",
    "scan_change_points",
]
