"""
CLI entry point for fibermc.
"""

import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Tuple, Union

import click
import yaml
from scipy.stats import chi2

from . import __version__
from .basis import generate_markov_basis, verify_basis_equals_lattice
from .config.loader import resolve_config
from .config.schema import ChainConfig, RunConfig, StatisticName
from .config.settings import settings
from .exceptions import CapExceededError, FiberMCError, NoConvergenceError
from .fiber import Fiber, connectivity_check, enumerate_fiber, exact_p_value, indispensability_check
from .fit import fit_mle
from .lattice import (
    build_lattice,
    hasse_edges,
    incomparable_pairs,
    is_poset_ideal,
    join_irreducibles,
    pair_to_move,
    verify_birkhoff,
)
from .model import (
    STRUCTURAL_ZERO,
    LadderShape,
    Subtable,
    Table,
    change_point_subtable,
    configuration_matrix,
    degrees_of_freedom,
    load_subtable,
    load_table,
    quasi_independence_subtable,
    sufficient_statistic,
    validate_ladder,
)
from .sampler import ChainSummary, run_chain, scan_change_points

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]

# Errors reported as a failed run (exit 1) rather than a crash
RUN_ERRORS = (FiberMCError, ValueError, OSError, yaml.YAMLError)


def _fail(message: str) -> None:
    click.echo(click.style(f"✗ {message}", fg="red"), err=True)
    sys.exit(1)


def _cell(cell: Tuple[int, int]) -> str:
    return f"({cell[0]},{cell[1]})"


def _echo_json(payload) -> None:
    click.echo(json.dumps(payload, indent=2, ensure_ascii=False))


# ---------------------------------------------------------------------------
# Shared options
# ---------------------------------------------------------------------------

table_argument = click.argument(
    "table_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
)


def subtable_options(func):
    func = click.option(
        "--quasi-independence",
        is_flag=True,
        help="Use B = {} (the quasi-independence model)",
    )(func)
    func = click.option(
        "--subtable", "subtable_path",
        type=click.Path(exists=True, dir_okay=False, path_type=Path),
        help="Mask file with 1 (in B), 0 (not in B) and '.' (structural zero)",
    )(func)
    func = click.option(
        "--change-point",
        nargs=2,
        type=int,
        default=None,
        metavar="I J",
        help="Change point (i*, j*); B = {(i, j) in S : i <= i*, j <= j*}",
    )(func)
    return func


def common_options(func):
    func = click.option("--json", "as_json", is_flag=True, help="Emit JSON")(func)
    func = click.option(
        "--allow-separable",
        is_flag=True,
        help="Accept tables with u_i < l_(i+1) (reported as a warning)",
    )(func)
    func = click.option(
        "-c", "--config",
        type=click.Path(exists=True, dir_okay=False, path_type=Path),
        help="Path to YAML configuration file",
    )(func)
    return func


def _load_ladder(table_path: Path, allow_separable: bool) -> Tuple[LadderShape, Table]:
    shape, table = load_table(table_path)
    report = validate_ladder(shape, allow_separable)
    if not report.ok:
        _fail(f"{table_path} is not a ladder determinantal table: " + "; ".join(report.violations))
    return shape, table


def _select_subtable(
    shape: LadderShape,
    change_point: Optional[Tuple[int, int]],
    subtable_path: Optional[Path],
    quasi_independence: bool,
    required: bool = True,
) -> Optional[Subtable]:
    chosen = sum([change_point is not None, subtable_path is not None, quasi_independence])
    if chosen > 1:
        raise click.UsageError("Use only one of --change-point, --subtable and --quasi-independence")
    if chosen == 0:
        if required:
            raise click.UsageError("One of --change-point, --subtable or --quasi-independence is required")
        return None
    if change_point is not None:
        return change_point_subtable(shape, *change_point)
    if subtable_path is not None:
        return load_subtable(subtable_path, shape)
    return quasi_independence_subtable(shape)


def _chain_config(base: ChainConfig, **flags) -> ChainConfig:
    updates = {key: value for key, value in flags.items() if value is not None}
    return ChainConfig(**{**base.model_dump(), **updates})


def _fiber_exact_p(members: Fiber, table: Table, subtable: Subtable, run_config: RunConfig) -> Optional[float]:
    """Exact p value over an enumerated fiber, or None when the fit does not converge."""
    try:
        result = fit_mle(table, subtable, tol=run_config.fit.tol, max_iter=run_config.fit.max_iter)
    except NoConvergenceError as e:
        logger.warning(f"Exact p value unavailable: {e}")
        return None
    return exact_p_value(members, result.fitted, table.counts, run_config.chain.statistic)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

@click.group()
@click.version_option(version=__version__)
@click.option(
    "--log-level",
    type=click.Choice(LOG_LEVELS, case_sensitive=False),
    default=None,
    help="Logging level (default: FIBERMC_LOG_LEVEL or WARNING)",
)
def cli(log_level: Optional[str]):
    """fibermc - exact conditional tests for two-way change-point models on ladder tables."""
    logging.basicConfig(
        level=(log_level or settings.LOG_LEVEL).upper(),
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )


@cli.command()
@table_argument
@click.option(
    "--subtable", "subtable_path",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Also check that this mask is a poset ideal",
)
@click.option("--allow-separable", is_flag=True, help="Report u_i < l_(i+1) as a warning only")
@click.option("--json", "as_json", is_flag=True, help="Emit JSON")
def validate(table_path: Path, subtable_path: Optional[Path], allow_separable: bool, as_json: bool):
    """Check that a table file describes a ladder determinantal table."""
    try:
        shape, _ = load_table(table_path)
        report = validate_ladder(shape, allow_separable)
        ideal = None
        if subtable_path is not None and report.ok:
            subtable = load_subtable(subtable_path, shape)
            ideal = is_poset_ideal(build_lattice(shape), subtable)
    except RUN_ERRORS as e:
        _fail(f"Validation failed: {e}")

    ok = report.ok and (ideal is None or ideal.is_ideal)
    if as_json:
        payload = {
            "ok": ok,
            "n_rows": shape.n_rows,
            "n_cols": shape.n_cols,
            "cells": shape.q,
            "intervals": [list(shape.row_interval(i)) for i in range(1, shape.n_rows + 1)],
            "violations": list(report.violations),
            "warnings": list(report.warnings),
        }
        if ideal is not None:
            payload["ideal"] = ideal.is_ideal
            payload["witness"] = [list(c) for c in ideal.witness] if ideal.witness else None
        _echo_json(payload)
    else:
        if report.ok:
            click.echo(click.style(f"✓ {table_path} is a ladder determinantal table", fg="green"))
            click.echo(f"  Rows: {shape.n_rows}, columns: {shape.n_cols}, cells: {shape.q}")
            intervals = " ".join(
                f"[{lo},{hi}]" for lo, hi in (shape.row_interval(i) for i in range(1, shape.n_rows + 1))
            )
            click.echo(f"  Row intervals: {intervals}")
        else:
            click.echo(click.style(f"✗ {table_path} is not a ladder determinantal table", fg="red"), err=True)
            for violation in report.violations:
                click.echo(f"  - {violation}", err=True)
        for warning in report.warnings:
            click.echo(click.style(f"! {warning}", fg="yellow"), err=True)
        if ideal is not None:
            if ideal.is_ideal:
                click.echo(click.style(f"✓ {subtable_path} is a poset ideal", fg="green"))
            else:
                a, b = ideal.witness
                click.echo(
                    click.style(
                        f"✗ {subtable_path} is not a poset ideal: {_cell(a)} is in B but {_cell(b)} is not",
                        fg="red",
                    ),
                    err=True,
                )
    if not ok:
        sys.exit(1)


@cli.command()
@table_argument
@subtable_options
@common_options
@click.option("--check", is_flag=True, help="Verify the lattice correspondence and indispensability of every move")
def basis(table_path, change_point, subtable_path, quasi_independence, config, allow_separable, as_json, check):
    """Print the unique minimal Markov basis, one z(i1,i2;j1,j2) per line."""
    try:
        shape, _ = _load_ladder(table_path, allow_separable)
        subtable = _select_subtable(shape, change_point, subtable_path, quasi_independence)
        moves = generate_markov_basis(shape, subtable)
        if check:
            matrix = configuration_matrix(shape, subtable)
            matches_lattice = verify_basis_equals_lattice(shape, subtable)
            indispensable = [indispensability_check(matrix, move) for move in moves]
    except RUN_ERRORS as e:
        _fail(str(e))

    if as_json:
        payload = {
            "moves": [
                {
                    "move": move.label,
                    "cells": [[i, j, coefficient] for (i, j), coefficient in sorted(move.sparse().items())],
                }
                for move in moves
            ]
        }
        if check:
            payload["matches_lattice"] = matches_lattice
            payload["all_indispensable"] = all(indispensable)
        _echo_json(payload)
    else:
        for move in moves:
            click.echo(move.label)
        if check:
            mark = "✓" if matches_lattice else "✗"
            click.echo(f"{mark} moves of incomparable pairs {'equal' if matches_lattice else 'differ from'} the basis", err=True)
            mark = "✓" if all(indispensable) else "✗"
            click.echo(f"{mark} {sum(indispensable)} of {len(moves)} moves are indispensable", err=True)
    if check and not (matches_lattice and all(indispensable)):
        sys.exit(1)


@cli.command()
@table_argument
@subtable_options
@common_options
def lattice(table_path, change_point, subtable_path, quasi_independence, config, allow_separable, as_json):
    """Print the Hasse diagram, the chains of join-irreducibles and the incomparable pairs."""
    try:
        shape, _ = _load_ladder(table_path, allow_separable)
        subtable = _select_subtable(shape, change_point, subtable_path, quasi_independence, required=False)
        cell_lattice = build_lattice(shape)
        edges = hasse_edges(cell_lattice)
        irreducibles = join_irreducibles(cell_lattice)
        birkhoff = verify_birkhoff(cell_lattice)
        pairs = incomparable_pairs(cell_lattice, subtable) if subtable is not None else None
    except RUN_ERRORS as e:
        _fail(str(e))

    if as_json:
        payload = {
            "edges": [[list(x), list(y)] for x, y in edges],
            "chain_c": [list(c) for c in irreducibles.chain_c],
            "chain_d": [list(c) for c in irreducibles.chain_d],
            "pinned": [list(c) for c in irreducibles.pinned],
            "planar": irreducibles.planar,
            "birkhoff": birkhoff,
        }
        if pairs is not None:
            payload["pairs"] = [
                {
                    "alpha": list(p.alpha),
                    "beta": list(p.beta),
                    "class": p.pair_class.value,
                    "move": pair_to_move(p).label,
                }
                for p in pairs
            ]
        _echo_json(payload)
        return

    click.echo(f"Hasse diagram ({len(edges)} cover relations):")
    for x, y in edges:
        click.echo(f"  {_cell(x)} < {_cell(y)}")
    click.echo("Chain C: " + " ".join(_cell(c) for c in irreducibles.chain_c))
    click.echo("Chain D: " + " ".join(_cell(c) for c in irreducibles.chain_d))
    if irreducibles.pinned:
        click.echo("Pinned: " + " ".join(_cell(c) for c in irreducibles.pinned))
    click.echo(f"Birkhoff representation: {'verified' if birkhoff else 'FAILED'}")
    if pairs is not None:
        click.echo(f"Incomparable pairs ({len(pairs)}):")
        for p in pairs:
            click.echo(f"  {{{_cell(p.alpha)},{_cell(p.beta)}}}  {p.pair_class.value}  {pair_to_move(p).label}")


def _fitted_grid(shape: LadderShape, fitted) -> List[List[Optional[float]]]:
    grid = []
    for i in range(1, shape.n_rows + 1):
        grid.append([
            fitted[shape.index((i, j))] if (i, j) in shape else None
            for j in range(1, shape.n_cols + 1)
        ])
    return grid


@cli.command()
@table_argument
@subtable_options
@common_options
def fit(table_path, change_point, subtable_path, quasi_independence, config, allow_separable, as_json):
    """Fit the model by iterative scaling and report Pearson's chi-square."""
    try:
        run_config = resolve_config(config)
        shape, table = _load_ladder(table_path, allow_separable)
        subtable = _select_subtable(shape, change_point, subtable_path, quasi_independence)
        result = fit_mle(table, subtable, tol=run_config.fit.tol, max_iter=run_config.fit.max_iter)
    except RUN_ERRORS as e:
        _fail(str(e))

    grid = _fitted_grid(shape, result.fitted)
    if as_json:
        _echo_json({
            "chi2": result.chi_square,
            "df": result.df,
            "asymptotic_p": result.asymptotic_p,
            "iterations": result.iterations,
            "residual": result.residual,
            "fitted": grid,
        })
        return

    tokens = [[STRUCTURAL_ZERO if m is None else f"{m:.2f}" for m in row] for row in grid]
    width = max(len(t) for row in tokens for t in row)
    for row in tokens:
        click.echo(" ".join(t.rjust(width) for t in row))
    click.echo(
        f"chi-square {result.chi_square:.3f}, df {result.df}, "
        f"asymptotic p {result.asymptotic_p:.3f} "
        f"({result.iterations} cycles, residual {result.residual:.2e})"
    )


def emit_histogram(summary: ChainSummary, path: Union[str, Path], reference: bool = False) -> None:
    """
    Write the chain's statistic histogram as "midpoint<TAB>count" lines.

    With reference, a third column holds the expected count per bin under
    the asymptotic chi-square law with the model's df. A chain with an
    empty basis never leaves the observed table, so only its single
    occupied bin is written.
    """
    total = sum(summary.histogram)
    w = summary.bin_width
    lines = []
    for k, (midpoint, count) in enumerate(summary.histogram_rows()):
        if summary.n_moves == 0 and count == 0:
            continue
        row = [f"{midpoint:.6g}", str(count)]
        if reference and summary.df > 0:
            mass = chi2.cdf((k + 1) * w, summary.df) - chi2.cdf(k * w, summary.df)
            row.append(f"{total * mass:.6g}")
        lines.append("\t".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def _summary_payload(summary: ChainSummary) -> dict:
    return {
        "p_hat": summary.p_hat,
        "std_error": summary.std_error,
        "chi2_obs": summary.chi2_obs,
        "df": summary.df,
        "asymptotic_p": summary.asymptotic_p,
        "n_moves": summary.n_moves,
        "acceptance_rate": summary.acceptance_rate,
        "statistic": summary.statistic.value,
        "samples": summary.samples,
        "replicates": summary.replicates,
        "replicate_p_hats": list(summary.replicate_p_hats),
        "seed": summary.seed,
    }


@cli.command()
@table_argument
@subtable_options
@common_options
@click.option("--burn-in", type=click.IntRange(min=0), help="Discarded steps [default: 50000]")
@click.option("--samples", type=click.IntRange(min=1), help="Retained samples [default: 100000]")
@click.option("--thin", type=click.IntRange(min=1), help="Keep every k-th step [default: 1]")
@click.option("--seed", type=click.IntRange(min=0, max=2**64 - 1), help="Random seed")
@click.option("--replicates", type=click.IntRange(min=1), help="Independent chains")
@click.option("--workers", type=click.IntRange(min=1), help="Processes for replicate chains")
@click.option("--statistic", type=click.Choice([s.value for s in StatisticName]), help="Test statistic")
@click.option("--bin-width", type=click.FloatRange(min=0, min_open=True), help="Histogram bin width")
@click.option("--hist-out", type=click.Path(dir_okay=False, path_type=Path), help="Write the histogram here")
@click.option("--hist-reference", is_flag=True, help="Add expected chi-square counts to the histogram")
def test(
    table_path, change_point, subtable_path, quasi_independence, config, allow_separable, as_json,
    burn_in, samples, thin, seed, replicates, workers, statistic, bin_width, hist_out, hist_reference,
):
    """Estimate the conditional p value with the Metropolis chain."""
    try:
        run_config = resolve_config(config)
        chain_config = _chain_config(
            run_config.chain,
            burn_in=burn_in, samples=samples, thin=thin, seed=seed, replicates=replicates,
            workers=workers, statistic=statistic, bin_width=bin_width,
        )
        shape, table = _load_ladder(table_path, allow_separable)
        subtable = _select_subtable(shape, change_point, subtable_path, quasi_independence)
        summary = run_chain(table, subtable, chain_config, run_config.fit)
        hist_path = hist_out or run_config.output.hist_out
        if hist_path:
            emit_histogram(summary, hist_path, reference=hist_reference)
    except RUN_ERRORS as e:
        _fail(str(e))

    if as_json:
        _echo_json(_summary_payload(summary))
        return
    click.echo(f"Subtable: {subtable.describe()}")
    click.echo(f"Markov basis: {summary.n_moves} moves")
    click.echo(f"Observed {summary.statistic.value}: {summary.chi2_obs:.3f} (df {summary.df})")
    click.echo(f"Asymptotic p: {summary.asymptotic_p:.3f}")
    click.echo(f"Estimated p:  {summary.p_hat:.3f} (se {summary.std_error:.3f})")
    click.echo(f"Acceptance rate: {summary.acceptance_rate:.3f}")
    if hist_path:
        click.echo(f"Histogram written to {hist_path}", err=True)


@cli.command()
@table_argument
@common_options
@click.option("--burn-in", type=click.IntRange(min=0), help="Discarded steps per candidate [default: 10000]")
@click.option("--samples", type=click.IntRange(min=1), help="Retained samples per candidate [default: 20000]")
@click.option("--seed", type=click.IntRange(min=0, max=2**64 - 1), help="Seed of the first candidate")
@click.option("--workers", type=click.IntRange(min=1), help="Processes for candidates")
@click.option("--statistic", type=click.Choice([s.value for s in StatisticName]), help="Test statistic")
def scan(table_path, config, allow_separable, as_json, burn_in, samples, seed, workers, statistic):
    """Rank every change point (i*, j*) in S by its estimated p value."""
    try:
        run_config = resolve_config(config)
        chain_config = _chain_config(
            run_config.scan_chain(),
            burn_in=burn_in, samples=samples, seed=seed, workers=workers, statistic=statistic,
        )
        _, table = _load_ladder(table_path, allow_separable)
        records = scan_change_points(table, chain_config, run_config.fit)
    except RUN_ERRORS as e:
        _fail(str(e))

    if as_json:
        _echo_json([record.model_dump(mode="json") for record in records])
        return
    click.echo(f"{'(i*,j*)':>8}  {'p_hat':>6}  {'se':>6}  {'df':>3}  {'asym p':>6}")
    for r in records:
        if r.error is not None:
            click.echo(f"{_cell(r.change_point):>8}  error: {r.error}")
            continue
        marker = "  best" if r.best else ("  co-leader" if r.co_leader else "")
        click.echo(
            f"{_cell(r.change_point):>8}  {r.p_hat:6.3f}  {r.std_error:6.3f}  "
            f"{r.df:3d}  {r.asymptotic_p:6.3f}{marker}"
        )


@cli.command()
@table_argument
@subtable_options
@common_options
@click.option("--cap", type=click.IntRange(min=1), help="Largest fiber to enumerate [default: 1000000]")
def fiber(table_path, change_point, subtable_path, quasi_independence, config, allow_separable, as_json, cap):
    """Enumerate the fiber of the observed table and check Markov basis connectivity."""
    try:
        run_config = resolve_config(config)
        cap = cap or run_config.fiber.cap
        shape, table = _load_ladder(table_path, allow_separable)
        subtable = _select_subtable(shape, change_point, subtable_path, quasi_independence)
        matrix = configuration_matrix(shape, subtable)
        members = enumerate_fiber(matrix, sufficient_statistic(table, subtable), cap=cap)
        moves = generate_markov_basis(shape, subtable)
        connectivity = connectivity_check(members, moves)
        p_exact = _fiber_exact_p(members, table, subtable, run_config)
    except CapExceededError as e:
        _fail(f"Refusing to continue: {e}")
    except RUN_ERRORS as e:
        _fail(str(e))

    if as_json:
        _echo_json({
            "size": len(members),
            "n_moves": len(moves),
            "df": degrees_of_freedom(matrix),
            "connected": connectivity.connected,
            "components": connectivity.components,
            "exact_p": p_exact,
        })
    else:
        click.echo(f"Fiber size: {len(members)}")
        click.echo(f"Markov basis: {len(moves)} moves")
        if connectivity.connected:
            click.echo(click.style("✓ Connected", fg="green") + f" ({connectivity.components} component)")
        else:
            click.echo(click.style("✗ Not connected", fg="red") + f" ({connectivity.components} components)")
        if p_exact is None:
            click.echo("Exact conditional p: unavailable (fit did not converge)")
        else:
            click.echo(f"Exact conditional p: {p_exact:.6f}")
    if not connectivity.connected:
        sys.exit(1)


if __name__ == "__main__":
    cli()
