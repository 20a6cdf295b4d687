"""
Metropolis sampling over a fiber with the minimal Markov basis.

The chain starts at the observed table, proposes x + e z with (z, e)
uniform over basis x {+1, -1}, and targets f(x | t) proportional to
prod 1 / x_ij!. Infeasible proposals count as a stay.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.special import gammaln

from .basis import Move, apply_move, generate_markov_basis
from .config.schema import ChainConfig, FitConfig, StatisticName
from .exceptions import EmptyBasisError, FiberMCError
from .fit import fit_mle
from .model import Cell, Subtable, Table, change_point_subtable
from .statistics import TIE_SLACK, CellwiseStatistic

logger = logging.getLogger(__name__)

DRAW_CHUNK = 8192
RESYNC_EVERY = 4096


class LogFactorial:
    """Table of log(k!) that grows on demand."""

    def __init__(self, size: int = 1024):
        self._values = gammaln(np.arange(size) + 1.0).tolist()

    def __getitem__(self, k: int) -> float:
        if k >= len(self._values):
            self._extend(k + 1)
        return self._values[k]

    def _extend(self, size: int) -> None:
        size = max(size, 2 * len(self._values))
        self._values = gammaln(np.arange(size) + 1.0).tolist()


class ChainSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    p_hat: float
    std_error: float
    acceptance_rate: float
    chi2_obs: float
    statistic: StatisticName
    histogram: Tuple[int, ...]
    bin_width: float
    replicate_p_hats: Tuple[float, ...]
    samples: int
    replicates: int
    n_moves: int
    df: int
    asymptotic_p: float
    seed: int

    def histogram_rows(self) -> List[Tuple[float, int]]:
        """(bin midpoint, count) for bins [k w, (k + 1) w)."""
        return [((k + 0.5) * self.bin_width, count) for k, count in enumerate(self.histogram)]


class ReplicateResult(BaseModel):
    hits: int
    retained: int
    accepted: int
    steps: int
    bins: Dict[int, int]


class ScanRecord(BaseModel):
    change_point: Cell
    p_hat: Optional[float] = None
    std_error: Optional[float] = None
    df: Optional[int] = None
    asymptotic_p: Optional[float] = None
    n_moves: Optional[int] = None
    best: bool = False
    co_leader: bool = False
    error: Optional[str] = None


def metropolis_step(state: Table, basis: Sequence[Move], rng: np.random.Generator) -> Tuple[Table, bool]:
    """
    One Metropolis update.

    Returns:
        (next state, accepted). A rejected or infeasible proposal returns
        the current state.

    Raises:
        EmptyBasisError: If there are no moves to propose.
    """
    if not basis:
        raise EmptyBasisError("cannot take a Metropolis step with an empty basis")
    draw = int(rng.integers(2 * len(basis)))
    move = basis[draw // 2]
    sign = 1 if draw % 2 == 0 else -1
    proposal = apply_move(state, move, sign)
    if proposal is None:
        return state, False

    log_ratio = 0.0
    for cell in move.cells:
        log_ratio += gammaln(state[cell] + 1.0) - gammaln(proposal[cell] + 1.0)
    if log_ratio >= 0 or rng.random() < math.exp(log_ratio):
        return proposal, True
    return state, False


def _run_replicate(
    counts: Sequence[int],
    moves: Sequence[Tuple[int, int, int, int]],
    fitted: Sequence[float],
    statistic: StatisticName,
    observed: float,
    cfg: ChainConfig,
    seed: np.random.SeedSequence,
) -> ReplicateResult:
    rng = np.random.default_rng(seed)
    log_factorial = LogFactorial(sum(counts) + 2)
    cellwise = CellwiseStatistic(fitted, statistic)
    contribution = cellwise.contribution

    x = list(counts)
    value = cellwise.total(x)
    threshold = observed - TIE_SLACK
    n_draws = 2 * len(moves)
    total_steps = cfg.burn_in + cfg.samples * cfg.thin

    hits = retained = accepted = 0
    bins: Dict[int, int] = {}
    draws: List[int] = []
    uniforms: List[float] = []
    pos = len(draws)

    for step in range(1, total_steps + 1):
        if pos == len(draws):
            chunk = min(DRAW_CHUNK, total_steps - step + 1)
            draws = rng.integers(n_draws, size=chunk).tolist()
            uniforms = rng.random(chunk).tolist()
            pos = 0
        draw, u = draws[pos], uniforms[pos]
        pos += 1

        p1, p2, n1, n2 = moves[draw >> 1]
        up1, up2, down1, down2 = (p1, p2, n1, n2) if draw & 1 == 0 else (n1, n2, p1, p2)
        if x[down1] > 0 and x[down2] > 0:
            a, b, c, d = x[up1], x[up2], x[down1], x[down2]
            log_ratio = (
                log_factorial[a] + log_factorial[b] + log_factorial[c] + log_factorial[d]
                - log_factorial[a + 1] - log_factorial[b + 1]
                - log_factorial[c - 1] - log_factorial[d - 1]
            )
            if log_ratio >= 0 or u < math.exp(log_ratio):
                value += (
                    contribution(up1, a + 1) - contribution(up1, a)
                    + contribution(up2, b + 1) - contribution(up2, b)
                    + contribution(down1, c - 1) - contribution(down1, c)
                    + contribution(down2, d - 1) - contribution(down2, d)
                )
                x[up1], x[up2], x[down1], x[down2] = a + 1, b + 1, c - 1, d - 1
                accepted += 1

        if step % RESYNC_EVERY == 0:
            value = cellwise.total(x)

        if step > cfg.burn_in and (step - cfg.burn_in) % cfg.thin == 0:
            retained += 1
            if value >= threshold:
                hits += 1
            k = int(max(value, 0.0) // cfg.bin_width)
            bins[k] = bins.get(k, 0) + 1

    return ReplicateResult(hits=hits, retained=retained, accepted=accepted, steps=total_steps, bins=bins)


def _run_replicate_job(args) -> ReplicateResult:
    return _run_replicate(*args)


def _histogram(bins: Dict[int, int]) -> Tuple[int, ...]:
    if not bins:
        return ()
    top = max(bins)
    return tuple(bins.get(k, 0) for k in range(top + 1))


def run_chain(
    table: Table,
    subtable: Subtable,
    cfg: Optional[ChainConfig] = None,
    fit_config: Optional[FitConfig] = None,
) -> ChainSummary:
    """
    Estimate the conditional p value of the model given by B.

    Runs cfg.replicates independent chains seeded from cfg.seed, each
    with cfg.burn_in discarded steps and cfg.samples retained samples.
    """
    cfg = cfg or ChainConfig()
    fit_config = fit_config or FitConfig()
    fit = fit_mle(table, subtable, tol=fit_config.tol, max_iter=fit_config.max_iter)
    basis = generate_markov_basis(table.shape, subtable)
    cellwise = CellwiseStatistic(fit.fitted, cfg.statistic)
    observed = cellwise.total(table.counts)

    common = dict(
        chi2_obs=observed,
        statistic=cfg.statistic,
        bin_width=cfg.bin_width,
        samples=cfg.samples,
        replicates=cfg.replicates,
        n_moves=len(basis),
        df=fit.df,
        asymptotic_p=fit.asymptotic_p,
        seed=cfg.seed,
    )

    if not basis:
        logger.warning(
            f"Markov basis is empty for {subtable.describe()}; "
            f"the chain stays at the observed table"
        )
        total = cfg.samples * cfg.replicates
        k = int(max(observed, 0.0) // cfg.bin_width)
        return ChainSummary(
            p_hat=1.0,
            std_error=0.0,
            acceptance_rate=0.0,
            histogram=_histogram({k: total}),
            replicate_p_hats=(1.0,) * cfg.replicates,
            **common,
        )

    moves = [move.indices(table.shape) for move in basis]
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.replicates)
    jobs = [
        (table.counts, moves, fit.fitted, cfg.statistic, observed, cfg, seed)
        for seed in seeds
    ]
    if cfg.workers > 1 and cfg.replicates > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, cfg.replicates)) as pool:
            results = list(pool.map(_run_replicate_job, jobs))
    else:
        results = [_run_replicate_job(job) for job in jobs]

    hits = sum(r.hits for r in results)
    retained = sum(r.retained for r in results)
    bins: Dict[int, int] = {}
    for r in results:
        for k, count in r.bins.items():
            bins[k] = bins.get(k, 0) + count

    p_hat = hits / retained
    replicate_p_hats = tuple(r.hits / r.retained for r in results)
    variance = p_hat * (1.0 - p_hat) / retained
    if len(results) > 1:
        variance += float(np.var(replicate_p_hats, ddof=1)) / len(results)

    summary = ChainSummary(
        p_hat=p_hat,
        std_error=math.sqrt(variance),
        acceptance_rate=sum(r.accepted for r in results) / sum(r.steps for r in results),
        histogram=_histogram(bins),
        replicate_p_hats=replicate_p_hats,
        **common,
    )
    logger.info(
        f"Chain finished: p_hat {summary.p_hat:.4f} (se {summary.std_error:.4f}), "
        f"acceptance {summary.acceptance_rate:.3f}"
    )
    return summary


def _scan_candidate(args) -> ScanRecord:
    table, cell, cfg, fit_config = args
    try:
        subtable = change_point_subtable(table.shape, *cell)
        summary = run_chain(table, subtable, cfg, fit_config)
    except FiberMCError as e:
        logger.warning(f"Change point {cell} failed: {e}")
        return ScanRecord(change_point=cell, error=str(e))
    return ScanRecord(
        change_point=cell,
        p_hat=summary.p_hat,
        std_error=summary.std_error,
        df=summary.df,
        asymptotic_p=summary.asymptotic_p,
        n_moves=summary.n_moves,
    )


def scan_change_points(
    table: Table,
    cfg: Optional[ChainConfig] = None,
    fit_config: Optional[FitConfig] = None,
) -> List[ScanRecord]:
    """
    Run a chain for every candidate (i*, j*) in S and rank them by p_hat.

    Candidate k (in cell order) uses seed cfg.seed + k. The leader is
    marked best; candidates within two combined standard errors of it are
    marked co_leader. Failing candidates carry an error and sort last.
    """
    cfg = cfg or ChainConfig()
    candidate_cfg = cfg.model_copy(update={"workers": 1})
    jobs = [
        (table, cell, candidate_cfg.model_copy(update={"seed": (cfg.seed + k) % 2**64}), fit_config)
        for k, cell in enumerate(table.shape.cells)
    ]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_scan_candidate, jobs))
    else:
        records = []
        for job in jobs:
            records.append(_scan_candidate(job))
            logger.info(f"Scanned change point {job[1]}: p_hat {records[-1].p_hat}")

    records.sort(key=lambda r: (r.p_hat is None, -(r.p_hat or 0.0), r.change_point))
    if records and records[0].p_hat is not None:
        leader = records[0]
        records[0] = leader.model_copy(update={"best": True})
        for k in range(1, len(records)):
            r = records[k]
            if r.p_hat is None:
                continue
            spread = 2.0 * math.hypot(leader.std_error, r.std_error)
            if leader.p_hat - r.p_hat <= spread:
                records[k] = r.model_copy(update={"co_leader": True})
    return records
