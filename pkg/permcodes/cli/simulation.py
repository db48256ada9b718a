import csv
import time
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Tuple
import numpy as np
from tqdm import tqdm
from permcodes.codebook import (StructureKind, DecodeStatus, ConstraintRule, PartialGrid, InvalidParameterError,
                                build_structure, sample_codeword, decode_erasure)
from permcodes.codebook.constants import KNOWN_RATES
from .constants import (SIM_COLUMNS, DEFAULT_MIN_CODEWORDS, DEFAULT_MIN_BLOCK_ERRORS, DEFAULT_MAX_TRIALS,
                        DEFAULT_PATTERNS_PER_CODEWORD)

logger = logging.getLogger('Permcodes.Simulation')


@dataclass(frozen=True)
class SimConfig:
    '''
    Erasure-channel block error simulation settings

    Attributes
    ----------
    structure : StructureKind
    q : int
    eps_grid : tuple of float
        Erasure probabilities to simulate
    seed : int
    min_codewords : int
        Codewords to sample per point before the point may stop
    min_block_errors : int
        Block errors to collect per point before the point may stop
    max_trials : int
        Decoded blocks after which a point stops regardless
    patterns_per_codeword : int
        Erasure patterns applied to each sampled codeword
    workers : int
        Processes decoding batches in parallel
    rule : ConstraintRule
    '''
    structure: StructureKind
    q: int
    eps_grid: Tuple[float, ...]
    seed: int
    min_codewords: int = DEFAULT_MIN_CODEWORDS
    min_block_errors: int = DEFAULT_MIN_BLOCK_ERRORS
    max_trials: int = DEFAULT_MAX_TRIALS
    patterns_per_codeword: int = DEFAULT_PATTERNS_PER_CODEWORD
    workers: int = 1
    rule: ConstraintRule = ConstraintRule.TRELLIS

    def __post_init__(self):
        object.__setattr__(self, 'structure', StructureKind(self.structure))
        object.__setattr__(self, 'eps_grid', tuple(float(e) for e in self.eps_grid))
        if not self.eps_grid or any(not 0.0 <= e <= 1.0 for e in self.eps_grid):
            raise InvalidParameterError(f"Erasure probabilities must lie in [0, 1], got {self.eps_grid}")
        if self.min_block_errors < 1:
            raise InvalidParameterError("min_block_errors must be at least 1")
        if self.min_codewords < 0 or self.max_trials < 1 or self.patterns_per_codeword < 1 or self.workers < 1:
            raise InvalidParameterError("Simulation counts must be positive")


@dataclass
class SimRecord:
    eps: float
    trials: int = 0
    block_errors: int = 0
    symbol_errors: int = 0
    stalled: int = 0
    contradictions: int = 0
    seconds: float = 0.0

    @property
    def bler(self):
        return self.block_errors / self.trials if self.trials else 0.0

    @property
    def ser(self):
        return self.symbol_errors / self.trials if self.trials else 0.0

    def add(self, batch):
        self.trials += batch.trials
        self.block_errors += batch.block_errors
        self.symbol_errors += batch.symbol_errors
        self.stalled += batch.stalled
        self.contradictions += batch.contradictions

    def as_row(self, timing=True):
        return [f"{self.eps:.6g}", self.trials, self.block_errors, f"{self.bler:.6e}", self.symbol_errors,
                f"{self.ser:.6e}", self.stalled, self.contradictions, f"{self.seconds:.3f}" if timing else "0"]


@dataclass(frozen=True)
class BatchOutcome:
    trials: int
    block_errors: int
    symbol_errors: int
    stalled: int
    contradictions: int


def parse_eps_grid(text):
    '''
    "start:stop:step" with an inclusive stop, or a comma-separated list

    Returns
    -------
    grid : tuple of float
    '''
    if ":" in text:
        try:
            start, stop, step = (float(part) for part in text.split(":"))
        except ValueError:
            raise InvalidParameterError(f"Unreadable erasure grid '{text}'")
        if step <= 0 or stop < start:
            raise InvalidParameterError(f"Erasure grid '{text}' is empty")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 10) for i in range(count))
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise InvalidParameterError(f"Unreadable erasure grid '{text}'")


def run_batch(graph, eps, patterns, seed, point, batch, rule=ConstraintRule.TRELLIS):
    '''
    Sample one codeword and decode `patterns` independent erasure patterns of it

    The random streams are derived from (seed, point, batch) only.
    '''
    codeword_seed, pattern_seed = np.random.SeedSequence(seed, spawn_key=(point, batch)).spawn(2)
    codeword = sample_codeword(graph, codeword_seed)
    rng = np.random.default_rng(pattern_seed)
    received = PartialGrid.from_codeword(graph.q, codeword)
    full = (1 << graph.q) - 1

    block_errors = symbol_errors = stalled = contradictions = 0
    for _ in range(patterns):
        erased = rng.random(graph.num_vars) < eps
        if not erased.any():
            continue
        observed = PartialGrid(graph.q, tuple(full if e else c for e, c in zip(erased, received.cells)))
        grid, status = decode_erasure(graph, observed, rule)
        if status == DecodeStatus.DECODED:
            continue
        block_errors += 1
        symbol_errors += sum(1 for cell, true in zip(grid.cells, received.cells) if cell != true)
        if status == DecodeStatus.CONTRADICTION:
            contradictions += 1
        else:
            stalled += 1
    return BatchOutcome(patterns, block_errors, symbol_errors, stalled, contradictions)


def _point_done(record, codewords, config):
    if record.trials >= config.max_trials:
        return True
    return codewords >= config.min_codewords and record.block_errors >= config.min_block_errors


def simulate_point(graph, config, point, executor=None, progress=False):
    eps = config.eps_grid[point]
    record = SimRecord(eps)
    started = time.perf_counter()
    codewords = 0
    wave = config.workers
    with tqdm(desc=f"eps={eps:.3f}", disable=not progress, leave=False) as bar:
        while not _point_done(record, codewords, config):
            batches = range(codewords, codewords + wave)
            args = ([graph] * wave, [eps] * wave, [config.patterns_per_codeword] * wave, [config.seed] * wave,
                    [point] * wave, list(batches), [config.rule] * wave)
            outcomes = executor.map(run_batch, *args) if executor is not None else map(run_batch, *args)
            for outcome in outcomes:
                record.add(outcome)
                codewords += 1
                bar.update(outcome.trials)
                if _point_done(record, codewords, config):
                    break
    record.seconds = time.perf_counter() - started
    logger.info(f"eps={eps:.4f}: {record.block_errors}/{record.trials} block errors "
                f"(BLER {record.bler:.4e}) from {codewords} codewords")
    return record


def simulate_erasure(config, progress=False):
    '''
    Block and symbol error rates of erasure decoding over a grid of erasure probabilities

    Each point decodes batches of `patterns_per_codeword` erasure patterns on a
    freshly sampled codeword until enough codewords and block errors were seen.
    Batches are consumed in order, so results do not depend on `workers`.

    Returns
    -------
    records : [SimRecord]

    Raises
    ------
    ConstructionError
        No codeword of the structure could be sampled
    '''
    graph = build_structure(config.structure, config.q)
    if (rate := KNOWN_RATES.get((config.structure.value, config.q))) is not None:
        logger.info(f"Threshold marker for {config.structure} q={config.q}: 1 - R = {1 - rate:.4f}")

    records = []
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as executor:
            for point in range(len(config.eps_grid)):
                records.append(simulate_point(graph, config, point, executor, progress))
    else:
        for point in range(len(config.eps_grid)):
            records.append(simulate_point(graph, config, point, None, progress))
    return records


def write_records_csv(records, stream, timing=True):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SIM_COLUMNS)
    for record in records:
        writer.writerow(record.as_row(timing))
