'''
Universal encoder for codes with permutation constraints.

Source bits are turned into a sequence of uniform choices of varying size by
an exact arithmetic decoder; each choice picks one of the candidates that the
erasure decoder still allows for the first undetermined cell. Recovery replays
the same decisions and runs the arithmetic coder in the opposite direction.
'''
import math
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import List, Optional, Tuple
import numpy as np
from more_itertools import chunked
from tqdm import tqdm
from .constants import DecodeStatus, DEFAULT_MAX_ATTEMPTS, MONTE_CARLO_SOURCE_BITS
from .constraint_graph import PartialGrid, symbol_mask, validate
from .erasure_decoder import ErasureDecoder
from .exceptions import InvalidParameterError, SourceExhaustedError, EncodingFailureError, ReplayError

logger = logging.getLogger('Codebook.Encoder')

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class EncoderConfig:
    '''
    Attributes
    ----------
    max_attempts : int
        Depth of the prefix reservation; attempt `max_attempts` draws from every candidate
    scan_order : tuple of int, optional
        Order in which undetermined cells are considered, index order when None
    '''
    max_attempts: int = DEFAULT_MAX_ATTEMPTS
    scan_order: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        if self.max_attempts < 1:
            raise InvalidParameterError(f"max_attempts must be at least 1, got {self.max_attempts}")
        if self.scan_order is not None:
            object.__setattr__(self, 'scan_order', tuple(int(v) for v in self.scan_order))

    def order(self, num_vars):
        if self.scan_order is None:
            return range(num_vars)
        if sorted(self.scan_order) != list(range(num_vars)):
            raise InvalidParameterError("scan_order must be a permutation of the variable indices")
        return self.scan_order


@dataclass
class CoderState:
    '''
    Arithmetic decoder state turning source bits into uniform choices

    Both intervals live in a frame that is doubled whenever the choice interval
    falls inside one half of it, which retires the bit every point agrees on.

    Attributes
    ----------
    lo, hi : Fraction
        Choice interval C = [lo, hi)
    p, m : int
        Dyadic source interval D = [p / 2^m, (p + 1) / 2^m)
    cursor : int
        Source bits consumed so far
    retired : int
        Bits shifted out of the frame
    '''
    lo: Fraction = Fraction(0)
    hi: Fraction = Fraction(1)
    p: int = 0
    m: int = 0
    cursor: int = 0
    retired: int = 0

    @property
    def source_interval(self):
        return Fraction(self.p, 1 << self.m), Fraction(self.p + 1, 1 << self.m)

    def snapshot(self):
        return replace(self)

    def restore(self, snapshot):
        self.lo, self.hi = snapshot.lo, snapshot.hi
        self.p, self.m = snapshot.p, snapshot.m
        self.cursor, self.retired = snapshot.cursor, snapshot.retired

    def _renormalize(self):
        while self.hi <= HALF or self.lo >= HALF:
            bit = 1 if self.lo >= HALF else 0
            self.lo = 2 * self.lo - bit
            self.hi = 2 * self.hi - bit
            self.p -= bit << (self.m - 1)
            self.m -= 1
            self.retired += 1


def draw_uniform(state, source, k):
    '''
    Draw an index uniform on [0, k) from the source bits

    Bits are read one at a time and only while the source interval straddles
    a boundary between the k equal parts of the choice interval.

    Raises
    ------
    SourceExhaustedError
        The source ran out before the part was determined
    '''
    if k < 1:
        raise InvalidParameterError(f"Cardinality must be at least 1, got {k}")
    if k == 1:
        return 0
    width = (state.hi - state.lo) / k
    while True:
        d_lo, d_hi = state.source_interval
        part = min(math.floor((d_lo - state.lo) / width), k - 1)
        if d_hi <= state.lo + (part + 1) * width:
            break
        if state.cursor >= len(source):
            raise SourceExhaustedError(f"Source exhausted after {state.cursor} bits")
        state.p = 2 * state.p + int(source[state.cursor])
        state.m += 1
        state.cursor += 1
    state.lo, state.hi = state.lo + part * width, state.lo + (part + 1) * width
    state._renormalize()
    return part


@dataclass
class RecoveryState:
    '''
    Choice interval of the inverse coder and the consensus bits emitted so far
    '''
    lo: Fraction = Fraction(0)
    hi: Fraction = Fraction(1)
    bits: List[int] = field(default_factory=list)

    def refine(self, part, k):
        if k == 1:
            return
        width = (self.hi - self.lo) / k
        self.lo, self.hi = self.lo + part * width, self.lo + (part + 1) * width
        while self.hi <= HALF or self.lo >= HALF:
            bit = 1 if self.lo >= HALF else 0
            self.bits.append(bit)
            self.lo = 2 * self.lo - bit
            self.hi = 2 * self.hi - bit

    def flush(self):
        '''Bits of the leftmost shortest dyadic interval inside the choice interval'''
        m = 0
        while True:
            scale = 1 << m
            p = math.ceil(self.lo * scale)
            if Fraction(p + 1, scale) <= self.hi:
                return [(p >> (m - 1 - b)) & 1 for b in range(m)]
            m += 1


@dataclass(frozen=True)
class Draw:
    var: int
    cardinality: int
    index: int
    symbol: int


@dataclass
class EncodeResult:
    '''
    Attributes
    ----------
    codeword : np.ndarray
    bits_consumed : int
        Source bits read by the successful attempt
    attempts : int
        Attempt that produced the codeword
    rate : float
        Sum of log2 of the draw cardinalities over N log2 q
    draws : list of Draw
    '''
    codeword: np.ndarray
    bits_consumed: int
    attempts: int
    rate: float
    draws: List[Draw]


def _next_decision(grid_cells, order):
    for var in order:
        mask = int(grid_cells[var])
        if mask & (mask - 1):
            return var
    return None


def _encode_attempt(graph, source, state, order, reserved, reserve_first):
    '''
    One encoding attempt; `reserved` holds how many leading decisions take their
    last candidate without a draw

    Returns the draws and the codeword, or None on an encoding failure
    '''
    decoder = ErasureDecoder(graph, PartialGrid.erased(graph.q, graph.num_vars))
    draws = []
    decision = 0
    while True:
        _, status = decoder.run()
        if status == DecodeStatus.CONTRADICTION:
            return None
        if status == DecodeStatus.DECODED:
            return draws, decoder.grid().to_codeword()
        var = _next_decision(decoder.cells, order)
        candidates = [s for s in range(1, graph.q + 1) if decoder.cells[var] & symbol_mask(s)]
        if decision < reserved:
            symbol = candidates[-1]
        else:
            k = len(candidates) - 1 if (decision == reserved and reserve_first) else len(candidates)
            index = draw_uniform(state, source, k)
            symbol = candidates[index]
            draws.append(Draw(var, k, index, symbol))
        decoder.observe(var, symbol_mask(symbol))
        decision += 1


def encode_codeword(graph, source, state=None, config=None):
    '''
    Encode source bits into one codeword

    Parameters
    ----------
    graph : FactorGraph
    source : sequence of int
        Bits 0/1, read from `state.cursor` on
    state : CoderState, optional
        Carried across codewords in stream mode; a fresh state when None
    config : EncoderConfig, optional

    Returns
    -------
    result : EncodeResult

    Raises
    ------
    EncodingFailureError
        Every attempt failed; the coder state is left as it was on entry
    SourceExhaustedError
    '''
    state = state if state is not None else CoderState()
    config = config if config is not None else EncoderConfig()
    order = config.order(graph.num_vars)
    start = state.snapshot()

    for attempt in range(1, config.max_attempts + 1):
        state.restore(start)
        reserve_first = attempt < config.max_attempts
        outcome = _encode_attempt(graph, source, state, order, attempt - 1, reserve_first)
        if outcome is None:
            logger.debug(f"Encoding attempt {attempt} failed at bit {state.cursor}")
            continue
        if attempt > 1:
            logger.info(f"Encoding succeeded on attempt {attempt}")
        draws, codeword = outcome
        information = sum(math.log2(d.cardinality) for d in draws)
        rate = information / (graph.num_vars * math.log2(graph.q))
        return EncodeResult(codeword, state.cursor - start.cursor, attempt, rate, draws)

    state.restore(start)
    logger.warning(f"Encoding failed after {config.max_attempts} attempts")
    raise EncodingFailureError(f"Encoding failed after {config.max_attempts} attempts", config.max_attempts)


def recover_source(graph, codeword, config=None, state=None):
    '''
    Source bits that make the encoder produce `codeword`

    Parameters
    ----------
    graph : FactorGraph
    codeword : array_like
    config : EncoderConfig, optional
    state : RecoveryState, optional
        Stream mode: the choice interval carries over and only consensus bits
        are emitted. Standalone mode (None) appends the flush bits.

    Returns
    -------
    bits : list of int
        Bits emitted for this codeword
    attempts : int

    Raises
    ------
    ReplayError
        A value is not among the candidates the encoder would offer
    '''
    config = config if config is not None else EncoderConfig()
    codeword = np.asarray(codeword, dtype=np.int64)
    if not validate(graph, codeword):
        raise ReplayError("Only valid codewords can be replayed")
    standalone = state is None
    state = state if state is not None else RecoveryState()
    emitted_before = len(state.bits)
    order = config.order(graph.num_vars)

    decoder = ErasureDecoder(graph, PartialGrid.erased(graph.q, graph.num_vars))
    attempt = 1
    decision = 0
    while True:
        _, status = decoder.run()
        if status == DecodeStatus.CONTRADICTION:
            raise ReplayError("Replay reached an empty candidate set")
        if status == DecodeStatus.DECODED:
            break
        var = _next_decision(decoder.cells, order)
        symbol = int(codeword[var])
        candidates = [s for s in range(1, graph.q + 1) if decoder.cells[var] & symbol_mask(s)]
        if symbol not in candidates:
            raise ReplayError(f"Value {symbol} of variable {var} is not a permitted candidate")
        first_of_attempt = decision == attempt - 1
        reserving = first_of_attempt and attempt < config.max_attempts
        if reserving and symbol == candidates[-1]:
            attempt += 1
        else:
            k = len(candidates) - 1 if reserving else len(candidates)
            state.refine(candidates.index(symbol), k)
        decoder.observe(var, symbol_mask(symbol))
        decision += 1

    bits = state.bits[emitted_before:]
    if standalone:
        bits = bits + state.flush()
    return bits, attempt


def encode_stream(graph, source, count, config=None):
    '''Encode `count` codewords sharing one coder state'''
    state = CoderState()
    return [encode_codeword(graph, source, state, config) for _ in range(count)]


def recover_stream(graph, codewords, config=None, flush=True):
    '''Inverse of `encode_stream`; returns the consensus bits and, when `flush`, the tail'''
    state = RecoveryState()
    for codeword in codewords:
        recover_source(graph, codeword, config, state)
    bits = list(state.bits)
    if flush:
        bits.extend(state.flush())
    return bits


def bits_from_ascii(text):
    bits = [int(ch) for ch in text if ch in "01"]
    return np.array(bits, dtype=np.uint8)


def bits_from_bytes(data):
    return np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8))


@dataclass(frozen=True)
class EncoderStats:
    trials: int
    failure_prob_first_attempt: float
    hard_failures: int
    mean_rate: float
    mean_attempts: float

    def as_dict(self):
        return {
            "trials": self.trials,
            "failure_prob_first_attempt": self.failure_prob_first_attempt,
            "hard_failures": self.hard_failures,
            "mean_rate": self.mean_rate,
            "mean_attempts": self.mean_attempts,
        }


def _encode_trial(graph, config, seed_sequence):
    source = np.random.default_rng(seed_sequence).integers(0, 2, MONTE_CARLO_SOURCE_BITS, dtype=np.uint8)
    try:
        result = encode_codeword(graph, source, CoderState(), config)
    except EncodingFailureError as ex:
        return ex.attempts + 1, None
    return result.attempts, result.rate


def estimate_encoder_stats(graph, trials, seed, config=None, workers=1, progress=False):
    '''
    Monte Carlo estimate of the encoder's failure probability and rate

    Each trial encodes one codeword from its own pseudorandom source stream,
    spawned from `seed`, so the result does not depend on `workers`.

    Returns
    -------
    stats : EncoderStats
    '''
    if trials < 1:
        raise InvalidParameterError(f"Need at least one trial, got {trials}")
    config = config if config is not None else EncoderConfig()
    seeds = np.random.SeedSequence(seed).spawn(trials)

    outcomes = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            for batch in chunked(seeds, workers * 16):
                outcomes.extend(executor.map(_encode_trial, [graph] * len(batch), [config] * len(batch), batch))
    else:
        for seed_sequence in tqdm(seeds, desc="Encoding", disable=not progress, leave=False):
            outcomes.append(_encode_trial(graph, config, seed_sequence))

    first_failures = sum(1 for attempts, _ in outcomes if attempts > 1)
    rates = [rate for _, rate in outcomes if rate is not None]
    successes = [attempts for attempts, rate in outcomes if rate is not None]
    stats = EncoderStats(
        trials=trials,
        failure_prob_first_attempt=first_failures / trials,
        hard_failures=trials - len(rates),
        mean_rate=float(np.mean(rates)) if rates else 0.0,
        mean_attempts=float(np.mean(successes)) if successes else float(config.max_attempts),
    )
    logger.info(f"Encoder statistics over {trials} trials: {stats.as_dict()}")
    return stats
