'''
Ensemble analysis of regular codes with permutation constraints: rate
formulas and erasure thresholds from population dynamics.
'''
import math
import logging
from dataclasses import dataclass, field
from typing import List
import numpy as np
from .constants import (DEFAULT_POPULATION_SIZE, DEFAULT_MAX_DE_ITERS, DEFAULT_DE_RESOLUTION,
                        NON_SINGLETON_TARGET, DE_STALL_ITERS, DE_FEASIBLE_Q)
from .exceptions import InvalidParameterError, AnalysisError
from .trellis import subset_trellis

logger = logging.getLogger('Codebook.Analysis')

BOOTSTRAP_RESAMPLES = 1000
RECOMMENDED_POPULATION = 10_000


def cycle_free_rate(q):
    '''log((q-1)!) / ((q-1) log q): rate of the infinite tree of constraints, as a fraction of log q'''
    if q < 2:
        raise InvalidParameterError(f"Alphabet size must be at least 2, got {q}")
    return math.lgamma(q) / ((q - 1) * math.log(q))


@dataclass(frozen=True)
class BetheEstimate:
    bits_per_symbol: float
    fraction: float


def bethe_rate_estimate(q, d_v, stirling=False):
    '''
    Bethe estimate max(0, (d_v / q) log2(q!) - (d_v - 1) log2(q))

    Parameters
    ----------
    q : int
    d_v : int
    stirling : bool
        Use Stirling's approximation of log2(q!) instead of the exact value

    Returns
    -------
    estimate : BetheEstimate
        In bits per symbol and as a fraction of log2 q
    '''
    if q < 2 or d_v < 1:
        raise InvalidParameterError(f"Need q >= 2 and d_v >= 1, got q={q} d_v={d_v}")
    if stirling:
        log_factorial = q * math.log2(q) - q * math.log2(math.e) + 0.5 * math.log2(2 * math.pi * q)
    else:
        log_factorial = math.log2(math.factorial(q))
    bits = max(0.0, (d_v / q) * log_factorial - (d_v - 1) * math.log2(q))
    return BetheEstimate(bits, bits / math.log2(q))


def combinatorial_rate(count, n, q):
    '''log_q(M) / N for an exact codeword count M'''
    count = int(count)
    if count < 1:
        raise InvalidParameterError(f"Codeword count must be positive, got {count}")
    if n < 1 or q < 2:
        raise InvalidParameterError(f"Need N >= 1 and q >= 2, got N={n} q={q}")
    return math.log(count) / (n * math.log(q))


@dataclass(frozen=True)
class EnsembleParams:
    '''
    Regular (d_v, q) ensemble and population-dynamics settings

    Attributes
    ----------
    q : int
        Alphabet size and constraint degree
    d_v : int
        Variable degree
    population_size : int
        Messages kept per population
    max_de_iters : int
        Iterations allowed per erasure probability
    resolution : float
        Width of the final bisection bracket
    replicates : int
        Independent bisections; more than one gives a bootstrap interval
    '''
    q: int
    d_v: int = 3
    population_size: int = DEFAULT_POPULATION_SIZE
    max_de_iters: int = DEFAULT_MAX_DE_ITERS
    resolution: float = DEFAULT_DE_RESOLUTION
    replicates: int = 1

    def __post_init__(self):
        if self.q < 2 or self.d_v < 2:
            raise InvalidParameterError(f"Need q >= 2 and d_v >= 2, got q={self.q} d_v={self.d_v}")
        if self.population_size < 1 or self.max_de_iters < 1 or self.replicates < 1:
            raise InvalidParameterError("Population size, iteration cap and replicates must be positive")
        if not 0.0 < self.resolution < 1.0:
            raise InvalidParameterError(f"Resolution must be in (0, 1), got {self.resolution}")


@dataclass(frozen=True)
class CardinalityDistribution:
    '''Probabilities of message cardinalities 1..q'''
    probabilities: np.ndarray

    @classmethod
    def from_population(cls, cardinalities, q):
        counts = np.bincount(np.asarray(cardinalities, dtype=np.int64), minlength=q + 1)[1:q + 1]
        return cls(counts / counts.sum())

    @property
    def singleton(self):
        return float(self.probabilities[0])


@dataclass
class DensityEvolutionRun:
    '''
    Outcome of population dynamics at one erasure probability

    Attributes
    ----------
    converged : bool
        The non-singleton fraction fell below the target
    iterations : int
    non_singleton_history : list of float
        Non-singleton fraction of the variable-to-constraint population per iteration
    final : CardinalityDistribution
    '''
    converged: bool
    iterations: int
    non_singleton_history: List[float]
    final: CardinalityDistribution


def _subsets_containing(truth, cardinalities, q, rng):
    '''Uniform random subsets of the given sizes that contain `truth`, as boolean rows'''
    keys = rng.random((len(cardinalities), q))
    keys[np.arange(len(cardinalities)), truth] = -1.0
    ranks = np.argsort(np.argsort(keys, axis=1), axis=1)
    return ranks < cardinalities[:, None]


def constraint_population(to_constraint, q, rng):
    '''
    Sample outgoing constraint-message cardinalities

    With the hidden permutation taken as the identity, row i of each sampled
    constraint is a random subset containing symbol i with a cardinality drawn
    from `to_constraint`. The message to the last edge holds every symbol j for
    which rows 0..q-2 can be matched into the columns other than j.
    '''
    size = len(to_constraint)
    trellis = subset_trellis(q)
    reach = np.zeros((size, trellis.num_states), dtype=bool)
    reach[:, 0] = True
    for i, stage in enumerate(trellis.stages[:q - 1]):
        cards = to_constraint[rng.integers(0, size, size)]
        rows = _subsets_containing(i, cards, q, rng)
        for j in range(q):
            edges = stage.col == j
            src, dst = stage.src[edges], stage.dst[edges]
            reach[:, dst] |= reach[:, src] & rows[:, j][:, None]
    outgoing = np.zeros(size, dtype=np.int64)
    for j in range(q):
        outgoing += reach[:, trellis.full ^ (1 << j)]
    return outgoing


def variable_population(to_variable, q, d_v, eps, rng):
    '''Cardinalities of the channel message intersected with d_v - 1 constraint messages'''
    size = len(to_variable)
    surviving = np.ones((size, q), dtype=bool)
    for _ in range(d_v - 1):
        cards = to_variable[rng.integers(0, size, size)]
        surviving &= _subsets_containing(0, cards, q, rng)
    erased = rng.random(size) < eps
    return np.where(erased, surviving.sum(axis=1), 1)


def density_evolution(params, eps, rng):
    '''
    Population dynamics on the erasure channel at erasure probability `eps`

    Stops once the non-singleton fraction falls below the target, after
    `max_de_iters` iterations, or when the fraction has not reached a new
    minimum for a while.
    '''
    q, size = params.q, params.population_size
    to_constraint = np.where(rng.random(size) < eps, q, 1).astype(np.int64)
    history = []
    best, since_best = math.inf, 0
    converged = False
    for _ in range(params.max_de_iters):
        to_variable = constraint_population(to_constraint, q, rng)
        to_constraint = variable_population(to_variable, q, params.d_v, eps, rng)
        fraction = float(np.mean(to_constraint > 1))
        history.append(fraction)
        if fraction < NON_SINGLETON_TARGET:
            converged = True
            break
        if fraction < best:
            best, since_best = fraction, 0
        else:
            since_best += 1
            if since_best >= DE_STALL_ITERS:
                break
    return DensityEvolutionRun(converged, len(history), history,
                               CardinalityDistribution.from_population(to_constraint, q))


@dataclass(frozen=True)
class ThresholdResult:
    q: int
    d_v: int
    theta: float
    ci_low: float
    ci_high: float
    replicate_thresholds: tuple = field(default_factory=tuple)


def _bisect(params, seed_sequence):
    steps = seed_sequence.spawn(64)
    step = iter(steps)

    def converges(eps):
        return density_evolution(params, eps, np.random.default_rng(next(step))).converged

    low, high = 0.0, 1.0
    if not converges(low) or converges(high):
        raise AnalysisError(f"Could not bracket the threshold for q={params.q} d_v={params.d_v}")
    while high - low > params.resolution:
        middle = (low + high) / 2
        if converges(middle):
            low = middle
        else:
            high = middle
        logger.debug(f"Threshold bracket for q={params.q} d_v={params.d_v}: [{low:.4f}, {high:.4f}]")
    return low, high


def de_threshold(params, seed):
    '''
    Erasure threshold of the regular ensemble by bisection over population dynamics

    Parameters
    ----------
    params : EnsembleParams
    seed : int

    Returns
    -------
    result : ThresholdResult
        Bracket midpoint with the final bracket as interval, or the replicate
        mean with a percentile bootstrap interval when `params.replicates` > 1

    Raises
    ------
    AnalysisError
        The bisection could not be bracketed
    '''
    if params.q not in DE_FEASIBLE_Q:
        raise InvalidParameterError(f"Thresholds are computed for q in 3..8, got q={params.q}")
    if params.population_size < RECOMMENDED_POPULATION:
        logger.warning(f"Population of {params.population_size} is below {RECOMMENDED_POPULATION}; "
                       f"expect a noisy threshold")

    root = np.random.SeedSequence(seed)
    brackets = [_bisect(params, child) for child in root.spawn(params.replicates)]
    thresholds = np.array([(low + high) / 2 for low, high in brackets])

    if params.replicates == 1:
        low, high = brackets[0]
        result = ThresholdResult(params.q, params.d_v, float(thresholds[0]), low, high, tuple(thresholds))
    else:
        rng = np.random.default_rng(root.spawn(1)[0])
        means = rng.choice(thresholds, size=(BOOTSTRAP_RESAMPLES, len(thresholds))).mean(axis=1)
        ci_low, ci_high = np.percentile(means, [2.5, 97.5])
        result = ThresholdResult(params.q, params.d_v, float(thresholds.mean()), float(ci_low), float(ci_high),
                                 tuple(thresholds))
    logger.info(f"Threshold q={params.q} d_v={params.d_v}: {result.theta:.4f} "
                f"[{result.ci_low:.4f}, {result.ci_high:.4f}]")
    return result
