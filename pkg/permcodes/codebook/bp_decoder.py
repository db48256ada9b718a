import logging
from dataclasses import dataclass
import numpy as np
from .constants import DecodeStatus, DEFAULT_SOFT_MAX_ITERS, DEFAULT_SOFT_TOL, ROW_SUM_TOLERANCE
from .constraint_graph import PartialGrid, validate
from .exceptions import InvalidParameterError, ContradictionError
from .permanent import constraint_update_soft

logger = logging.getLogger('Codebook.BPDecoder')


@dataclass(frozen=True)
class ChannelPriors:
    '''
    Per-variable symbol posteriors given the channel output

    Attributes
    ----------
    probabilities : np.ndarray
        Shape (N, q), rows nonnegative and summing to 1
    '''
    probabilities: np.ndarray

    def __post_init__(self):
        probabilities = np.asarray(self.probabilities, dtype=np.float64)
        if probabilities.ndim != 2:
            raise InvalidParameterError("Priors must be an N x q array")
        if np.any(probabilities < 0) or not np.allclose(probabilities.sum(axis=1), 1.0, atol=ROW_SUM_TOLERANCE * 10):
            raise InvalidParameterError("Every prior must be a probability vector")
        object.__setattr__(self, 'probabilities', probabilities)

    @property
    def num_vars(self):
        return self.probabilities.shape[0]

    @property
    def q(self):
        return self.probabilities.shape[1]


def erasure_priors(grid):
    '''Atomic priors on received cells, uniform priors on the candidate set of the others'''
    q = grid.q
    bits = (np.array(grid.cells, dtype=np.int64)[:, None] >> np.arange(q)) & 1
    probabilities = bits / bits.sum(axis=1, keepdims=True)
    return ChannelPriors(probabilities)


def symmetric_priors(symbols, q, flip):
    '''
    Posteriors of a q-ary symmetric channel that keeps a symbol w.p. 1 - flip

    Parameters
    ----------
    symbols : array_like
        Received symbols 1..q
    q : int
    flip : float
        Probability that the channel replaced the symbol by one of the other q - 1
    '''
    if not 0.0 <= flip < 1.0:
        raise InvalidParameterError(f"Flip probability must be in [0, 1), got {flip}")
    symbols = np.asarray(symbols, dtype=np.int64)
    probabilities = np.full((len(symbols), q), flip / (q - 1))
    probabilities[np.arange(len(symbols)), symbols - 1] = 1.0 - flip
    return ChannelPriors(probabilities)


def variable_update_soft(prior, incoming):
    '''
    Normalized product of the prior and every incoming message

    Raises
    ------
    ContradictionError
        When the product has no mass
    '''
    product = np.array(prior, dtype=np.float64)
    for message in incoming:
        product = product * np.asarray(message, dtype=np.float64)
    total = product.sum()
    if total <= 0.0:
        raise ContradictionError("Variable node received incompatible messages")
    return product / total


@dataclass
class SoftDecodeResult:
    marginals: np.ndarray
    hard_decision: np.ndarray
    status: DecodeStatus
    iterations: int

    def support(self):
        return PartialGrid(self.marginals.shape[1], tuple(_support_masks(self.marginals)))


def _support_masks(probabilities):
    weights = np.int64(1) << np.arange(probabilities.shape[-1], dtype=np.int64)
    return ((probabilities > 0.0) * weights).sum(axis=-1).astype(np.int64)


class SoftDecoder:
    '''
    Flooding belief propagation with permanent-based constraint updates

    Attributes
    ----------
    graph : FactorGraph
        The code being decoded
    priors : ChannelPriors
        Channel posteriors per variable
    to_constraint : np.ndarray
        Variable-to-constraint messages, shape (constraints, q, q)
    to_variable : np.ndarray
        Constraint-to-variable messages, same shape
    marginals : np.ndarray
        Current variable beliefs, shape (N, q)
    '''

    def __init__(self, graph, priors):
        if priors.num_vars != graph.num_vars or priors.q != graph.q:
            raise InvalidParameterError(f"Priors of shape {priors.probabilities.shape} do not fit "
                                        f"N={graph.num_vars} q={graph.q}")
        self.graph = graph
        self.priors = priors
        shape = (graph.num_constraints, graph.q, graph.q)
        self.to_constraint = np.full(shape, 1.0 / graph.q)
        self.to_variable = np.full(shape, 1.0 / graph.q)
        self.marginals = priors.probabilities.copy()
        self.iterations = 0

    def _variable_messages(self):
        prior = self.priors.probabilities
        for var, members in enumerate(self.graph.memberships):
            incoming = [self.to_variable[c, p] for c, p in members]
            for k, (c, p) in enumerate(members):
                others = incoming[:k] + incoming[k + 1:]
                self.to_constraint[c, p] = variable_update_soft(prior[var], others)
            self.marginals[var] = variable_update_soft(prior[var], incoming)

    def iterate(self):
        '''
        One flooding iteration: all variable updates, then all constraint updates

        Returns
        -------
        change : float
            Largest absolute change of a constraint-to-variable message

        Raises
        ------
        ContradictionError
            Propagated from a node update
        '''
        self._variable_messages()
        previous = self.to_variable.copy()
        for c in range(self.graph.num_constraints):
            self.to_variable[c] = constraint_update_soft(self.to_constraint[c])
        prior = self.priors.probabilities
        for var, members in enumerate(self.graph.memberships):
            self.marginals[var] = variable_update_soft(prior[var], [self.to_variable[c, p] for c, p in members])
        self.iterations += 1
        return float(np.max(np.abs(self.to_variable - previous)))

    def hard_decision(self):
        return np.argmax(self.marginals, axis=1).astype(np.int64) + 1

    def support(self):
        return PartialGrid(self.graph.q, tuple(int(m) for m in _support_masks(self.marginals)))


def decode_soft(graph, priors, max_iters=DEFAULT_SOFT_MAX_ITERS, tol=DEFAULT_SOFT_TOL):
    '''
    Belief propagation decoding of a q-ary memoryless channel observation

    Stops when the hard decision is a codeword, when no message moves by more
    than `tol`, or after `max_iters` iterations. Ties in the hard decision go to
    the smallest symbol.

    Returns
    -------
    result : SoftDecodeResult
    '''
    decoder = SoftDecoder(graph, priors)
    status = DecodeStatus.MAX_ITERS
    while decoder.iterations < max_iters:
        try:
            change = decoder.iterate()
        except ContradictionError as ex:
            logger.debug(f"Soft decoding hit a contradiction at iteration {decoder.iterations + 1}: {ex}")
            status = DecodeStatus.CONTRADICTION
            break
        if validate(graph, decoder.hard_decision()):
            status = DecodeStatus.DECODED
            break
        if change < tol:
            status = DecodeStatus.STALLED
            break
    return SoftDecodeResult(decoder.marginals.copy(), decoder.hard_decision(), status, decoder.iterations)
