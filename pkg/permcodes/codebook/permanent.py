import math
import logging
from dataclasses import dataclass
from itertools import permutations
import numpy as np
from more_itertools import chunked
from .constants import NAIVE_PERMANENT_MAX_Q
from .exceptions import InvalidParameterError, CostGuardError, ContradictionError
from .trellis import subset_trellis, check_trellis_size

logger = logging.getLogger('Codebook.Permanent')

PERMUTATION_CHUNK = 4096


def _as_belief_matrix(matrix):
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] < 1:
        raise InvalidParameterError(f"Expected a square matrix, got shape {matrix.shape}")
    if np.any(matrix < 0) or not np.all(np.isfinite(matrix)):
        raise InvalidParameterError("Belief matrices must be finite and nonnegative")
    return matrix


def naive_multiplications(q):
    return (q - 1) * math.factorial(q)


def naive_update_cost(q):
    '''Permanents a constraint update needs without the trellis: perm(A) plus q^2 cofactors'''
    return q * (q * q + 1)


def trellis_multiplications(q):
    return q * (2 ** q - 2)


def perm_naive(matrix):
    '''
    Permanent as the sum over all permutations of row-wise products

    Parameters
    ----------
    matrix : array_like
        Nonnegative q x q matrix with q <= 10

    Returns
    -------
    value : float
    '''
    matrix = _as_belief_matrix(matrix)
    q = matrix.shape[0]
    if q > NAIVE_PERMANENT_MAX_Q:
        raise CostGuardError(f"Naive permanent refused for q={q} > {NAIVE_PERMANENT_MAX_Q}")
    rows = np.arange(q)
    total = 0.0
    for batch in chunked(permutations(range(q)), PERMUTATION_CHUNK):
        cols = np.array(batch, dtype=np.int64)
        total += float(np.prod(matrix[rows, cols], axis=1).sum())
    return total


@dataclass(frozen=True)
class ScaledPermanent:
    '''A permanent stored as mantissa * exp(log_scale)'''
    mantissa: float
    log_scale: float

    @property
    def value(self):
        if self.mantissa == 0.0:
            return 0.0
        return self.mantissa * math.exp(self.log_scale)

    @property
    def log_value(self):
        if self.mantissa == 0.0:
            return -math.inf
        return math.log(self.mantissa) + self.log_scale

    def __float__(self):
        return self.value


@dataclass
class TrellisAccumulators:
    '''
    Forward and backward sums over the subset lattice

    Attributes
    ----------
    forward : np.ndarray
        Indexed by column subset; level k values are scaled by exp(forward_log[k])
    backward : np.ndarray
        Same layout, level k scaled by exp(backward_log[k])
    forward_log : np.ndarray
        Log scale per subset size 0..q
    backward_log : np.ndarray
        Log scale per subset size 0..q
    multiplications : int
        Products formed during both passes
    '''
    forward: np.ndarray
    backward: np.ndarray
    forward_log: np.ndarray
    backward_log: np.ndarray
    multiplications: int = 0

    @property
    def q(self):
        return len(self.forward_log) - 1

    def permanent(self):
        full = len(self.forward) - 1
        return ScaledPermanent(float(self.forward[full]), float(self.forward_log[-1]))


def forward_backward(matrix):
    '''
    Run both passes over the subset trellis with per-stage normalization

    The edge from S to S + {j} at stage i carries weight m_ij. Products with the
    unit start states (forward from the empty set, backward from the full set)
    are not counted as multiplications.
    '''
    matrix = _as_belief_matrix(matrix)
    q = matrix.shape[0]
    check_trellis_size(q)
    trellis = subset_trellis(q)
    size = trellis.num_states

    forward = np.zeros(size)
    forward[0] = 1.0
    forward_log = np.zeros(q + 1)
    multiplications = 0
    for i, stage in enumerate(trellis.stages):
        weights = matrix[i, stage.col]
        if i == 0:
            contrib = weights.copy()
        else:
            contrib = forward[stage.src] * weights
            multiplications += len(stage)
        level = np.bincount(stage.dst, weights=contrib, minlength=size)
        total = float(contrib.sum())
        scale = total if total > 0.0 else 1.0
        forward += level / scale
        forward_log[i + 1] = forward_log[i] + math.log(scale)

    backward = np.zeros(size)
    backward[trellis.full] = 1.0
    backward_log = np.zeros(q + 1)
    for i in range(q - 1, -1, -1):
        stage = trellis.stages[i]
        weights = matrix[i, stage.col]
        if i == q - 1:
            contrib = weights.copy()
        else:
            contrib = backward[stage.dst] * weights
            multiplications += len(stage)
        level = np.bincount(stage.src, weights=contrib, minlength=size)
        total = float(contrib.sum())
        scale = total if total > 0.0 else 1.0
        backward += level / scale
        backward_log[i] = backward_log[i + 1] + math.log(scale)

    return TrellisAccumulators(forward, backward, forward_log, backward_log, multiplications)


def perm_trellis(matrix):
    '''
    Permanent from the forward pass of the subset trellis

    Returns
    -------
    permanent : ScaledPermanent
        Use `.value` for the plain number; `.log_value` survives underflow
    '''
    return forward_backward(matrix).permanent()


def cofactor_mantissas(matrix, accumulators=None):
    '''
    Cofactor permanents as per-row mantissas and log scales

    Returns
    -------
    mantissas : np.ndarray
        q x q; perm(M_ij) = mantissas[i, j] * exp(log_scales[i])
    log_scales : np.ndarray
        Length q
    '''
    matrix = _as_belief_matrix(matrix)
    acc = accumulators if accumulators is not None else forward_backward(matrix)
    q = matrix.shape[0]
    trellis = subset_trellis(q)
    mantissas = np.zeros((q, q))
    log_scales = np.zeros(q)
    for i, stage in enumerate(trellis.stages):
        paths = acc.forward[stage.src] * acc.backward[stage.dst]
        mantissas[i] = np.bincount(stage.col, weights=paths, minlength=q)
        log_scales[i] = acc.forward_log[i] + acc.backward_log[i + 1]
    return mantissas, log_scales


def cofactor_permanents(matrix):
    '''
    All first-order cofactor permanents perm(M_ij) from one forward-backward pass

    Entry (i, j) sums forward(source) * backward(destination) over the stage-i
    edges labelled j.
    '''
    mantissas, log_scales = cofactor_mantissas(matrix)
    return mantissas * np.exp(log_scales)[:, None]


def constraint_update_soft(beliefs, posterior=False):
    '''
    Outgoing messages of a permutation constraint

    Parameters
    ----------
    beliefs : array_like
        q x q incoming messages, row i from edge i
    posterior : bool
        Multiply each cofactor by the incoming entry a_ij, giving the
        a-posteriori distribution of edge i instead of the extrinsic message

    Returns
    -------
    outgoing : np.ndarray
        Row i proportional to perm(A_ij) (times a_ij when `posterior`), each row summing to 1

    Raises
    ------
    ContradictionError
        When perm(A) is zero or an output row has no mass
    '''
    beliefs = _as_belief_matrix(beliefs)
    row_sums = beliefs.sum(axis=1, keepdims=True)
    if np.any(row_sums <= 0.0):
        raise ContradictionError("An incoming message has no mass")
    beliefs = beliefs / row_sums

    acc = forward_backward(beliefs)
    if acc.permanent().mantissa <= 0.0:
        raise ContradictionError("No permutation is consistent with the incoming messages")
    mantissas, _ = cofactor_mantissas(beliefs, acc)
    if posterior:
        mantissas = mantissas * beliefs
    totals = mantissas.sum(axis=1, keepdims=True)
    if np.any(totals <= 0.0):
        raise ContradictionError("An outgoing message has no mass")
    return mantissas / totals
