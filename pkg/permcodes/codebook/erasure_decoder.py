import logging
from typing import Tuple
import numpy as np
from .constants import ConstraintRule, DecodeStatus, DIRECT_RULE_MAX_Q
from .constraint_graph import PartialGrid, full_mask
from .exceptions import InvalidParameterError, CostGuardError
from .trellis import subset_trellis, popcount

logger = logging.getLogger('Codebook.ErasureDecoder')


def rows_to_incidence(rows, q):
    '''Subset bitmasks (bit j is symbol j + 1) to a q x q 0/1 matrix'''
    rows = np.asarray(rows, dtype=np.int64)
    return ((rows[:, None] >> np.arange(q)) & 1).astype(bool)


def incidence_to_rows(matrix):
    matrix = np.asarray(matrix, dtype=bool)
    weights = np.int64(1) << np.arange(matrix.shape[1], dtype=np.int64)
    return (matrix * weights).sum(axis=1).astype(np.int64)


def family_unions(rows):
    '''Union of the incoming subsets for every family of rows, indexed by row bitmask'''
    rows = np.asarray(rows, dtype=np.int64)
    unions = np.zeros(1 << len(rows), dtype=np.int64)
    for r, row in enumerate(rows):
        span = 1 << r
        unions[span:2 * span] = unions[:span] | row
    return unions


def direct_rule_rows(rows):
    '''
    Extrinsic subset rule on bitmask rows

    For each edge j, the union of every family of other rows whose union has
    exactly as many symbols as the family has rows is removed from the full set.

    Returns
    -------
    outgoing : np.ndarray
        Bitmask per edge
    contradiction : bool
        Some family's union is smaller than the family
    '''
    rows = np.asarray(rows, dtype=np.int64)
    q = len(rows)
    if q > DIRECT_RULE_MAX_Q:
        raise CostGuardError(f"Direct subset rule refused for q={q} > {DIRECT_RULE_MAX_Q}")
    families = np.arange(1 << q, dtype=np.int64)
    unions = family_unions(rows)
    union_sizes = popcount(unions)
    family_sizes = popcount(families)
    tight = union_sizes == family_sizes
    contradiction = bool(np.any(union_sizes < family_sizes))
    full = full_mask(q)
    outgoing = np.empty(q, dtype=np.int64)
    for j in range(q):
        excluded = tight & ((families >> j) & 1 == 0)
        eliminated = int(np.bitwise_or.reduce(unions[excluded])) if excluded.any() else 0
        outgoing[j] = full & ~eliminated
    return outgoing, contradiction


def constraint_update_subsets_direct(incidence):
    '''
    Outgoing incidence matrix of the printed union rule

    Parameters
    ----------
    incidence : array_like
        q x q 0/1 matrix, row i is the subset arriving on edge i

    Returns
    -------
    outgoing : np.ndarray
        q x q boolean matrix
    '''
    incidence = np.asarray(incidence, dtype=bool)
    outgoing, _ = direct_rule_rows(incidence_to_rows(incidence))
    return rows_to_incidence(outgoing, incidence.shape[0])


def trellis_rule_rows(rows):
    '''
    Symbols of each edge that lie on some permutation consistent with every row

    Edges of the subset trellis are drawn only where the incoming subset allows
    the symbol; paths not reaching the full set are pruned and the surviving
    edge labels are read off per stage.

    Returns
    -------
    outgoing : np.ndarray
        Bitmask per edge; all zero when no permutation exists
    contradiction : bool
    '''
    rows = np.asarray(rows, dtype=np.int64)
    q = len(rows)
    trellis = subset_trellis(q)

    allowed = [((rows[i] >> stage.col) & 1).astype(bool) for i, stage in enumerate(trellis.stages)]

    reach_forward = np.zeros(trellis.num_states, dtype=bool)
    reach_forward[0] = True
    for stage, ok in zip(trellis.stages, allowed):
        live = ok & reach_forward[stage.src]
        reach_forward[stage.dst[live]] = True

    if not reach_forward[trellis.full]:
        return np.zeros(q, dtype=np.int64), True

    reach_backward = np.zeros(trellis.num_states, dtype=bool)
    reach_backward[trellis.full] = True
    outgoing = np.zeros(q, dtype=np.int64)
    for i in range(q - 1, -1, -1):
        stage = trellis.stages[i]
        live = allowed[i] & reach_backward[stage.dst]
        reach_backward[stage.src[live]] = True
        surviving = live & reach_forward[stage.src]
        outgoing[i] = int(np.bitwise_or.reduce(np.int64(1) << stage.col[surviving])) if surviving.any() else 0
    return outgoing, False


def constraint_update_subsets_trellis(incidence):
    '''
    Outgoing incidence matrix of the trellis rule, plus a contradiction flag

    Returns
    -------
    outgoing : np.ndarray
        q x q boolean matrix, all False on contradiction
    contradiction : bool
    '''
    incidence = np.asarray(incidence, dtype=bool)
    outgoing, contradiction = trellis_rule_rows(incidence_to_rows(incidence))
    return rows_to_incidence(outgoing, incidence.shape[0]), contradiction


RULES = {
    ConstraintRule.TRELLIS: trellis_rule_rows,
    ConstraintRule.DIRECT: direct_rule_rows,
}


class ErasureDecoder:
    '''
    Flooding subset-message decoder for the q-ary erasure channel

    Attributes
    ----------
    graph : FactorGraph
        The code being decoded
    observed : np.ndarray
        Channel observation per variable as a bitmask
    rule : ConstraintRule
        Constraint-node update in use
    to_constraint : np.ndarray
        Variable-to-constraint messages, shape (constraints, q)
    to_variable : np.ndarray
        Constraint-to-variable messages, shape (constraints, q)
    cells : np.ndarray
        Observation intersected with every incoming message
    '''

    def __init__(self, graph, observed, rule=ConstraintRule.TRELLIS):
        self.graph = graph
        self.rule = ConstraintRule(rule)
        self._update = RULES[self.rule]
        cells = observed.cells if isinstance(observed, PartialGrid) else observed
        self.observed = np.array(cells, dtype=np.int64)
        if self.observed.shape != (graph.num_vars,):
            raise InvalidParameterError(f"Observation has {self.observed.size} cells, graph has {graph.num_vars}")
        full = full_mask(graph.q)
        self.to_constraint = np.full((graph.num_constraints, graph.q), full, dtype=np.int64)
        self.to_variable = np.full((graph.num_constraints, graph.q), full, dtype=np.int64)
        self.cells = self.observed.copy()
        self.iterations = 0
        self.contradiction = False
        self._last_inputs = np.zeros_like(self.to_constraint) - 1

    def observe(self, var, mask):
        '''Tighten the observation of `var`; the next iterations continue from the current messages'''
        self.observed[var] &= int(mask)
        self.cells[var] &= int(mask)

    def _variable_messages(self):
        '''Observation intersected with the messages from every other constraint'''
        outgoing = np.empty_like(self.to_constraint)
        cells = self.observed.copy()
        for var, members in enumerate(self.graph.memberships):
            incoming = [int(self.to_variable[c, p]) for c, p in members]
            for k, (c, p) in enumerate(members):
                mask = int(self.observed[var])
                for other, message in enumerate(incoming):
                    if other != k:
                        mask &= message
                outgoing[c, p] = mask
            for message in incoming:
                cells[var] &= message
        return outgoing, cells

    def iterate(self):
        '''
        One flooding iteration

        Returns
        -------
        changed : bool
            Whether any message or cell changed
        '''
        self.to_constraint, _ = self._variable_messages()
        changed = False
        for c in range(self.graph.num_constraints):
            inputs = self.to_constraint[c]
            if np.array_equal(inputs, self._last_inputs[c]):
                continue
            self._last_inputs[c] = inputs
            outgoing, contradiction = self._update(inputs)
            if contradiction:
                self.contradiction = True
            if not np.array_equal(outgoing, self.to_variable[c]):
                self.to_variable[c] = outgoing
                changed = True
        _, cells = self._variable_messages()
        if not np.array_equal(cells, self.cells):
            changed = True
        self.cells = cells
        self.iterations += 1
        return changed

    def grid(self):
        return PartialGrid(self.graph.q, tuple(int(c) for c in self.cells))

    def status(self):
        if self.contradiction or np.any(self.cells == 0):
            return DecodeStatus.CONTRADICTION
        if np.all(popcount(self.cells) == 1):
            return DecodeStatus.DECODED
        return DecodeStatus.STALLED

    def run(self, max_iters=None):
        '''Iterate until no message changes in a full sweep, or a contradiction appears'''
        while max_iters is None or self.iterations < max_iters:
            changed = self.iterate()
            if self.status() == DecodeStatus.CONTRADICTION or not changed:
                break
        return self.grid(), self.status()


def decode_erasure(graph, observed, rule=ConstraintRule.TRELLIS):
    '''
    Decode an erasure-channel observation to the subset-message fixed point

    Parameters
    ----------
    graph : FactorGraph
    observed : PartialGrid
        Singleton cells were received, full cells were erased
    rule : ConstraintRule
        Trellis (a-posteriori) or direct (extrinsic) constraint update

    Returns
    -------
    grid : PartialGrid
    status : DecodeStatus
        decoded, stalled or contradiction
    '''
    decoder = ErasureDecoder(graph, observed, rule)
    grid, status = decoder.run()
    logger.debug(f"Erasure decoding finished after {decoder.iterations} iterations: {status}")
    return grid, status
