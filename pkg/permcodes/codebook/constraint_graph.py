import math
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Sequence, Tuple
import numpy as np
from .constants import StructureKind, REPAIR_PASSES_PER_VARIABLE
from .exceptions import InvalidParameterError, ConstructionError

logger = logging.getLogger('Codebook.ConstraintGraph')


def symbol_mask(symbol):
    return 1 << (symbol - 1)


def full_mask(q):
    return (1 << q) - 1


def mask_symbols(mask):
    '''Symbols 1..q present in `mask`, ascending'''
    symbols = []
    symbol = 1
    while mask:
        if mask & 1:
            symbols.append(symbol)
        mask >>= 1
        symbol += 1
    return symbols


@dataclass(frozen=True)
class FactorGraph:
    '''
    A code defined by permutation constraints over q-ary variables

    Attributes
    ----------
    q : int
        Alphabet size, symbols are 1..q
    num_vars : int
        Number of variables N
    constraints : tuple of tuple of int
        Each constraint lists exactly q distinct variable indices
    structure_tag : StructureKind
        Where the graph came from
    '''
    q: int
    num_vars: int
    constraints: Tuple[Tuple[int, ...], ...]
    structure_tag: StructureKind = StructureKind.CUSTOM

    def __post_init__(self):
        if self.q < 2:
            raise InvalidParameterError(f"Alphabet size must be at least 2, got {self.q}")
        object.__setattr__(self, 'constraints', tuple(tuple(int(v) for v in c) for c in self.constraints))
        for idx, constraint in enumerate(self.constraints):
            if len(constraint) != self.q:
                raise InvalidParameterError(f"Constraint {idx} has degree {len(constraint)}, expected {self.q}")
            if len(set(constraint)) != self.q:
                raise InvalidParameterError(f"Constraint {idx} repeats a variable")
            if min(constraint) < 0 or max(constraint) >= self.num_vars:
                raise InvalidParameterError(f"Constraint {idx} references a variable outside 0..{self.num_vars - 1}")

    @property
    def num_constraints(self):
        return len(self.constraints)

    @cached_property
    def constraint_array(self):
        return np.array(self.constraints, dtype=np.int64).reshape(self.num_constraints, self.q)

    @cached_property
    def memberships(self):
        '''Per variable, the (constraint, position) pairs it occupies'''
        members = [[] for _ in range(self.num_vars)]
        for c, constraint in enumerate(self.constraints):
            for p, var in enumerate(constraint):
                members[var].append((c, p))
        return tuple(tuple(m) for m in members)

    @cached_property
    def variable_degrees(self):
        return np.array([len(m) for m in self.memberships], dtype=np.int64)

    @cached_property
    def neighbors(self):
        '''Per variable, every other variable sharing a constraint with it'''
        result = []
        for var, members in enumerate(self.memberships):
            others = set()
            for c, _ in members:
                others.update(self.constraints[c])
            others.discard(var)
            result.append(tuple(sorted(others)))
        return tuple(result)

    def describe(self):
        degrees = np.unique(self.variable_degrees)
        degree_text = ",".join(str(d) for d in degrees)
        return (f"{self.structure_tag} q={self.q} N={self.num_vars} "
                f"constraints={self.num_constraints} d_v={degree_text} d_c={self.q}")


@dataclass(frozen=True)
class PartialGrid:
    '''
    Candidate sets per variable; bit s - 1 of a cell is set when symbol s is still possible

    Attributes
    ----------
    q : int
        Alphabet size
    cells : tuple of int
        Bitmask per variable
    '''
    q: int
    cells: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, 'cells', tuple(int(c) for c in self.cells))

    @classmethod
    def erased(cls, q, num_vars):
        return cls(q, (full_mask(q),) * num_vars)

    @classmethod
    def from_codeword(cls, q, word):
        return cls(q, tuple(symbol_mask(int(s)) for s in word))

    @classmethod
    def from_symbols(cls, q, symbols):
        '''0 marks an undetermined cell'''
        return cls(q, tuple(full_mask(q) if int(s) == 0 else symbol_mask(int(s)) for s in symbols))

    def __len__(self):
        return len(self.cells)

    def candidates(self, var):
        return mask_symbols(self.cells[var])

    def cardinalities(self):
        return [bin(c).count("1") for c in self.cells]

    def is_contradictory(self):
        return any(c == 0 for c in self.cells)

    def is_complete(self):
        return all(c != 0 and c & (c - 1) == 0 for c in self.cells)

    def contains(self, word):
        return all(cell & symbol_mask(int(s)) for cell, s in zip(self.cells, word))

    def to_symbols(self):
        '''Determined cells as their symbol, everything else as 0'''
        return np.array([c.bit_length() if c and c & (c - 1) == 0 else 0 for c in self.cells], dtype=np.int64)

    def to_codeword(self):
        if not self.is_complete():
            raise InvalidParameterError("Grid still has undetermined cells")
        return self.to_symbols()


def _square_cell(q, i, j):
    return i * q + j


def build_structure(kind, q):
    '''
    Build one of the named square structures over a q x q grid

    Cell (i, j) is variable i*q + j. Constraints are ordered rows, columns,
    then subsquares or broken right diagonals, then broken left diagonals.

    Parameters
    ----------
    kind : StructureKind or str
        latin, sudoku, pandiagonal or semi_pandiagonal
    q : int
        Alphabet size and side length

    Returns
    -------
    graph : FactorGraph
    '''
    kind = StructureKind(kind)
    if q < 2:
        raise InvalidParameterError(f"Alphabet size must be at least 2, got {q}")
    if kind not in StructureKind.square_kinds():
        raise InvalidParameterError(f"{kind} is not a square structure")

    rows = [tuple(_square_cell(q, i, j) for j in range(q)) for i in range(q)]
    columns = [tuple(_square_cell(q, i, j) for i in range(q)) for j in range(q)]
    constraints = rows + columns

    if kind == StructureKind.SUDOKU:
        side = math.isqrt(q)
        if side * side != q:
            raise InvalidParameterError(f"SUDOKU needs a square alphabet size, got q={q}")
        for bi in range(side):
            for bj in range(side):
                constraints.append(tuple(_square_cell(q, bi * side + di, bj * side + dj)
                                         for di in range(side) for dj in range(side)))
    if kind in (StructureKind.SEMI_PANDIAGONAL, StructureKind.PANDIAGONAL):
        for j in range(q):
            constraints.append(tuple(_square_cell(q, i, (j + i) % q) for i in range(q)))
    if kind == StructureKind.PANDIAGONAL:
        for j in range(q):
            constraints.append(tuple(_square_cell(q, i, (j - i - 1) % q) for i in range(q)))

    graph = FactorGraph(q, q * q, tuple(constraints), kind)
    logger.info(f"Built {graph.describe()}")
    return graph


def build_random_regular(d_v, q, n_vars, seed):
    '''
    Random (d_v, q)-regular factor graph from the configuration model

    Constraints that receive the same variable twice are repaired by swapping
    one offending socket with a socket of another constraint.
    '''
    if d_v < 1 or q < 2:
        raise InvalidParameterError(f"Need d_v >= 1 and q >= 2, got d_v={d_v} q={q}")
    if n_vars < q:
        raise InvalidParameterError(f"Need at least q={q} variables, got {n_vars}")
    if (d_v * n_vars) % q:
        raise InvalidParameterError(f"d_v*n_vars={d_v * n_vars} is not divisible by q={q}")

    rng = np.random.default_rng(seed)
    sockets = rng.permutation(np.repeat(np.arange(n_vars, dtype=np.int64), d_v))
    table = sockets.reshape(-1, q)
    n_constraints = table.shape[0]

    def repeated_socket(row):
        seen = set()
        for p, var in enumerate(row):
            if var in seen:
                return p
            seen.add(var)
        return None

    for _ in range(REPAIR_PASSES_PER_VARIABLE * n_vars):
        bad = [c for c in range(n_constraints) if repeated_socket(table[c].tolist()) is not None]
        if not bad:
            break
        c = bad[0]
        p = repeated_socket(table[c].tolist())
        other = int(rng.integers(n_constraints))
        p_other = int(rng.integers(q))
        if other == c:
            continue
        v, w = int(table[c, p]), int(table[other, p_other])
        if w in table[c].tolist() or v in table[other].tolist():
            continue
        table[c, p], table[other, p_other] = w, v

    if any(repeated_socket(row) is not None for row in table.tolist()):
        raise ConstructionError(f"Could not remove repeated memberships for d_v={d_v} q={q} N={n_vars}")

    graph = FactorGraph(q, n_vars, tuple(tuple(row) for row in table.tolist()), StructureKind.RANDOM_REGULAR)
    logger.info(f"Built {graph.describe()}")
    return graph


def validate(graph, word):
    '''True when every constraint sees each symbol 1..q exactly once'''
    word = np.asarray(word, dtype=np.int64)
    if word.shape != (graph.num_vars,):
        raise InvalidParameterError(f"Codeword has length {word.size}, graph has {graph.num_vars} variables")
    values = np.sort(word[graph.constraint_array], axis=1)
    return bool(np.all(values == np.arange(1, graph.q + 1)))


@dataclass(frozen=True)
class CodewordCount:
    count: int
    capped: bool

    def __int__(self):
        return self.count


class _Backtracker:
    '''
    Depth-first search over bitmask domains with forward checking

    Variables are taken in index order; singleton domains produced by forward
    checking are assigned immediately.
    '''

    def __init__(self, graph, value_order=None):
        self.graph = graph
        self.neighbors = graph.neighbors
        self.value_order = value_order

    def _assign(self, domains, assigned, var, symbol):
        '''Assign and propagate; returns False on a wipe-out'''
        pending = [(var, symbol)]
        while pending:
            var, symbol = pending.pop()
            if assigned[var]:
                if domains[var] != symbol_mask(symbol):
                    return False
                continue
            if not domains[var] & symbol_mask(symbol):
                return False
            assigned[var] = True
            bit = symbol_mask(symbol)
            domains[var] = bit
            for other in self.neighbors[var]:
                if assigned[other]:
                    if domains[other] == bit:
                        return False
                    continue
                if domains[other] & bit:
                    domains[other] &= ~bit
                    remaining = domains[other]
                    if remaining == 0:
                        return False
                    if remaining & (remaining - 1) == 0:
                        pending.append((other, remaining.bit_length()))
        return True

    def _symbols(self, mask):
        symbols = mask_symbols(mask)
        if self.value_order is not None:
            symbols = self.value_order(symbols)
        return symbols

    def solutions(self, domains, assigned):
        try:
            var = assigned.index(False)
        except ValueError:
            yield np.array([d.bit_length() for d in domains], dtype=np.int64)
            return
        for symbol in self._symbols(domains[var]):
            child_domains = list(domains)
            child_assigned = list(assigned)
            if self._assign(child_domains, child_assigned, var, symbol):
                yield from self.solutions(child_domains, child_assigned)

    def root(self, fixed=()):
        domains = [full_mask(self.graph.q)] * self.graph.num_vars
        assigned = [False] * self.graph.num_vars
        for var, symbol in fixed:
            if not self._assign(domains, assigned, var, symbol):
                return None
        return domains, assigned


def count_codewords(graph, limit=None):
    '''
    Count the codewords of `graph` by backtracking

    The first constraint is fixed to 1..q and the result multiplied by q!,
    since relabeling symbols maps codewords onto codewords.

    Parameters
    ----------
    graph : FactorGraph
    limit : int, optional
        Stop once at least this many codewords have been counted

    Returns
    -------
    result : CodewordCount
        The count and whether the search stopped at `limit` with codewords left over
    '''
    if not graph.constraints:
        return CodewordCount(graph.q ** graph.num_vars, False)

    searcher = _Backtracker(graph)
    relabelings = math.factorial(graph.q)
    start = searcher.root(tuple(zip(graph.constraints[0], range(1, graph.q + 1))))
    if start is None:
        return CodewordCount(0, False)

    leaves = 0
    solutions = searcher.solutions(*start)
    for _ in solutions:
        leaves += 1
        if limit is not None and leaves * relabelings >= limit:
            if next(solutions, None) is None:
                break
            logger.warning(f"Codeword count for {graph.describe()} capped at {leaves * relabelings}")
            return CodewordCount(leaves * relabelings, True)
    logger.info(f"Counted {leaves} x {graph.q}! codewords for {graph.describe()}")
    return CodewordCount(leaves * relabelings, False)


def enumerate_codewords(graph):
    '''All codewords in lexicographic order; only sensible for tiny graphs'''
    searcher = _Backtracker(graph)
    yield from searcher.solutions(*searcher.root())


def sample_codeword(graph, seed):
    '''
    A codeword found by backtracking with a shuffled value order at every cell

    The result is deterministic given `seed` but not uniform over the code.
    '''
    rng = np.random.default_rng(seed)
    searcher = _Backtracker(graph, value_order=lambda symbols: [symbols[i] for i in rng.permutation(len(symbols))])
    word = next(searcher.solutions(*searcher.root()), None)
    if word is None:
        raise ConstructionError(f"No codeword exists for {graph.describe()}")
    return word
