'''
Stage tables for the subset lattice over q columns.

Stage i joins every subset of size i to each superset of size i + 1 by adding
one unused column; paths from the empty set to the full set are exactly the
permutations of the q columns. The permanent, the soft constraint update and
the erasure constraint update all walk these tables.
'''
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple
import numpy as np
from .constants import TRELLIS_MAX_Q
from .exceptions import CostGuardError

logger = logging.getLogger('Codebook.Trellis')


@dataclass(frozen=True)
class TrellisStage:
    '''
    Edges between subset levels i and i + 1

    Attributes
    ----------
    src : np.ndarray
        Subset (bitmask) the edge leaves
    dst : np.ndarray
        Subset the edge enters, src with bit col set
    col : np.ndarray
        Column added along the edge
    '''
    src: np.ndarray
    dst: np.ndarray
    col: np.ndarray

    def __len__(self):
        return len(self.col)


@dataclass(frozen=True)
class SubsetTrellis:
    q: int
    stages: Tuple[TrellisStage, ...]

    @property
    def num_states(self):
        return 1 << self.q

    @property
    def full(self):
        return (1 << self.q) - 1

    @property
    def num_edges(self):
        return sum(len(stage) for stage in self.stages)


def popcount(values):
    return np.bitwise_count(np.asarray(values, dtype=np.int64)).astype(np.int64)


def check_trellis_size(q):
    if q > TRELLIS_MAX_Q:
        raise CostGuardError(f"q={q} exceeds the trellis memory guard of {TRELLIS_MAX_Q}")


@lru_cache(maxsize=32)
def subset_trellis(q):
    '''
    Build (and cache) the stage tables for alphabet size q

    Parameters
    ----------
    q : int
        Number of rows and columns

    Returns
    -------
    trellis : SubsetTrellis
    '''
    check_trellis_size(q)
    masks = np.arange(1 << q, dtype=np.int64)
    level = popcount(masks)
    stages = []
    for i in range(q):
        subsets = masks[level == i]
        srcs, dsts, cols = [], [], []
        for j in range(q):
            bit = np.int64(1 << j)
            free = subsets[(subsets & bit) == 0]
            srcs.append(free)
            dsts.append(free | bit)
            cols.append(np.full(len(free), j, dtype=np.int64))
        stages.append(TrellisStage(np.concatenate(srcs), np.concatenate(dsts), np.concatenate(cols)))
    trellis = SubsetTrellis(q, tuple(stages))
    logger.debug(f"Built subset trellis for q={q} with {trellis.num_edges} edges")
    return trellis
