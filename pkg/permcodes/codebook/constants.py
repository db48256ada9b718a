from enum import Enum

# Cost guards
NAIVE_PERMANENT_MAX_Q = 10
TRELLIS_MAX_Q = 25
DIRECT_RULE_MAX_Q = 12

# Numerical tolerances
ROW_SUM_TOLERANCE = 1e-12
DEFAULT_SOFT_TOL = 1e-8
DEFAULT_SOFT_MAX_ITERS = 50

# Random regular graph construction
REPAIR_PASSES_PER_VARIABLE = 100

# Encoder
DEFAULT_MAX_ATTEMPTS = 3
MONTE_CARLO_SOURCE_BITS = 4096

# Density evolution
DEFAULT_POPULATION_SIZE = 100_000
DEFAULT_MAX_DE_ITERS = 500
DEFAULT_DE_RESOLUTION = 1e-3
NON_SINGLETON_TARGET = 1e-4
DE_STALL_ITERS = 50
DE_FEASIBLE_Q = range(3, 9)

# Counting constants quoted for rate computations
SUDOKU_9_COUNT = 6_670_903_752_021_072_936_960
SEMI_PANDIAGONAL_9_REDUCED = 489_300

# Published first-attempt rates used for threshold markers
KNOWN_RATES = {
    ("sudoku", 9): 0.2824,
    ("semi_pandiagonal", 9): 0.1455,
}


class StructureKind(Enum):
    LATIN = "latin"
    SUDOKU = "sudoku"
    PANDIAGONAL = "pandiagonal"
    SEMI_PANDIAGONAL = "semi_pandiagonal"
    RANDOM_REGULAR = "random_regular"
    CUSTOM = "custom"

    @classmethod
    def is_valid(cls, name):
        return name in {kind.value for kind in cls}

    @classmethod
    def square_kinds(cls):
        return [cls.LATIN, cls.SUDOKU, cls.PANDIAGONAL, cls.SEMI_PANDIAGONAL]

    def __str__(self):
        return self.value


class DecodeStatus(Enum):
    DECODED = "decoded"
    STALLED = "stalled"
    CONTRADICTION = "contradiction"
    MAX_ITERS = "max_iters"

    def __str__(self):
        return self.value


class ConstraintRule(Enum):
    TRELLIS = "trellis"
    DIRECT = "direct"

    def __str__(self):
        return self.value


class BitFormat(Enum):
    ASCII = "ascii"
    BYTES = "bytes"
