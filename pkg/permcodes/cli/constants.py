from enum import IntEnum


class ExitCode(IntEnum):
    OK = 0
    INVALID = 1
    USAGE = 2
    CONSTRUCTION = 3
    CONTRADICTION = 4
    ENCODING_FAILURE = 5
    STALLED = 6


# decode-erasure and decode-soft report the most severe outcome over their grids
STATUS_SEVERITY = (ExitCode.OK, ExitCode.STALLED, ExitCode.CONTRADICTION)


SIM_COLUMNS = ("eps", "trials", "block_errors", "bler", "symbol_errors", "ser", "stalled", "contradictions",
               "seconds")
THRESHOLD_COLUMNS = ("q", "dv", "theta", "ci_lo", "ci_hi", "r_cf", "r_bethe")
RATE_COLUMNS = ("q", "dv", "r_cf", "one_minus_r_cf", "r_bethe_bits", "r_bethe", "r_comb")
ENCODER_STATS_COLUMNS = ("structure", "q", "trials", "failure_prob_first_attempt", "hard_failures", "mean_rate",
                         "mean_attempts")

DEFAULT_MIN_CODEWORDS = 100
DEFAULT_MIN_BLOCK_ERRORS = 100
DEFAULT_MAX_TRIALS = 200_000
DEFAULT_PATTERNS_PER_CODEWORD = 100

ENV_LOG_DIR = "PERMCODES_LOG_DIR"
ENV_LOG_LEVEL = "PERMCODES_LOG_LEVEL"
ENV_WORKERS = "PERMCODES_WORKERS"
