from .constants import StructureKind, DecodeStatus, ConstraintRule, BitFormat
from .exceptions import (CodebookError, InvalidParameterError, ConstructionError, CostGuardError,
                         ContradictionError, SourceExhaustedError, EncodingFailureError, ReplayError,
                         AnalysisError, CountStoreError)
from .constraint_graph import (FactorGraph, PartialGrid, CodewordCount, build_structure, build_random_regular,
                               validate, count_codewords, enumerate_codewords, sample_codeword)
from .grid_format import read_grids, read_grid, read_partial_grid, format_grid, format_partial_grid
from .permanent import (perm_naive, perm_trellis, cofactor_permanents, constraint_update_soft,
                        forward_backward, ScaledPermanent, TrellisAccumulators)
from .erasure_decoder import (ErasureDecoder, constraint_update_subsets_direct,
                              constraint_update_subsets_trellis, decode_erasure)
from .bp_decoder import (ChannelPriors, SoftDecoder, SoftDecodeResult, erasure_priors, symmetric_priors,
                         variable_update_soft, decode_soft)
from .encoder import (CoderState, RecoveryState, EncoderConfig, EncodeResult, EncoderStats, draw_uniform,
                      encode_codeword, recover_source, encode_stream, recover_stream, estimate_encoder_stats,
                      bits_from_ascii, bits_from_bytes)
from .analysis import (EnsembleParams, CardinalityDistribution, ThresholdResult, BetheEstimate, cycle_free_rate,
                       bethe_rate_estimate, combinatorial_rate, density_evolution, de_threshold)
from .count_store import CountStore
