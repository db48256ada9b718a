import os
import sys
import csv
import logging
import argparse
import contextlib
import numpy as np
from permcodes.codebook import (StructureKind, DecodeStatus, ConstraintRule, BitFormat, CodebookError,
                                InvalidParameterError, ConstructionError, ContradictionError, SourceExhaustedError,
                                EncodingFailureError, PartialGrid, CountStore, EncoderConfig, EnsembleParams, CoderState,
                                build_structure, build_random_regular, validate, count_codewords, sample_codeword,
                                read_grids, format_grid, format_partial_grid, decode_erasure, decode_soft,
                                erasure_priors, symmetric_priors, perm_naive, perm_trellis, cofactor_permanents,
                                encode_codeword, recover_source, estimate_encoder_stats, bits_from_ascii,
                                bits_from_bytes, cycle_free_rate, bethe_rate_estimate, combinatorial_rate,
                                de_threshold)
from permcodes.codebook.encoder import RecoveryState
from .constants import (ExitCode, STATUS_SEVERITY, THRESHOLD_COLUMNS, RATE_COLUMNS, ENCODER_STATS_COLUMNS,
                        ENV_WORKERS, DEFAULT_MIN_CODEWORDS, DEFAULT_MIN_BLOCK_ERRORS, DEFAULT_MAX_TRIALS,
                        DEFAULT_PATTERNS_PER_CODEWORD)
from .simulation import SimConfig, simulate_erasure, write_records_csv, parse_eps_grid

logger = logging.getLogger('Permcodes.CLI')


def default_workers():
    if not (workers := os.environ.get(ENV_WORKERS)):
        return 1
    try:
        value = int(workers)
    except ValueError:
        value = 0
    if value < 1:
        logger.error(f"Invalid {ENV_WORKERS}: {workers}")
        raise ValueError(f"Please set the environment variable {ENV_WORKERS} to a positive integer")
    return value


@contextlib.contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as stream:
            yield stream


def _read_text(path):
    if path == "-":
        return sys.stdin.read()
    with open(path) as stream:
        return stream.read()


def _graph_from_args(args):
    if args.structure == StructureKind.RANDOM_REGULAR.value:
        if args.n is None:
            raise InvalidParameterError("random_regular needs --n")
        return build_random_regular(args.dv, args.q, args.n, args.graph_seed)
    return build_structure(args.structure, args.q)


def _read_graph_grids(args, graph):
    grids = read_grids(_read_text(args.grid))
    for q, symbols in grids:
        if q != graph.q or len(symbols) != graph.num_vars:
            raise InvalidParameterError(f"Grid header '{q} {len(symbols)}' does not match "
                                        f"q={graph.q} N={graph.num_vars}")
    return [symbols for _, symbols in grids]


def cmd_build(args):
    graph = _graph_from_args(args)
    with _output(args.out) as out:
        out.write(f"# {graph.describe()}\n")
        for c, constraint in enumerate(graph.constraints):
            out.write(f"{c}: {' '.join(str(v) for v in constraint)}\n")
    return ExitCode.OK


def cmd_count(args):
    graph = _graph_from_args(args)
    store = CountStore(args.cache) if args.cache else None
    if store is not None and graph.structure_tag != StructureKind.RANDOM_REGULAR:
        if (cached := store.get(graph.structure_tag, graph.q)) is not None:
            print(cached)
            return ExitCode.OK
    result = count_codewords(graph, args.limit)
    if result.capped:
        print(f"{result.count} (capped)")
        return ExitCode.OK
    if store is not None and graph.structure_tag != StructureKind.RANDOM_REGULAR:
        store.put(graph.structure_tag, graph.q, result.count)
    print(result.count)
    return ExitCode.OK


def cmd_sample(args):
    graph = _graph_from_args(args)
    seeds = np.random.SeedSequence(args.seed).spawn(args.count)
    with _output(args.out) as out:
        for seed in seeds:
            out.write(format_grid(graph.q, sample_codeword(graph, seed)))
    return ExitCode.OK


def cmd_validate(args):
    graph = _graph_from_args(args)
    verdicts = [validate(graph, symbols) for symbols in _read_graph_grids(args, graph)]
    for verdict in verdicts:
        print("valid" if verdict else "invalid")
    return ExitCode.OK if all(verdicts) else ExitCode.INVALID


def _encoder_config(args):
    return EncoderConfig(max_attempts=args.max_attempts)


def cmd_encode(args):
    graph = _graph_from_args(args)
    config = _encoder_config(args)
    if args.trials is not None:
        if args.seed is None:
            raise InvalidParameterError("--trials needs --seed")
        stats = estimate_encoder_stats(graph, args.trials, args.seed, config, workers=args.workers,
                                       progress=args.progress)
        with _output(args.out) as out:
            writer = csv.writer(out, lineterminator="\n")
            writer.writerow(ENCODER_STATS_COLUMNS)
            writer.writerow([graph.structure_tag.value, graph.q, stats.trials,
                             f"{stats.failure_prob_first_attempt:.6f}", stats.hard_failures,
                             f"{stats.mean_rate:.6f}", f"{stats.mean_attempts:.4f}"])
        return ExitCode.OK

    if args.input is None:
        raise InvalidParameterError("encode needs --input or --trials")
    if BitFormat(args.format) == BitFormat.ASCII:
        source = bits_from_ascii(_read_text(args.input))
    else:
        with open(args.input, "rb") as stream:
            source = bits_from_bytes(stream.read())

    state = CoderState()
    with _output(args.out) as out:
        for index in range(args.count):
            result = encode_codeword(graph, source, state, config)
            out.write(format_grid(graph.q, result.codeword))
            print(f"codeword={index} bits_consumed={result.bits_consumed} attempts={result.attempts} "
                  f"rate={result.rate:.6f}", file=sys.stderr)
    return ExitCode.OK


def cmd_recover(args):
    graph = _graph_from_args(args)
    config = _encoder_config(args)
    codewords = _read_graph_grids(args, graph)
    state = RecoveryState()
    bits = []
    for index, codeword in enumerate(codewords):
        emitted, attempts = recover_source(graph, codeword, config, state)
        bits.extend(emitted)
        logger.debug(f"Codeword {index} recovered {len(emitted)} bits after {attempts} attempt(s)")
    if not args.no_flush:
        bits.extend(state.flush())
    with _output(args.out) as out:
        out.write("".join(str(b) for b in bits) + "\n")
    return ExitCode.OK


def _worse(current, status):
    return max(current, status, key=STATUS_SEVERITY.index)


ERASURE_EXIT = {
    DecodeStatus.DECODED: ExitCode.OK,
    DecodeStatus.STALLED: ExitCode.STALLED,
    DecodeStatus.CONTRADICTION: ExitCode.CONTRADICTION,
}


def cmd_decode_erasure(args):
    graph = _graph_from_args(args)
    worst = ExitCode.OK
    with _output(args.out) as out:
        for symbols in _read_graph_grids(args, graph):
            grid, status = decode_erasure(graph, PartialGrid.from_symbols(graph.q, symbols), ConstraintRule(args.rule))
            out.write(format_partial_grid(grid))
            out.write(f"# status={status}\n")
            worst = _worse(worst, ERASURE_EXIT[status])
    return worst


def cmd_decode_soft(args):
    graph = _graph_from_args(args)
    worst = ExitCode.OK
    with _output(args.out) as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["grid", "var"] + [f"p{s}" for s in range(1, graph.q + 1)])
        for index, symbols in enumerate(_read_graph_grids(args, graph)):
            if args.flip is not None:
                if np.any(symbols == 0):
                    raise InvalidParameterError("A symmetric channel observation cannot contain erasures")
                priors = symmetric_priors(symbols, graph.q, args.flip)
            else:
                priors = erasure_priors(PartialGrid.from_symbols(graph.q, symbols))
            result = decode_soft(graph, priors, args.max_iters, args.tol)
            for var, row in enumerate(result.marginals):
                writer.writerow([index, var] + [f"{p:.10g}" for p in row])
            print(f"grid={index} status={result.status} iterations={result.iterations}", file=sys.stderr)
            if result.status == DecodeStatus.CONTRADICTION:
                worst = _worse(worst, ExitCode.CONTRADICTION)
            elif result.status != DecodeStatus.DECODED:
                worst = _worse(worst, ExitCode.STALLED)
    return worst


def _read_matrix(text):
    rows = [line.split() for line in text.splitlines() if line.strip() and not line.startswith("#")]
    try:
        return np.array([[float(v) for v in row] for row in rows])
    except ValueError:
        raise InvalidParameterError("Matrix entries must be numbers")


def cmd_permanent(args):
    matrix = _read_matrix(_read_text(args.matrix))
    if args.method == "naive":
        print(f"{perm_naive(matrix):.12g}")
    elif args.method == "trellis":
        print(f"{perm_trellis(matrix).value:.12g}")
    else:
        for row in cofactor_permanents(matrix):
            print(" ".join(f"{v:.12g}" for v in row))
    return ExitCode.OK


def cmd_analyze_rates(args):
    bethe = bethe_rate_estimate(args.q, args.dv)
    r_cf = cycle_free_rate(args.q)
    r_comb = ""
    if args.count is not None:
        if args.n is None:
            raise InvalidParameterError("--count needs --n")
        r_comb = f"{combinatorial_rate(args.count, args.n, args.q):.4f}"
    with _output(args.out) as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(RATE_COLUMNS)
        writer.writerow([args.q, args.dv, f"{r_cf:.4f}", f"{1 - r_cf:.4f}", f"{bethe.bits_per_symbol:.4f}",
                         f"{bethe.fraction:.4f}", r_comb])
    return ExitCode.OK


def cmd_analyze_threshold(args):
    params = EnsembleParams(args.q, args.dv, args.pop, args.max_iters, args.resolution, args.replicates)
    result = de_threshold(params, args.seed)
    with _output(args.out) as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(THRESHOLD_COLUMNS)
        writer.writerow([args.q, args.dv, f"{result.theta:.4f}", f"{result.ci_low:.4f}", f"{result.ci_high:.4f}",
                         f"{cycle_free_rate(args.q):.4f}", f"{bethe_rate_estimate(args.q, args.dv).fraction:.4f}"])
    return ExitCode.OK


def cmd_simulate(args):
    config = SimConfig(
        structure=args.structure,
        q=args.q,
        eps_grid=parse_eps_grid(args.eps),
        seed=args.seed,
        min_codewords=args.min_codewords,
        min_block_errors=args.min_block_errors,
        max_trials=args.max_trials,
        patterns_per_codeword=args.patterns,
        workers=args.workers,
        rule=ConstraintRule(args.rule),
    )
    records = simulate_erasure(config, progress=args.progress)
    with _output(args.out) as out:
        write_records_csv(records, out, timing=not args.no_timing)
    return ExitCode.OK


def _add_structure_args(parser, square_only=False):
    kinds = [k.value for k in StructureKind.square_kinds()]
    if not square_only:
        kinds.append(StructureKind.RANDOM_REGULAR.value)
    parser.add_argument("--structure", required=True, choices=kinds)
    parser.add_argument("--q", type=int, required=True)
    if not square_only:
        parser.add_argument("--dv", type=int, default=3, help="variable degree of random_regular graphs")
        parser.add_argument("--n", type=int, help="variable count of random_regular graphs")
        parser.add_argument("--graph-seed", type=int, default=0, help="seed of random_regular graphs")


def _add_output_arg(parser):
    parser.add_argument("--out", help="output file, stdout when omitted")


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser():
    parser = ArgumentParser(prog="permcodes", description="Codes with permutation constraints")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    build = sub.add_parser("build", help="list the constraints of a structure")
    _add_structure_args(build)
    _add_output_arg(build)
    build.set_defaults(handler=cmd_build)

    count = sub.add_parser("count", help="count codewords by backtracking")
    _add_structure_args(count)
    count.add_argument("--limit", type=int)
    count.add_argument("--cache", help="SQLite file caching complete counts")
    count.set_defaults(handler=cmd_count)

    sample = sub.add_parser("sample", help="sample codewords")
    _add_structure_args(sample)
    sample.add_argument("--seed", type=int, required=True)
    sample.add_argument("--count", type=int, default=1)
    _add_output_arg(sample)
    sample.set_defaults(handler=cmd_sample)

    check = sub.add_parser("validate", help="check grids against the constraints")
    _add_structure_args(check)
    check.add_argument("grid")
    check.set_defaults(handler=cmd_validate)

    encode = sub.add_parser("encode", help="encode source bits into codewords")
    _add_structure_args(encode)
    encode.add_argument("--input", help="source file")
    encode.add_argument("--format", choices=[f.value for f in BitFormat], default=BitFormat.ASCII.value)
    encode.add_argument("--count", type=int, default=1, help="codewords to encode")
    encode.add_argument("--max-attempts", type=int, default=EncoderConfig.max_attempts)
    encode.add_argument("--trials", type=int, help="estimate encoder statistics over random sources instead")
    encode.add_argument("--seed", type=int)
    encode.add_argument("--workers", type=int, default=None)
    encode.add_argument("--progress", action="store_true")
    _add_output_arg(encode)
    encode.set_defaults(handler=cmd_encode)

    recover = sub.add_parser("recover", help="recover source bits from codewords")
    _add_structure_args(recover)
    recover.add_argument("grid")
    recover.add_argument("--max-attempts", type=int, default=EncoderConfig.max_attempts)
    recover.add_argument("--no-flush", action="store_true", help="emit consensus bits only")
    _add_output_arg(recover)
    recover.set_defaults(handler=cmd_recover)

    erasure = sub.add_parser("decode-erasure", help="subset-message decoding of erased grids")
    _add_structure_args(erasure)
    erasure.add_argument("grid")
    erasure.add_argument("--rule", choices=[r.value for r in ConstraintRule], default=ConstraintRule.TRELLIS.value)
    _add_output_arg(erasure)
    erasure.set_defaults(handler=cmd_decode_erasure)

    soft = sub.add_parser("decode-soft", help="belief propagation with soft messages")
    _add_structure_args(soft)
    soft.add_argument("grid")
    soft.add_argument("--flip", type=float, help="q-ary symmetric channel; erasure channel when omitted")
    soft.add_argument("--max-iters", type=int, default=50)
    soft.add_argument("--tol", type=float, default=1e-8)
    _add_output_arg(soft)
    soft.set_defaults(handler=cmd_decode_soft)

    permanent = sub.add_parser("permanent", help="permanent of a whitespace-separated matrix")
    permanent.add_argument("matrix")
    permanent.add_argument("--method", choices=["trellis", "naive", "cofactors"], default="trellis")
    permanent.set_defaults(handler=cmd_permanent)

    analyze = sub.add_parser("analyze", help="ensemble analysis")
    analyses = analyze.add_subparsers(dest="analysis", required=True, parser_class=ArgumentParser)
    rates = analyses.add_parser("rates")
    rates.add_argument("--q", type=int, required=True)
    rates.add_argument("--dv", type=int, default=3)
    rates.add_argument("--count", type=int, help="exact codeword count M")
    rates.add_argument("--n", type=int, help="block length N")
    _add_output_arg(rates)
    rates.set_defaults(handler=cmd_analyze_rates)
    threshold = analyses.add_parser("threshold")
    threshold.add_argument("--q", type=int, required=True)
    threshold.add_argument("--dv", type=int, default=3)
    threshold.add_argument("--seed", type=int, required=True)
    threshold.add_argument("--pop", type=int, default=EnsembleParams.population_size)
    threshold.add_argument("--resolution", type=float, default=EnsembleParams.resolution)
    threshold.add_argument("--max-iters", type=int, default=EnsembleParams.max_de_iters)
    threshold.add_argument("--replicates", type=int, default=1)
    _add_output_arg(threshold)
    threshold.set_defaults(handler=cmd_analyze_threshold)

    simulate = sub.add_parser("simulate", help="erasure-channel block error simulation")
    _add_structure_args(simulate, square_only=True)
    simulate.add_argument("--eps", required=True, help="start:stop:step or a comma-separated list")
    simulate.add_argument("--seed", type=int, required=True)
    simulate.add_argument("--min-codewords", type=int, default=DEFAULT_MIN_CODEWORDS)
    simulate.add_argument("--min-block-errors", type=int, default=DEFAULT_MIN_BLOCK_ERRORS)
    simulate.add_argument("--max-trials", type=int, default=DEFAULT_MAX_TRIALS)
    simulate.add_argument("--patterns", type=int, default=DEFAULT_PATTERNS_PER_CODEWORD,
                          help="erasure patterns per sampled codeword")
    simulate.add_argument("--workers", type=int, default=None)
    simulate.add_argument("--rule", choices=[r.value for r in ConstraintRule], default=ConstraintRule.TRELLIS.value)
    simulate.add_argument("--no-timing", action="store_true", help="write 0 in the seconds column")
    simulate.add_argument("--progress", action="store_true")
    _add_output_arg(simulate)
    simulate.set_defaults(handler=cmd_simulate)

    return parser


def on_error(error, command):
    '''
    Log `error` and map it to an exit code

    Library and value errors not listed below, count cache failures included, are invalid input.
    '''
    if isinstance(error, UsageError):
        print(str(error), file=sys.stderr)
        return ExitCode.USAGE
    logger.exception(error)
    logger.info(f"Command: {command}")
    if isinstance(error, ConstructionError):
        print(f"Construction failed: {error}", file=sys.stderr)
        return ExitCode.CONSTRUCTION
    if isinstance(error, ContradictionError):
        print(f"Contradiction: {error}", file=sys.stderr)
        return ExitCode.CONTRADICTION
    if isinstance(error, (EncodingFailureError, SourceExhaustedError)):
        print(f"Encoding failed: {error}", file=sys.stderr)
        return ExitCode.ENCODING_FAILURE
    if isinstance(error, OSError):
        print(f"Could not access file: {error}", file=sys.stderr)
        return ExitCode.INVALID
    print(f"Invalid input: {error}", file=sys.stderr)
    return ExitCode.INVALID


def run(argv=None):
    '''
    Parse `argv`, dispatch the subcommand and return its exit status
    '''
    argv = list(sys.argv[1:] if argv is None else argv)
    command = " ".join(argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as error:
        return int(on_error(error, command))
    except SystemExit as exit_:
        return int(ExitCode.OK if exit_.code in (0, None) else ExitCode.USAGE)

    try:
        if getattr(args, "workers", 0) is None:
            args.workers = default_workers()
        logger.info(f"Running: {command}")
        return int(args.handler(args))
    except (CodebookError, ValueError, OSError) as error:
        return int(on_error(error, command))
