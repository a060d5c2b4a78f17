"""Command-line surface: compress, inspect, oracle-check, bench.

Summaries go to stdout; failures print exactly one line to stderr in the form
``ERROR <code>: <detail>`` and exit 1 (oracle mismatches exit 2). Output files
are written to a temp file and renamed into place, so an error never leaves a
partial file behind.
"""

from __future__ import annotations

import argparse
import json
import os
import resource
import statistics
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .assembly import ProjectionWeights, project
from .config import MergeConfig, validate_config
from .errors import EngineError, InputTooLargeForOracle
from .formats import read_features, write_compressed
from .merging import merge_segment
from .oracle import ORACLE_MAX_TOKENS, first_divergence
from .pipeline import compress_video
from .rng import SplitMix64, derive
from .segmentation import SegmentView, segment_video
from .synthetic import SyntheticSpec, generate_synthetic
from .types import VideoFeatures


class _CliError(EngineError):
    code = "BadFlags"


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # raise instead of exiting so codes stay ours
        raise _CliError(message)


def _add_input_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", metavar="LVFT",
                        help="path to an LVFT v1 feature container")
    parser.add_argument("--synthetic", metavar="T,N,d,L_enc,seed[,events]",
                        help="generate features instead of reading a file")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--segments", type=int, default=10, metavar="S")
    parser.add_argument("--tokens-per-segment", type=int, default=30,
                        metavar="M")
    parser.add_argument("--global-layers", type=int, default=5, metavar="E")
    parser.add_argument("--heads", type=int, default=16, metavar="C")
    parser.add_argument("--partition", default="alternating",
                        metavar="alternating|random:<seed>")
    parser.add_argument("--schedule", default="halving",
                        metavar="halving|fixed:<r>")
    parser.add_argument("--order", default="gl", choices=("gl", "lg"))
    parser.add_argument("--weighting", default="size",
                        choices=("size", "plain"))
    parser.add_argument("--truncate", action="store_true",
                        help="drop trailing frames when S does not divide T")


def _parse_synthetic(text: str) -> SyntheticSpec:
    parts = text.split(",")
    if len(parts) not in (5, 6):
        raise _CliError(f"--synthetic expects 5 or 6 integers, got {text!r}")
    try:
        values = [int(part) for part in parts]
    except ValueError:
        raise _CliError(f"--synthetic expects integers, got {text!r}") from None
    t, n, d, layers, seed = values[:5]
    try:
        if len(values) == 6:
            return SyntheticSpec(t, n, d, layers, seed=seed, kind="events",
                                 num_events=values[5])
        return SyntheticSpec(t, n, d, layers, seed=seed)
    except ValueError as error:
        raise _CliError(f"--synthetic {text!r}: {error}") from None


def _load_features(args) -> VideoFeatures:
    if bool(args.input) == bool(args.synthetic):
        raise _CliError("exactly one of --input / --synthetic is required")
    if args.input:
        with open(args.input, "rb") as handle:
            return read_features(handle)
    return generate_synthetic(_parse_synthetic(args.synthetic))


def _build_config(args) -> MergeConfig:
    partition, partition_seed = args.partition, 0
    if partition.startswith("random"):
        partition, _, seed_text = partition.partition(":")
        try:
            partition_seed = int(seed_text) if seed_text else 0
        except ValueError:
            raise _CliError(f"--partition random:<seed> needs an integer seed, "
                            f"got {seed_text!r}") from None
    schedule, fixed_step = args.schedule, 1
    if schedule.startswith("fixed"):
        schedule, _, step_text = schedule.partition(":")
        try:
            fixed_step = int(step_text) if step_text else 1
        except ValueError:
            raise _CliError(f"--schedule fixed:<r> needs an integer step, "
                            f"got {step_text!r}") from None
    return MergeConfig(
        num_segments=args.segments,
        tokens_per_segment=args.tokens_per_segment,
        num_global_layers=args.global_layers,
        similarity_heads=args.heads,
        partition=partition,
        partition_seed=partition_seed,
        schedule=schedule,
        fixed_step=fixed_step,
        assembly_order=args.order,
        weighting=args.weighting,
        truncate=args.truncate,
    )


def _write_atomic(path: str, rows: np.ndarray) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    handle = tempfile.NamedTemporaryFile(dir=directory, delete=False,
                                         suffix=".tmp")
    try:
        with handle:
            write_compressed(rows, handle)
        os.replace(handle.name, path)
    except BaseException:
        os.unlink(handle.name)
        raise


def _cmd_compress(args) -> int:
    started = time.perf_counter()
    features = _load_features(args)
    config = _build_config(args)
    result = compress_video(features, config, threads=args.threads)
    rows = result.representation.flattened
    if args.project != "identity":
        rows = project(rows, ProjectionWeights.from_file(args.project))
    if args.out:
        _write_atomic(args.out, rows)
    elapsed = time.perf_counter() - started
    metrics = result.metrics
    print(f"input_tokens={metrics.input_tokens} "
          f"output_tokens={metrics.output_tokens} "
          f"ratio={metrics.ratio:.4f} coverage={metrics.coverage:.6f} "
          f"wall_s={elapsed:.3f}")
    return 0


def _cmd_inspect(args) -> int:
    features = _load_features(args)
    config = validate_config(_build_config(args), features.shape)
    if not 0 <= args.segment < config.num_segments:
        raise _CliError(
            f"--segment must lie in [0, {config.num_segments}), "
            f"got {args.segment}")
    usable = config.num_segments * config.frames_per_segment
    views = segment_video(features.truncated(usable), config)
    _, plan = merge_segment(views[args.segment], config)
    if args.dump_plan:
        print(plan.to_text())
    else:
        removals = [step.removed for step in plan.steps]
        print(f"segment {plan.segment_index}: R0={plan.initial_count} "
              f"M={plan.final_count} steps={len(plan.steps)} r={removals}")
    return 0


def _trial_view(stream: SplitMix64, count: int, dim: int,
                duplicate_pool: bool) -> SegmentView:
    if duplicate_pool:  # few distinct vectors force exact score ties
        pool_size = max(2, count // 8)
        pool = stream.normals(pool_size * dim).reshape(pool_size, dim)
        picks = [stream.below(pool_size) for _ in range(count)]
        values = pool[picks]
    else:
        values = stream.normals(count * dim).reshape(count, dim)
    provenance = np.empty((count, 2), dtype=np.int64)
    provenance[:, 0] = 0
    provenance[:, 1] = np.arange(count)
    return SegmentView(segment_index=0, frame_range=range(0, 1),
                       vectors=values.astype(np.float32),
                       provenance=provenance)


def _cmd_oracle_check(args) -> int:
    if args.trials < 1:
        raise _CliError("--trials must be positive")
    if args.max_tokens > ORACLE_MAX_TOKENS:
        raise InputTooLargeForOracle(
            f"--max-tokens {args.max_tokens} exceeds the oracle cap of "
            f"{ORACLE_MAX_TOKENS}")
    if args.max_tokens < 8:
        raise _CliError("--max-tokens must be at least 8")
    dims = (8, 32, 64)
    heads = (1, 2, 4)
    failures = 0
    for trial in range(args.trials):
        stream = SplitMix64(derive(args.seed, trial))
        count = 8 + stream.below(args.max_tokens - 7)
        dim = dims[stream.below(len(dims))]
        target = 1 + stream.below(count)
        config = MergeConfig(
            num_segments=1,
            tokens_per_segment=target,
            num_global_layers=1,
            similarity_heads=heads[stream.below(len(heads))],
            partition="random" if trial % 2 else "alternating",
            partition_seed=stream.next_u64(),
            schedule="fixed" if trial % 3 == 2 else "halving",
            fixed_step=1 + stream.below(8),
            weighting="plain" if trial % 7 == 6 else "size",
        )
        tie_rich = trial % 5 == 4 or args.inject_tiebreak_bug
        view = _trial_view(stream, count, dim, duplicate_pool=tie_rich)
        diverged = first_divergence(view, config,
                                    tiebreak_bug=args.inject_tiebreak_bug)
        label = (f"trial {trial}: R={count} d={dim} "
                 f"C={config.similarity_heads} M={target}")
        if diverged is None:
            print(f"{label} PASS")
        else:
            failures += 1
            print(f"{label} FAIL first diverging step {diverged}")
    if failures:
        print(f"{failures}/{args.trials} trials diverged")
        return 2
    print(f"all {args.trials} trials identical")
    return 0


def _percentile(values: list[float], fraction: float) -> float:
    ordered = sorted(values)
    index = min(len(ordered) - 1, round(fraction * (len(ordered) - 1)))
    return ordered[index]


def _cmd_bench(args) -> int:
    if args.repeat < 1:
        raise _CliError("--repeat must be positive")
    features = generate_synthetic(_parse_synthetic(args.synthetic))
    config = validate_config(_build_config(args), features.shape)
    usable = config.num_segments * config.frames_per_segment
    features = features.truncated(usable)
    views = segment_video(features, config)

    def timed_merge(view):
        started = time.perf_counter()
        merge_segment(view, config)
        return time.perf_counter() - started

    segment_times: list[float] = []
    totals: list[float] = []
    for _ in range(args.repeat):
        if args.threads > 1:
            with ThreadPoolExecutor(max_workers=args.threads) as pool:
                round_times = list(pool.map(timed_merge, views))
        else:
            round_times = [timed_merge(view) for view in views]
        segment_times.extend(round_times)
        totals.append(sum(round_times))

    tokens_in = usable * features.num_patches
    median_total = statistics.median(totals)
    peak_rss_mb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0
    report = {
        "repeats": args.repeat,
        "segments": config.num_segments,
        "tokens_in": tokens_in,
        "tokens_out": config.output_tokens,
        "segment_s_median": statistics.median(segment_times),
        "segment_s_p95": _percentile(segment_times, 0.95),
        "total_s_median": median_total,
        "total_s_p95": _percentile(totals, 0.95),
        "tokens_per_second": tokens_in / median_total,
        "peak_rss_mb": peak_rss_mb,
    }
    if args.json:
        print(json.dumps(report))
    else:
        print(f"merge of {tokens_in} tokens over {config.num_segments} "
              f"segments, {args.repeat} repeat(s)")
        print(f"per-segment wall s: median={report['segment_s_median']:.4f} "
              f"p95={report['segment_s_p95']:.4f}")
        print(f"total wall s: median={report['total_s_median']:.4f} "
              f"p95={report['total_s_p95']:.4f}")
        print(f"throughput: {report['tokens_per_second']:.0f} tokens/s, "
              f"peak rss {peak_rss_mb:.1f} MiB")
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="segmerge",
                     description="Long-video visual token compression engine")
    commands = parser.add_subparsers(dest="command", required=True)

    compress = commands.add_parser("compress", help="run the full pipeline")
    _add_input_flags(compress)
    _add_config_flags(compress)
    compress.add_argument("--project", default="identity",
                          metavar="LVPW|identity")
    compress.add_argument("--out", metavar="LVCR")
    compress.add_argument("--threads", type=int,
                          default=os.cpu_count() or 1)
    compress.set_defaults(func=_cmd_compress)

    inspect = commands.add_parser("inspect", help="dump a segment's merge plan")
    _add_input_flags(inspect)
    _add_config_flags(inspect)
    inspect.add_argument("--segment", type=int, required=True)
    inspect.add_argument("--dump-plan", action="store_true")
    inspect.set_defaults(func=_cmd_inspect)

    oracle = commands.add_parser(
        "oracle-check", help="differential test against the brute-force merger")
    oracle.add_argument("--trials", type=int, default=100)
    oracle.add_argument("--max-tokens", type=int, default=256)
    oracle.add_argument("--seed", type=int, default=0)
    oracle.add_argument("--inject-tiebreak-bug", action="store_true",
                        help=argparse.SUPPRESS)  # negative control, test only
    oracle.set_defaults(func=_cmd_oracle_check)

    bench = commands.add_parser("bench", help="time per-segment merging")
    bench.add_argument("--synthetic", metavar="T,N,d,L_enc,seed[,events]",
                       required=True)
    _add_config_flags(bench)
    bench.add_argument("--repeat", type=int, default=3)
    bench.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    bench.add_argument("--json", action="store_true")
    bench.set_defaults(func=_cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except EngineError as error:
        print(f"ERROR {error.code}: {error}", file=sys.stderr)
        return 1
    except OSError as error:
        print(f"ERROR IOError: {error}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
