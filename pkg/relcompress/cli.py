#!/usr/bin/env python3
"""Command line interface for relcompress."""

import argparse
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

from . import __version__
from .commands import cmd_bench, cmd_compress, cmd_eval, cmd_stream
from .errors import RelcompressError
from .models import RunConfig, RunMode
from .relevance import QueryShape, RelevanceKind, RelevanceSpec

COMMANDS = {
    "compress": cmd_compress,
    "stream": cmd_stream,
    "bench": cmd_bench,
    "eval": cmd_eval,
}

# Per-subcommand defaults that differ from RunConfig's
SUBCOMMAND_DEFAULTS = {
    "stream": {"init_nprime": 10, "checkpoint_every": 1000},
    "bench": {"init_nprime": 500, "checkpoint_every": 5000, "p": 2},
}


def add_relevance_arguments(parser):
    group = parser.add_argument_group("relevance")
    group.add_argument(
        "--relevance",
        choices=[kind.value for kind in RelevanceKind],
        default=RelevanceKind.ABS_MAGNITUDE.value,
        help="Relevance score: |y|^p, |dy|^p, thresholded |dy|, or query shape (default: abs)",
    )
    group.add_argument("--p", type=int, default=None, help="Score exponent (default: 1)")
    group.add_argument("--beta", type=float, default=None, help="Threshold for --relevance thresh")
    group.add_argument("--query-file", type=str, default=None,
                       help="One-column CSV holding an odd-length query shape")
    group.add_argument("--normalize-window", action="store_true",
                       help="Rescale the query to each window's mean and std")


def add_target_arguments(parser):
    target = parser.add_mutually_exclusive_group()
    target.add_argument("--n-points", type=int, default=None,
                        help="Number of segmentation points n'")
    target.add_argument("--ratio", type=float, default=None,
                        help="Target compression ratio n/n' (n' rounded down, at least 1)")
    parser.add_argument("--integerize", action="store_true",
                        help="Round segmentation points up to the next integer")


def add_stream_arguments(parser):
    group = parser.add_argument_group("streaming")
    group.add_argument("--alpha", type=float, default=0.2,
                       help="Synopsis accuracy parameter in [0, 1] (default: 0.2)")
    group.add_argument("--init-n", type=int, default=1000,
                       help="Points observed before the synopsis starts (default: 1000)")
    group.add_argument("--init-nprime", type=int, default=None,
                       help="Initial number of segmentation points")
    group.add_argument("--checkpoint-every", type=int, default=None,
                       help="Points between checkpoints")


def add_output_arguments(parser, reconstruction_default="linear"):
    parser.add_argument(
        "--reconstruction",
        choices=["constant", "linear", "regression", "none"],
        default=reconstruction_default,
        help=f"Reconstruction written alongside the segmentation (default: {reconstruction_default})",
    )
    parser.add_argument("--out-dir", type=str, default=".",
                        help="Directory for all artifacts (default: current directory)")
    parser.add_argument("--seed", type=int, default=0, help="Seed recorded in the report")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log debug output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relcompress",
        description="Relevance-aware time-series compression",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  relcompress compress series.csv --relevance diff --n-points 100
  relcompress stream - --alpha 0.2 --checkpoint-every 500 < series.csv
  relcompress bench --length 50000 --out-dir bench/
  relcompress eval series.csv --labels labels.csv --relevance query --query-file q.csv --ratio 50
        """,
    )
    parser.add_argument("--version", action="version", version=f"relcompress {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    compress = subparsers.add_parser("compress", help="Segment a whole series at once")
    compress.add_argument("input", help="Headerless 'timestamp,value' CSV file")
    add_relevance_arguments(compress)
    add_target_arguments(compress)
    add_output_arguments(compress)

    stream = subparsers.add_parser("stream", help="Segment a series point by point")
    stream.add_argument("input", help="Headerless 'timestamp,value' CSV file, or - for stdin")
    add_relevance_arguments(stream)
    add_stream_arguments(stream)
    stream.add_argument("--compare-batch", action="store_true",
                        help="Also recompute the batch segmentation at every checkpoint")
    add_output_arguments(stream)

    bench = subparsers.add_parser("bench", help="Run the simulated sin^3 benchmark")
    add_relevance_arguments(bench)
    add_stream_arguments(bench)
    bench.add_argument("--length", type=int, default=500_000,
                       help="Length of the simulated stream (default: 500000)")
    add_output_arguments(bench)

    evaluate = subparsers.add_parser("eval", help="Report metrics per labelled interval")
    evaluate.add_argument("input", help="Headerless 'timestamp,value' CSV file")
    evaluate.add_argument("--labels", type=str, default=None,
                          help="CSV of 'start,end,kind[,name]' rows, kind Event or NonEvent")
    add_relevance_arguments(evaluate)
    add_target_arguments(evaluate)
    add_output_arguments(evaluate, reconstruction_default="regression")

    return parser


def _default(args, name, command, fallback):
    value = getattr(args, name, None)
    if value is not None:
        return value
    return SUBCOMMAND_DEFAULTS.get(command, {}).get(name, fallback)


def build_config(args) -> RunConfig:
    """Turn parsed arguments into a validated ``RunConfig``."""
    command = args.command
    query = None
    if args.query_file:
        query = QueryShape.from_csv(args.query_file).q.tolist()
    relevance = RelevanceSpec(
        kind=args.relevance,
        p=_default(args, "p", command, 1),
        beta=args.beta,
        query=query,
        normalize_window=args.normalize_window,
    )

    fields = dict(
        relevance=relevance,
        mode=RunMode.BATCH if command in ("compress", "eval") else RunMode.STREAM,
        reconstruction=None if args.reconstruction == "none" else args.reconstruction,
        out_dir=Path(args.out_dir),
        seed=args.seed,
    )
    if command in ("compress", "eval"):
        fields.update(n_points=args.n_points, ratio=args.ratio, integerize=args.integerize)
    if command in ("stream", "bench"):
        fields.update(
            alpha=args.alpha,
            init_n=args.init_n,
            init_nprime=_default(args, "init_nprime", command, 500),
            checkpoint_every=_default(args, "checkpoint_every", command, 5000),
        )
    if command == "stream":
        fields["compare_batch"] = args.compare_batch
    if command == "bench":
        fields["length"] = args.length
    if command != "bench":
        fields["input_path"] = args.input
    if command == "eval":
        fields["labels_path"] = args.labels
    return RunConfig(**fields)


def _validation_message(error: ValidationError) -> str:
    first = error.errors()[0]
    location = ".".join(str(part) for part in first.get("loc", ()))
    message = first["msg"].removeprefix("Value error, ")
    return f"{location}: {message}" if location else message


def main(argv=None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        config = build_config(args)
    except ValidationError as e:
        print(f"❌ Invalid options: {_validation_message(e)}", file=sys.stderr)
        print("💡 See 'relcompress {} --help'".format(args.command), file=sys.stderr)
        return 1
    except RelcompressError as e:
        print(f"❌ {e}", file=sys.stderr)
        return 1

    try:
        return COMMANDS[args.command](config)
    except RelcompressError as e:
        print(f"❌ {e}", file=sys.stderr)
        if "n_prime" in str(e) or "segmentation points" in str(e):
            print("💡 Lower --n-points or raise --ratio", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        print("\n👋 Interrupted", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
