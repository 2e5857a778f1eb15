"""The work behind each CLI subcommand.

Every ``cmd_*`` takes a validated ``RunConfig``, writes its artifacts under
``config.out_dir`` and returns the process exit status. Library errors are
left to propagate; the CLI turns them into diagnostics.
"""

import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .errors import InvalidParameterError, SeriesFormatError
from .metrics import (
    bound_report,
    combine_checks,
    compression_ratio,
    evaluate_intervals,
    mse,
    ordering_holds,
    relevance_bound_check,
    streaming_bound_check,
)
from .models import EvalReport, GlobalMetrics, RunConfig
from .reconstruct import (
    Reconstruction,
    ReconstructionKind,
    reconstruct_series,
    reconstruction_relevance,
    snap_to_samples,
)
from .relevance import (
    RelevanceProfile,
    RelevanceStream,
    TimeSeries,
    normalize_weights,
    relevance_profile,
    score,
)
from .synopsis import Synopsis, dump_snapshot
from .transport import Segmentation, batch_segmentation
from .utils.series_io import (
    JsonLinesWriter,
    format_float,
    iter_records,
    open_input,
    read_labels,
    read_series,
    write_json,
    write_reconstruction_csv,
    write_segmentation_csv,
    write_table,
)
from .utils.synthetic import sine_cubed_series

logger = logging.getLogger(__name__)

SEGMENTATION_CSV = "segmentation.csv"
RECONSTRUCTION_CSV = "reconstruction.csv"
REPORT_JSON = "report.json"
CHECKPOINTS_JSONL = "checkpoints.jsonl"
SYNOPSIS_JSON = "synopsis.json"
BENCH_CSV = "bench.csv"

BENCH_COLUMNS = [
    "n",
    "n_prime",
    "synopsis_length",
    "mean_normalized_error",
    "max_normalized_error",
    "bound",
    "update_seconds",
    "query_seconds",
    "batch_seconds",
    "recon_error_ratio",
]


@dataclass(frozen=True, eq=False)
class CompressionResult:
    profile: RelevanceProfile
    n_prime: int
    segmentation: Segmentation
    reconstruction: Optional[Reconstruction]


def _reconstruction_kind(config: RunConfig) -> Optional[ReconstructionKind]:
    if config.reconstruction is None:
        return None
    return ReconstructionKind(config.reconstruction)


def _base_report(command: str, config: RunConfig) -> EvalReport:
    return EvalReport(command=command, config=config.model_dump(mode="json"), seed=config.seed)


def _stored_count(segmentation: Segmentation, timestamps) -> int:
    return int(np.unique(snap_to_samples(segmentation.points, timestamps)).size)


def _global_metrics(series: TimeSeries, result: CompressionResult) -> GlobalMetrics:
    if result.reconstruction is not None:
        report = evaluate_intervals(series, result.reconstruction, [], result.n_prime,
                                    uniform_fallback=result.profile.uniform_fallback)
        return report.global_metrics
    stored = _stored_count(result.segmentation, series.timestamps)
    ratio = compression_ratio(len(series), stored)
    return GlobalMetrics(n=len(series), n_prime=result.n_prime, points_stored=stored,
                         compression_ratio=ratio, compression_ratio_infinite=math.isinf(ratio),
                         uniform_fallback=result.profile.uniform_fallback)


def _relevance_checks(series: TimeSeries, result: CompressionResult, config: RunConfig):
    if result.reconstruction is None:
        return []
    rebuilt = reconstruction_relevance(series, result.reconstruction, config.relevance)
    return [relevance_bound_check(result.profile, rebuilt, result.n_prime)]


def compress_series(series: TimeSeries, config: RunConfig) -> CompressionResult:
    """Score, segment and (optionally) reconstruct a whole series."""
    profile = relevance_profile(series, config.relevance)
    n_prime = config.resolve_n_prime(len(series))
    segmentation = batch_segmentation(profile, series.timestamps, n_prime, config.integerize)
    reconstruction = reconstruct_series(series, segmentation, _reconstruction_kind(config))
    logger.info("compressed %d points to %d segmentation points", len(series), n_prime)
    return CompressionResult(profile=profile, n_prime=n_prime, segmentation=segmentation,
                             reconstruction=reconstruction)


def cmd_compress(config: RunConfig) -> int:
    series = read_series(config.input_path)
    result = compress_series(series, config)
    out_dir = Path(config.out_dir)

    seg = result.segmentation
    write_segmentation_csv(out_dir / SEGMENTATION_CSV, seg.points, seg.lower, seg.upper)
    if result.reconstruction is not None:
        write_reconstruction_csv(out_dir / RECONSTRUCTION_CSV, series, result.reconstruction.sampled)

    report = _base_report("compress", config).model_copy(
        update={"global_metrics": _global_metrics(series, result)})
    report = bound_report(_relevance_checks(series, result, config), report)
    write_json(out_dir / REPORT_JSON, report)

    metrics = report.global_metrics
    print(f"✅ {len(series)} points -> {result.n_prime} segmentation points "
          f"(C_R {format_float(metrics.compression_ratio)})")
    print(f"📁 Artifacts written to {out_dir}")
    return 0


class StreamRunner:
    """Feeds scored points into a synopsis and writes checkpoints as it goes."""

    def __init__(self, config: RunConfig, checkpoints: Optional[JsonLinesWriter] = None):
        self.config = config
        self.checkpoints = checkpoints
        self.synopsis: Optional[Synopsis] = None
        self.timestamps: List[float] = []
        self.scores: List[float] = []
        self.bound_checks = []

    def feed(self, timestamp: float, phi: float) -> None:
        self.timestamps.append(timestamp)
        self.scores.append(phi)
        if self.synopsis is None:
            if len(self.timestamps) >= self.config.init_n:
                self._initialise()
            return
        self.synopsis.observe(timestamp, phi)
        self._maybe_checkpoint()

    def finish(self) -> Synopsis:
        if self.synopsis is None:
            if not self.timestamps:
                raise SeriesFormatError(0, "stream holds no data lines")
            self._initialise()
        return self.synopsis

    def _initialise(self) -> None:
        head = len(self.timestamps)
        prefix = TimeSeries(self.timestamps, np.zeros(head))
        n_prime = min(self.config.init_nprime, head)
        self.synopsis = Synopsis.init(prefix, self.scores, n_prime, self.config.alpha)
        logger.info("synopsis initialised on %d points with n_prime=%d", head, n_prime)
        self._maybe_checkpoint()

    def _maybe_checkpoint(self) -> None:
        synopsis = self.synopsis
        if synopsis.n % self.config.checkpoint_every:
            return
        estimate = synopsis.query()
        record = {"n": synopsis.n, "nPrime": synopsis.n_prime,
                  "points": estimate.points.tolist()}
        if self.config.compare_batch:
            batch = self.batch_segmentation(synopsis.n_prime)
            record["batchPoints"] = batch.points.tolist()
            self.bound_checks.append(streaming_bound_check(
                estimate.points, batch, self.timestamps, self.config.alpha))
        if self.checkpoints is not None:
            self.checkpoints.write(record)

    def batch_segmentation(self, n_prime: int) -> Segmentation:
        profile = normalize_weights(self.scores)
        return batch_segmentation(profile, self.timestamps, n_prime)


def cmd_stream(config: RunConfig) -> int:
    out_dir = Path(config.out_dir)
    scorer = RelevanceStream(config.relevance)
    values: List[float] = []
    raw_timestamps: List[float] = []

    with JsonLinesWriter(out_dir / CHECKPOINTS_JSONL) as checkpoints:
        runner = StreamRunner(config, checkpoints)
        with open_input(config.input_path) as handle:
            for _, timestamp, value in iter_records(handle):
                raw_timestamps.append(timestamp)
                values.append(value)
                for scored in scorer.push(timestamp, value):
                    runner.feed(*scored)
        for scored in scorer.flush():
            runner.feed(*scored)
        synopsis = runner.finish()
        written = checkpoints.count

    estimate = synopsis.query()
    write_segmentation_csv(out_dir / SEGMENTATION_CSV, estimate.points,
                           estimate.lower_ends, estimate.upper_ends)
    dump_snapshot(synopsis, out_dir / SYNOPSIS_JSON)

    series = TimeSeries(raw_timestamps, values)
    kind = _reconstruction_kind(config)
    reconstruction = reconstruct_series(series, Segmentation.from_points(estimate.points), kind)
    profile = normalize_weights(runner.scores)
    result = CompressionResult(profile=profile, n_prime=synopsis.n_prime,
                               segmentation=Segmentation.from_points(estimate.points),
                               reconstruction=reconstruction)
    if reconstruction is not None:
        write_reconstruction_csv(out_dir / RECONSTRUCTION_CSV, series, reconstruction.sampled)

    report = _base_report("stream", config).model_copy(
        update={"global_metrics": _global_metrics(series, result)})
    checks = _relevance_checks(series, result, config)
    if runner.bound_checks:
        checks.append(combine_checks("streaming_error", runner.bound_checks))
    report = bound_report(checks, report)
    write_json(out_dir / REPORT_JSON, report)

    print(f"✅ {synopsis.n} points streamed, n' = {synopsis.n_prime}, "
          f"synopsis length {len(synopsis)}, {written} checkpoints")
    print(f"📁 Artifacts written to {out_dir}")
    return 0


def _mse_ratio(streamed: float, batch: float) -> float:
    if batch == 0:
        return 1.0 if streamed == 0 else math.inf
    return streamed / batch


def _bench_checkpoint(series: TimeSeries, scores: np.ndarray, synopsis: Synopsis,
                      kind: ReconstructionKind, alpha: float):
    n = synopsis.n
    started = time.perf_counter()
    estimate = synopsis.query()
    query_seconds = time.perf_counter() - started

    x = series.timestamps[:n]
    started = time.perf_counter()
    batch = batch_segmentation(normalize_weights(scores[:n]), x, synopsis.n_prime)
    batch_seconds = time.perf_counter() - started

    check = streaming_bound_check(estimate.points, batch, x, alpha)
    prefix = series.prefix(n)
    streamed = reconstruct_series(prefix, Segmentation.from_points(estimate.points), kind)
    batched = reconstruct_series(prefix, batch, kind)
    ratio = _mse_ratio(mse(prefix, streamed), mse(prefix, batched))
    return check, query_seconds, batch_seconds, ratio


def run_bench(config: RunConfig) -> Tuple[List[list], Synopsis, list]:
    """Stream the simulated series, comparing against batch at every checkpoint."""
    series = sine_cubed_series(config.length)
    scores = score(series, config.relevance)
    kind = _reconstruction_kind(config) or ReconstructionKind.LINEAR

    head = min(config.init_n, len(series))
    synopsis = Synopsis.init(series.prefix(head), scores[:head],
                             min(config.init_nprime, head), config.alpha)
    xs = series.timestamps.tolist()
    phis = scores.tolist()
    every = config.checkpoint_every
    observe = synopsis.observe

    rows, checks = [], []
    start = head
    while start < len(xs):
        # next multiple of checkpoint_every, or the end of the stream
        stop = min((start // every + 1) * every, len(xs))
        started = time.perf_counter()
        for t, phi in zip(xs[start:stop], phis[start:stop]):
            observe(t, phi)
        update_seconds = time.perf_counter() - started
        start = stop

        check, query_seconds, batch_seconds, ratio = _bench_checkpoint(
            series, scores, synopsis, kind, config.alpha)
        checks.append(check)
        rows.append([stop, synopsis.n_prime, len(synopsis), check.mean, check.worst, check.bound,
                     update_seconds, query_seconds, batch_seconds, ratio])
        logger.info("bench n=%d n_prime=%d L=%d max_err=%g", stop, synopsis.n_prime,
                    len(synopsis), check.worst)
    return rows, synopsis, checks


def cmd_bench(config: RunConfig) -> int:
    out_dir = Path(config.out_dir)
    print(f"⚡ Simulated sin^3 stream: {config.length} points, alpha={config.alpha}, "
          f"seed={config.seed}")
    rows, synopsis, checks = run_bench(config)
    write_table(out_dir / BENCH_CSV, BENCH_COLUMNS, rows)

    ratio = compression_ratio(synopsis.n, synopsis.n_prime)
    metrics = GlobalMetrics(n=synopsis.n, n_prime=synopsis.n_prime, points_stored=synopsis.n_prime,
                            compression_ratio=ratio)
    report = _base_report("bench", config).model_copy(update={"global_metrics": metrics})
    if checks:
        report = bound_report([combine_checks("streaming_error", checks)], report)
    write_json(out_dir / REPORT_JSON, report)

    print(f"✅ final n' = {synopsis.n_prime}, synopsis length {len(synopsis)}, "
          f"{len(rows)} checkpoints")
    for check in report.bounds:
        status = "✅" if check.passed else "❌"
        print(f"{status} {check.name}: worst {format_float(check.worst)} "
              f"(bound {format_float(check.bound)})")
    print(f"📁 Artifacts written to {out_dir}")
    return 0 if all(check.passed for check in report.bounds) else 1


def _print_interval_table(report: EvalReport) -> None:
    print(f"{'interval':<20} {'kind':<9} {'C_R':>10} {'rel. sq. error':>16}")
    for row in report.intervals:
        ratio = "inf" if row.compression_ratio_infinite else f"{row.compression_ratio:.2f}"
        print(f"{row.label.name:<20} {row.label.kind.value:<9} {ratio:>10} "
              f"{row.relative_error:>16.3e}")


def cmd_eval(config: RunConfig) -> int:
    kind = _reconstruction_kind(config)
    if kind is None:
        raise InvalidParameterError("eval needs a reconstruction kind other than 'none'")
    series = read_series(config.input_path)
    if config.labels_path is None:
        logger.warning("no labels given; reporting global metrics only")
        labels = []
    else:
        labels = read_labels(config.labels_path)

    result = compress_series(series, config)
    report = evaluate_intervals(series, result.reconstruction, labels, result.n_prime,
                                uniform_fallback=result.profile.uniform_fallback)
    report = report.model_copy(update={"config": config.model_dump(mode="json"),
                                       "seed": config.seed})
    report = bound_report(_relevance_checks(series, result, config), report)

    out_dir = Path(config.out_dir)
    write_json(out_dir / REPORT_JSON, report)

    for label in report.skipped_labels:
        print(f"⚠️  Label {label.name} [{label.start}, {label.end}] holds no samples; skipped")
    if report.intervals:
        _print_interval_table(report)
        if not ordering_holds(report):
            print("⚠️  Events do not compress less and reconstruct better than the background")
    metrics = report.global_metrics
    print(f"✅ global C_R {format_float(metrics.compression_ratio)}, "
          f"relative squared error {format_float(metrics.relative_error)}")
    print(f"📁 Report written to {out_dir / REPORT_JSON}")
    return 0
