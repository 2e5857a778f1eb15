"""Compression ratio, reconstruction error and bound checks."""

import logging
import math
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidParameterError, LabelError
from .models import (
    BoundCheck,
    EvalReport,
    GlobalMetrics,
    IntervalKind,
    IntervalLabel,
    IntervalReport,
)
from .reconstruct import Reconstruction, relevance_error
from .relevance import RelevanceProfile, TimeSeries
from .transport import Segmentation

logger = logging.getLogger(__name__)


def compression_ratio(points_in: int, points_stored: int) -> float:
    """``points_in / points_stored``; infinite when nothing was stored."""
    if points_stored < 1:
        return math.inf
    return points_in / points_stored


def _interval_mask(series: TimeSeries, interval: Tuple[float, float]) -> np.ndarray:
    start, end = interval
    x = series.timestamps
    return (x >= start) & (x <= end)


def relative_squared_error(series: TimeSeries, reconstruction: Reconstruction,
                           interval: Optional[Tuple[float, float]] = None) -> float:
    """Mean squared error over the interval divided by the interval's sum of |y|.

    Infinite when every value in the interval is zero.
    """
    if interval is None:
        mask = np.ones(len(series), dtype=bool)
    else:
        mask = _interval_mask(series, interval)
    count = int(np.count_nonzero(mask))
    if count == 0:
        raise InvalidParameterError(f"interval {interval} holds no samples")
    y = series.values[mask]
    gap = reconstruction.sampled[mask] - y
    denominator = math.fsum(np.abs(y))
    if denominator == 0:
        return math.inf
    return math.fsum(gap * gap) / count / denominator


def mse(series: TimeSeries, reconstruction: Reconstruction,
        interval: Optional[Tuple[float, float]] = None) -> float:
    if interval is None:
        mask = np.ones(len(series), dtype=bool)
    else:
        mask = _interval_mask(series, interval)
    if not mask.any():
        raise InvalidParameterError(f"interval {interval} holds no samples")
    gap = reconstruction.sampled[mask] - series.values[mask]
    return float(np.mean(gap * gap))


def _check_labels(series: TimeSeries, labels: Sequence[IntervalLabel]
                  ) -> Tuple[List[IntervalLabel], List[IntervalLabel]]:
    ordered = sorted(labels, key=lambda label: (label.start, label.end))
    for previous, current in zip(ordered, ordered[1:]):
        if current.start < previous.end:
            raise LabelError(
                f"labels {previous.name or previous.start!r} and "
                f"{current.name or current.start!r} overlap"
            )

    first, last = float(series.timestamps[0]), float(series.timestamps[-1])
    usable, skipped = [], []
    for label in ordered:
        if label.end < first or label.start > last or not _interval_mask(
                series, (label.start, label.end)).any():
            logger.warning("label [%g, %g] holds no samples; skipped", label.start, label.end)
            skipped.append(label)
        else:
            usable.append(label)
    return usable, skipped


def evaluate_intervals(series: TimeSeries, reconstruction: Reconstruction,
                       labels: Sequence[IntervalLabel], n_prime: int,
                       uniform_fallback: bool = False) -> EvalReport:
    """Whole-series metrics plus one row per usable label."""
    stored = reconstruction.stored_indices
    stored_x = series.timestamps[stored]
    global_ratio = compression_ratio(len(series), stored.size)
    global_metrics = GlobalMetrics(
        n=len(series),
        n_prime=n_prime,
        points_stored=int(stored.size),
        compression_ratio=global_ratio,
        compression_ratio_infinite=math.isinf(global_ratio),
        relative_error=relative_squared_error(series, reconstruction),
        mse=mse(series, reconstruction),
        uniform_fallback=uniform_fallback,
    )

    usable, skipped = _check_labels(series, labels)
    # non-events first, then events, each in time order
    usable.sort(key=lambda label: label.kind is IntervalKind.EVENT)
    rows = []
    for label in usable:
        interval = (label.start, label.end)
        points_in = int(np.count_nonzero(_interval_mask(series, interval)))
        points_stored = int(np.count_nonzero((stored_x >= label.start) & (stored_x <= label.end)))
        ratio = compression_ratio(points_in, points_stored)
        rows.append(IntervalReport(
            label=label,
            points_in=points_in,
            points_stored=points_stored,
            compression_ratio=ratio,
            compression_ratio_infinite=math.isinf(ratio),
            relative_error=relative_squared_error(series, reconstruction, interval),
            mse=mse(series, reconstruction, interval),
        ))

    return EvalReport(command="eval", global_metrics=global_metrics,
                      intervals=rows, skipped_labels=skipped)


def relevance_bound_check(original: RelevanceProfile, reconstructed: RelevanceProfile,
                          n_prime: int) -> BoundCheck:
    """Largest pointwise relevance change against ``sum(phi) / n_prime``."""
    result = relevance_error(original, reconstructed)
    bound = original.total / n_prime
    violations = int(np.count_nonzero(result.differences >= bound)) if bound > 0 else int(
        np.count_nonzero(result.differences > 0))
    return BoundCheck(
        name="relevance_error",
        bound=bound,
        worst=result.max,
        mean=float(np.mean(result.differences)),
        margin=bound - result.max,
        violations=violations,
        checked=int(result.differences.size),
        passed=violations == 0,
    )


def normalized_streaming_errors(points, segmentation: Segmentation, timestamps) -> np.ndarray:
    """``|streamed - batch| / x_{k_{j+1}}`` per point, with ``x_n`` used for the last one."""
    points = np.asarray(points, dtype=np.float64)
    x = np.asarray(timestamps, dtype=np.float64)
    if points.size != segmentation.points.size:
        raise InvalidParameterError(
            f"streamed estimate has {points.size} points, batch has {segmentation.points.size}"
        )
    if segmentation.source_indices is None:
        raise InvalidParameterError("batch segmentation carries no source indices")
    k = segmentation.source_indices
    scale = np.append(x[k[2:]], x[-1])
    error = np.abs(points - segmentation.points)
    with np.errstate(divide="ignore", invalid="ignore"):
        normalized = np.where(scale > 0, error / scale, np.where(error > 0, math.inf, 0.0))
    return normalized


def streaming_bound_check(points, segmentation: Segmentation, timestamps,
                          alpha: float, tolerance: float = 1e-9) -> BoundCheck:
    """Streamed points against ``4 * alpha * x_{k_{j+1}}`` (positive timestamps).

    ``tolerance`` absorbs rounding so an exact run (alpha = 0) passes.
    """
    normalized = normalized_streaming_errors(points, segmentation, timestamps)
    bound = 4.0 * alpha
    worst = float(np.max(normalized)) if normalized.size else 0.0
    violations = int(np.count_nonzero(normalized > bound + tolerance))
    return BoundCheck(
        name="streaming_error",
        bound=bound,
        worst=worst,
        mean=float(np.mean(normalized)) if normalized.size else 0.0,
        margin=bound - worst,
        violations=violations,
        checked=int(normalized.size),
        passed=violations == 0,
    )


def bound_report(checks: Iterable[BoundCheck],
                 report: Optional[EvalReport] = None,
                 command: str = "eval") -> EvalReport:
    """Attach bound checks to ``report`` (or a fresh one) and log any violation."""
    checks = list(checks)
    for check in checks:
        if not check.passed:
            logger.warning("%s bound violated at %d of %d points (worst %g, bound %g)",
                           check.name, check.violations, check.checked, check.worst, check.bound)
    if report is None:
        return EvalReport(command=command, bounds=checks)
    return report.model_copy(update={"bounds": list(report.bounds) + checks})


def ordering_holds(report: EvalReport, max_event_error: float = 0.1) -> bool:
    """True when every event compresses less and reconstructs better than every background window.

    Event errors must also stay below ``max_event_error``.
    """
    events = [row for row in report.intervals if row.label.kind is IntervalKind.EVENT]
    others = [row for row in report.intervals if row.label.kind is IntervalKind.NON_EVENT]
    if not events or not others:
        return True

    worst_event_error = max(row.relative_error for row in events)
    return (max(row.compression_ratio for row in events)
            < min(row.compression_ratio for row in others)
            and worst_event_error < min(row.relative_error for row in others)
            and worst_event_error < max_event_error)
