"""Rebuild a series from the samples kept at its segmentation points."""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .errors import InvalidParameterError
from .relevance import RelevanceProfile, RelevanceSpec, TimeSeries, relevance_profile
from .transport import Segmentation
from .utils.numeric import compensated_cumsum

logger = logging.getLogger(__name__)


class ReconstructionKind(str, Enum):
    CONSTANT = "constant"
    LINEAR = "linear"
    REGRESSION = "regression"


@dataclass(frozen=True, eq=False)
class Reconstruction:
    """A reconstructed series and the sample indices it was built from.

    ``stored_indices`` are the samples the segmentation points landed on;
    ``knot_indices`` add the first and last sample as anchors.
    """

    kind: ReconstructionKind
    sampled: np.ndarray
    segmentation: Segmentation
    stored_indices: np.ndarray
    knot_indices: np.ndarray

    @property
    def stored_point_count(self) -> int:
        return int(self.knot_indices.size)


@dataclass(frozen=True, eq=False)
class RelevanceError:
    differences: np.ndarray
    max: float


def snap_to_samples(points, timestamps) -> np.ndarray:
    """Index of the sample nearest each point; ties go to the later sample."""
    x = np.asarray(timestamps, dtype=np.float64)
    points = np.asarray(points, dtype=np.float64)
    right = np.clip(np.searchsorted(x, points, side="left"), 0, x.size - 1)
    left = np.clip(right - 1, 0, x.size - 1)
    take_right = (x[right] - points) <= (points - x[left])
    return np.where(take_right, right, left)


def snap_segmentation(segmentation: Segmentation, timestamps) -> Segmentation:
    """Move every segmentation point onto its nearest sample timestamp."""
    x = np.asarray(timestamps, dtype=np.float64)
    index = snap_to_samples(segmentation.points, x)
    return Segmentation(
        points=x[index],
        lower=segmentation.lower,
        upper=segmentation.upper,
        source_indices=segmentation.source_indices,
        integerized=segmentation.integerized,
    )


def _aligned_indices(points: np.ndarray, x: np.ndarray) -> np.ndarray:
    index = np.clip(np.searchsorted(x, points, side="left"), 0, x.size - 1)
    misaligned = np.flatnonzero(x[index] != points)
    if misaligned.size:
        bad = float(points[misaligned[0]])
        raise InvalidParameterError(
            f"segmentation point {bad!r} is not a sample timestamp; snap it first"
        )
    return index


def _segment_of_sample(n: int, knots: np.ndarray) -> np.ndarray:
    """Segment owning each sample: knots[l] <= i < knots[l+1], the last one closed."""
    segment = np.searchsorted(knots, np.arange(n), side="right") - 1
    return np.clip(segment, 0, knots.size - 2)


def _constant(y: np.ndarray, knots: np.ndarray) -> np.ndarray:
    prefix = np.concatenate(([0.0], compensated_cumsum(y)))
    start, stop = knots[:-1], knots[1:]
    means = (prefix[stop + 1] - prefix[start]) / (stop - start + 1)
    return means[_segment_of_sample(y.size, knots)]


def _regression(x: np.ndarray, y: np.ndarray, knots: np.ndarray) -> np.ndarray:
    segment = _segment_of_sample(y.size, knots)
    bounds = np.searchsorted(segment, np.arange(knots.size), side="left")
    sampled = np.empty_like(y)
    for start, stop in zip(bounds[:-1], bounds[1:]):
        if stop - start == 1:
            sampled[start] = y[start]
            continue
        xs = x[start:stop] - x[start]
        slope, intercept = np.polyfit(xs, y[start:stop], 1)
        sampled[start:stop] = intercept + slope * xs
    return sampled


def reconstruct(series: TimeSeries, segmentation: Segmentation,
                kind: ReconstructionKind) -> Reconstruction:
    """Reconstruct ``series`` from the samples at the (snapped) segmentation points.

    The first and last samples always act as anchors.

    - constant: each segment takes the mean of the samples between its two
      knots, both included.
    - linear: straight lines through consecutive knots.
    - regression: least-squares line over the samples each segment owns.
    """
    kind = ReconstructionKind(kind)
    x, y = series.timestamps, series.values
    stored = np.unique(_aligned_indices(segmentation.points, x))
    knots = np.unique(np.concatenate(([0], stored, [x.size - 1])))

    if knots.size == 1:
        sampled = y.copy()
    elif kind is ReconstructionKind.CONSTANT:
        sampled = _constant(y, knots)
    elif kind is ReconstructionKind.LINEAR:
        sampled = np.interp(x, x[knots], y[knots])
    else:
        sampled = _regression(x, y, knots)

    logger.debug("reconstructed %d samples from %d knots (%s)", x.size, knots.size, kind.value)
    return Reconstruction(kind=kind, sampled=sampled, segmentation=segmentation,
                          stored_indices=stored, knot_indices=knots)


def reconstruction_relevance(series: TimeSeries, reconstruction: Reconstruction,
                             spec: RelevanceSpec) -> RelevanceProfile:
    """Relevance profile of the reconstructed values on the original timestamps."""
    rebuilt = TimeSeries(series.timestamps, reconstruction.sampled)
    return relevance_profile(rebuilt, spec)


def relevance_error(original: RelevanceProfile,
                    reconstructed: RelevanceProfile) -> RelevanceError:
    """Pointwise absolute difference between two raw score vectors."""
    if len(original) != len(reconstructed):
        raise InvalidParameterError(
            f"relevance profiles differ in length ({len(original)} vs {len(reconstructed)})"
        )
    differences = np.abs(original.scores - reconstructed.scores)
    return RelevanceError(differences=differences, max=float(np.max(differences)))


def reconstruct_series(series: TimeSeries, segmentation: Segmentation,
                       kind: Optional[ReconstructionKind]) -> Optional[Reconstruction]:
    """Snap and reconstruct, or ``None`` when no reconstruction was requested."""
    if kind is None:
        return None
    return reconstruct(series, snap_segmentation(segmentation, series.timestamps), kind)
