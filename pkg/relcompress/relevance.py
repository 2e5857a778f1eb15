"""Relevance scoring: turn a time series into a per-sample mass profile."""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import InvalidParameterError, NonMonotoneTimestampError

logger = logging.getLogger(__name__)

# Floor on the query distance so a perfect match scores finitely.
DISTANCE_FLOOR = 1e-8

# Rows scored per vectorised block for query relevance.
_QUERY_BLOCK_ROWS = 1 << 15


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Strictly increasing timestamps with one value per timestamp."""

    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        x = np.array(self.timestamps, dtype=np.float64, copy=True).reshape(-1)
        y = np.array(self.values, dtype=np.float64, copy=True).reshape(-1)
        if x.shape != y.shape:
            raise InvalidParameterError(
                f"timestamps and values differ in length ({x.size} vs {y.size})"
            )
        if x.size == 0:
            raise InvalidParameterError("series must hold at least one point")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InvalidParameterError("series holds non-finite numbers")
        bad = np.flatnonzero(np.diff(x) <= 0)
        if bad.size:
            k = int(bad[0])
            raise NonMonotoneTimestampError(float(x[k]), float(x[k + 1]))
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "timestamps", x)
        object.__setattr__(self, "values", y)

    def __len__(self) -> int:
        return int(self.timestamps.size)

    def prefix(self, length: int) -> "TimeSeries":
        """The first ``length`` points."""
        return TimeSeries(self.timestamps[:length], self.values[:length])


class RelevanceKind(str, Enum):
    ABS_MAGNITUDE = "abs"
    ABS_DIFFERENCE = "diff"
    THRESHOLD_DIFFERENCE = "thresh"
    QUERY_SHAPE = "query"


@dataclass(frozen=True, eq=False)
class QueryShape:
    """Odd-length template compared against the window centred on each sample."""

    q: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=np.float64, copy=True).reshape(-1)
        if q.size == 0 or q.size % 2 == 0:
            raise InvalidParameterError(
                f"query length must be odd and positive, got {q.size}"
            )
        if not np.all(np.isfinite(q)):
            raise InvalidParameterError("query holds non-finite numbers")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @property
    def m(self) -> int:
        return int(self.q.size)

    @property
    def gamma(self) -> int:
        """Half-width of the window."""
        return (self.m - 1) // 2

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "QueryShape":
        """Read a template with one value per line (``#`` lines are comments)."""
        try:
            q = np.loadtxt(path, comments="#", delimiter=",", ndmin=1)
        except (OSError, ValueError) as e:
            raise InvalidParameterError(f"cannot read query file {path}: {e}") from e
        if q.ndim != 1:
            raise InvalidParameterError(
                f"query file {path} must hold a single column"
            )
        return cls(q)

    @classmethod
    def sinusoid(cls, m: int = 51, amplitude: float = 1.0) -> "QueryShape":
        """One full sine period sampled at ``m`` points: ``amplitude * sin(i*pi/gamma)``."""
        if m < 3 or m % 2 == 0:
            raise InvalidParameterError(f"sinusoid length must be odd and >= 3, got {m}")
        gamma = (m - 1) // 2
        i = np.arange(1, m + 1, dtype=np.float64)
        return cls(amplitude * np.sin(i * np.pi / gamma))


class RelevanceSpec(BaseModel):
    """Which relevance function to apply and its parameters."""

    model_config = ConfigDict(frozen=True)

    kind: RelevanceKind = Field(RelevanceKind.ABS_MAGNITUDE, description="Relevance function")
    p: int = Field(1, ge=1, description="Exponent applied to the raw score")
    beta: Optional[float] = Field(None, gt=0, description="Threshold for 'thresh'")
    query: Optional[List[float]] = Field(None, description="Template for 'query'")
    normalize_window: bool = Field(
        False, description="Rescale the template to each window's mean and std"
    )

    @model_validator(mode="after")
    def _check_kind_parameters(self):
        if self.kind is RelevanceKind.THRESHOLD_DIFFERENCE and self.beta is None:
            raise ValueError("threshold relevance needs beta > 0")
        if self.kind is RelevanceKind.QUERY_SHAPE:
            if not self.query:
                raise ValueError("query relevance needs a query template")
            if len(self.query) % 2 == 0:
                raise ValueError(
                    f"query length must be odd, got {len(self.query)}"
                )
        return self

    @property
    def query_shape(self) -> Optional[QueryShape]:
        if self.query is None:
            return None
        return QueryShape(np.asarray(self.query, dtype=np.float64))

    @property
    def lookahead(self) -> int:
        """How many later samples a score depends on."""
        if self.kind is RelevanceKind.QUERY_SHAPE:
            return (len(self.query) - 1) // 2
        return 0


@dataclass(frozen=True, eq=False)
class RelevanceProfile:
    """Raw scores and the normalised weights derived from them."""

    scores: np.ndarray
    weights: np.ndarray
    uniform_fallback: bool = False

    def __len__(self) -> int:
        return int(self.weights.size)

    @property
    def total(self) -> float:
        return math.fsum(self.scores)


def _score_windows(windows: np.ndarray, shape: QueryShape, p: int,
                   normalize_window: bool) -> np.ndarray:
    """Query relevance for rows of NaN-padded windows, one row per sample."""
    valid = ~np.isnan(windows)
    q = np.broadcast_to(shape.q, windows.shape)
    if normalize_window:
        mean = np.nanmean(windows, axis=1, keepdims=True)
        std = np.nanstd(windows, axis=1, keepdims=True)
        std = np.where(std > 0, std, 1.0)
        q = std * q + mean
    diff = np.where(valid, q - windows, 0.0)
    distance = np.sqrt(np.sum(diff * diff, axis=1))
    distance = np.maximum(distance, DISTANCE_FLOOR)
    return distance ** (-2.0 * p)


def _query_scores(y: np.ndarray, shape: QueryShape, p: int,
                  normalize_window: bool) -> np.ndarray:
    if shape.m > y.size:
        raise InvalidParameterError(
            f"query length {shape.m} exceeds series length {y.size}"
        )
    padded = np.pad(y, shape.gamma, constant_values=np.nan)
    windows = sliding_window_view(padded, shape.m)
    scores = np.empty(y.size, dtype=np.float64)
    for start in range(0, y.size, _QUERY_BLOCK_ROWS):
        stop = min(start + _QUERY_BLOCK_ROWS, y.size)
        scores[start:stop] = _score_windows(
            windows[start:stop], shape, p, normalize_window
        )
    return scores


def score(series: TimeSeries, spec: RelevanceSpec) -> np.ndarray:
    """Non-negative relevance score for every sample of ``series``.

    Differences treat the value before the first sample as 0. Query windows
    are truncated at the series ends.
    """
    y = series.values
    p = spec.p

    if spec.kind is RelevanceKind.ABS_MAGNITUDE:
        return np.abs(y) ** p

    if spec.kind is RelevanceKind.QUERY_SHAPE:
        return _query_scores(y, spec.query_shape, p, spec.normalize_window)

    step = np.abs(np.diff(y, prepend=0.0))
    if spec.kind is RelevanceKind.ABS_DIFFERENCE:
        return step ** p
    if spec.kind is RelevanceKind.THRESHOLD_DIFFERENCE:
        # unit step of (|dy| - beta); the exponent leaves 0 and 1 unchanged
        return (step > spec.beta).astype(np.float64)

    raise ValueError(f"Unsupported relevance kind: {spec.kind}")


def normalize_weights(scores) -> RelevanceProfile:
    """Divide scores by their total; an all-zero profile falls back to uniform."""
    scores = np.array(scores, dtype=np.float64, copy=True).reshape(-1)
    if scores.size == 0:
        raise InvalidParameterError("cannot normalise an empty score vector")
    if not np.all(np.isfinite(scores)):
        raise InvalidParameterError("scores hold non-finite numbers")
    if np.any(scores < 0):
        raise InvalidParameterError("scores must be non-negative")

    total = math.fsum(scores)
    if total > 0:
        return RelevanceProfile(scores=scores, weights=scores / total)

    logger.warning("all %d relevance scores are zero; using uniform weights", scores.size)
    uniform = np.full(scores.size, 1.0 / scores.size)
    return RelevanceProfile(scores=scores, weights=uniform, uniform_fallback=True)


def relevance_profile(series: TimeSeries, spec: RelevanceSpec) -> RelevanceProfile:
    """Score ``series`` and normalise in one step."""
    return normalize_weights(score(series, spec))


class RelevanceStream:
    """Scores points as they arrive.

    Local kinds emit each point immediately. Query relevance holds a point
    back until the half-width of later samples has arrived; ``flush`` scores
    the tail with truncated windows. The emitted scores equal what ``score``
    gives on the whole series.
    """

    def __init__(self, spec: RelevanceSpec):
        self.spec = spec
        self._shape = spec.query_shape if spec.kind is RelevanceKind.QUERY_SHAPE else None
        self._lookahead = spec.lookahead
        self._previous_value = 0.0
        # retained window: absolute index of the first kept sample, then samples
        self._first_index = 0
        self._xs: List[float] = []
        self._ys: List[float] = []
        self._next_to_emit = 0
        self._count = 0

    def push(self, timestamp: float, value: float) -> List[Tuple[float, float]]:
        """Add one point; returns the (timestamp, score) pairs now final."""
        spec = self.spec
        if spec.kind is RelevanceKind.ABS_MAGNITUDE:
            return [(timestamp, abs(value) ** spec.p)]

        if spec.kind in (RelevanceKind.ABS_DIFFERENCE, RelevanceKind.THRESHOLD_DIFFERENCE):
            step = abs(value - self._previous_value)
            self._previous_value = value
            if spec.kind is RelevanceKind.ABS_DIFFERENCE:
                return [(timestamp, step ** spec.p)]
            return [(timestamp, 1.0 if step > spec.beta else 0.0)]

        self._xs.append(timestamp)
        self._ys.append(value)
        self._count += 1
        ready = []
        while self._next_to_emit + self._lookahead < self._count:
            ready.append(self._emit(self._next_to_emit))
            self._next_to_emit += 1
        self._trim()
        return ready

    def flush(self) -> List[Tuple[float, float]]:
        """Score the points still waiting for right-hand context."""
        if self._shape is None:
            return []
        if self._count and self._shape.m > self._count:
            raise InvalidParameterError(
                f"query length {self._shape.m} exceeds series length {self._count}"
            )
        ready = []
        while self._next_to_emit < self._count:
            ready.append(self._emit(self._next_to_emit))
            self._next_to_emit += 1
        self._trim()
        return ready

    def _emit(self, index: int) -> Tuple[float, float]:
        gamma = self._lookahead
        window = np.full(self._shape.m, np.nan)
        lo = max(index - gamma, 0)
        hi = min(index + gamma + 1, self._count)
        offset = lo - (index - gamma)
        window[offset:offset + hi - lo] = self._ys[lo - self._first_index:hi - self._first_index]
        phi = _score_windows(window[np.newaxis, :], self._shape, self.spec.p,
                             self.spec.normalize_window)[0]
        return self._xs[index - self._first_index], float(phi)

    def _trim(self):
        keep_from = max(self._next_to_emit - self._lookahead, 0)
        drop = keep_from - self._first_index
        if drop > 0:
            del self._xs[:drop]
            del self._ys[:drop]
            self._first_index = keep_from
