"""One-dimensional optimal transport from weighted samples to equal-mass points.

The coupling moves the relevance profile onto ``n_prime`` target points of
mass ``1/n_prime`` each. In one dimension the optimal coupling is the
north-west-corner one: walk both cumulative mass curves together and hand
out mass where they overlap. Each target point is then the weighted mean of
the source timestamps coupled to it.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import InvalidParameterError
from .relevance import RelevanceProfile
from .utils.numeric import compensated_cumsum, first_at_least

logger = logging.getLogger(__name__)

# Cumulative weights this close to a target boundary are put on it.
_BOUNDARY_SNAP = 8 * np.finfo(np.float64).eps


def _targets(n_prime: int) -> np.ndarray:
    """Cumulative target masses j/n_prime for j = 1..n_prime."""
    return np.arange(1, n_prime + 1, dtype=np.float64) / n_prime


def cumulative_weights(weights: np.ndarray, n_prime: int) -> np.ndarray:
    """Accurate running totals of ``weights`` ending exactly at 1.

    Totals within a few ulps of a target boundary are snapped onto it so that
    aligned profiles (uniform weights, for one) give a clean diagonal coupling.
    """
    cumulative = compensated_cumsum(weights)
    cumulative[-1] = 1.0
    nearest = np.rint(cumulative * n_prime)
    aligned = np.abs(cumulative - nearest / n_prime) <= _BOUNDARY_SNAP
    cumulative = np.where(aligned, nearest / n_prime, cumulative)
    cumulative = np.clip(cumulative, 0.0, 1.0)
    return np.maximum.accumulate(cumulative)


@dataclass(frozen=True, eq=False)
class Coupling:
    """Sparse transport plan. Index arrays are 0-based; only positive masses are kept."""

    rows: np.ndarray
    cols: np.ndarray
    mass: np.ndarray
    n: int
    n_prime: int
    cumulative: np.ndarray

    def __len__(self) -> int:
        return int(self.mass.size)

    def entries(self) -> List[Tuple[int, int, float]]:
        """``(i, j, mass)`` triples with 1-based indices."""
        return [
            (int(i) + 1, int(j) + 1, float(m))
            for i, j, m in zip(self.rows, self.cols, self.mass)
        ]

    def row_sums(self) -> np.ndarray:
        return np.bincount(self.rows, weights=self.mass, minlength=self.n)

    def col_sums(self) -> np.ndarray:
        return np.bincount(self.cols, weights=self.mass, minlength=self.n_prime)

    def dense(self) -> np.ndarray:
        """The full ``n x n_prime`` matrix; meant for small problems."""
        matrix = np.zeros((self.n, self.n_prime))
        np.add.at(matrix, (self.rows, self.cols), self.mass)
        return matrix


@dataclass(frozen=True, eq=False)
class Segmentation:
    """Segmentation points and, when known, the source-sample interval of each.

    ``source_indices`` holds ``k_0..k_n_prime`` (0-based sample indices) with
    point ``j`` guaranteed inside ``[timestamps[k_{j-1}], timestamps[k_j]]``.
    """

    points: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    source_indices: Optional[np.ndarray] = None
    integerized: bool = False

    def __len__(self) -> int:
        return int(self.points.size)

    @classmethod
    def from_points(cls, points) -> "Segmentation":
        points = np.asarray(points, dtype=np.float64).reshape(-1)
        return cls(points=points, lower=points.copy(), upper=points.copy())

    @property
    def intervals(self) -> List[Tuple[float, float]]:
        return [(float(a), float(b)) for a, b in zip(self.lower, self.upper)]


def optimal_coupling(weights: RelevanceProfile, n_prime: int) -> Coupling:
    """Optimal coupling between the weights and ``n_prime`` uniform targets.

    Equivalent to filling the transport matrix from the bottom-right corner,
    moving up a row when a source is used up and left a column when a target
    is full. Both cumulative curves are merged, and each gap between
    consecutive breakpoints becomes one entry, so zero-mass rows and
    exact ties produce no entries.
    """
    w = np.asarray(weights.weights, dtype=np.float64)
    n = w.size
    if not 1 <= n_prime <= n:
        raise InvalidParameterError(f"n_prime must be in [1, {n}], got {n_prime}")

    cumulative = cumulative_weights(w, n_prime)
    targets = _targets(n_prime)

    breakpoints = np.unique(np.concatenate(([0.0], cumulative, targets)))
    mass = np.diff(breakpoints)
    ends = breakpoints[1:]
    keep = mass > 0
    mass, ends = mass[keep], ends[keep]

    rows = first_at_least(cumulative, ends)
    cols = first_at_least(targets, ends)

    logger.debug("coupling n=%d n_prime=%d entries=%d", n, n_prime, mass.size)
    return Coupling(
        rows=rows, cols=cols, mass=mass, n=n, n_prime=n_prime, cumulative=cumulative
    )


def interval_indices(cumulative: np.ndarray, n_prime: int) -> np.ndarray:
    """``k_0..k_n_prime``: k_0 = 0 and k_u is the first sample whose cumulative weight reaches u/n_prime."""
    k = np.empty(n_prime + 1, dtype=np.intp)
    k[0] = 0
    k[1:] = first_at_least(cumulative, _targets(n_prime))
    return k


def segmentation_points(coupling: Coupling, timestamps,
                        integerize: bool = False) -> Segmentation:
    """Image of each target under the coupling's barycentric projection.

    Point ``j`` is the mass-weighted mean of the timestamps coupled to target
    ``j``. Column masses equal ``1/n_prime`` up to rounding; dividing by the
    realised mass keeps each point inside its guaranteed interval. Offsets are
    taken from the column's last sample, so a column fed by one sample lands
    on it exactly.
    """
    x = np.asarray(timestamps, dtype=np.float64)
    if x.size != coupling.n:
        raise InvalidParameterError(
            f"coupling covers {coupling.n} samples but {x.size} timestamps were given"
        )

    k = interval_indices(coupling.cumulative, coupling.n_prime)
    lower, upper = x[k[:-1]], x[k[1:]]

    offset = x[coupling.rows] - upper[coupling.cols]
    pulled = np.bincount(coupling.cols, weights=coupling.mass * offset,
                         minlength=coupling.n_prime)
    points = upper + pulled / coupling.col_sums()
    points = np.clip(points, lower, upper)
    if integerize:
        points = np.ceil(points)

    return Segmentation(points=points, lower=lower, upper=upper,
                        source_indices=k, integerized=integerize)


def guaranteed_intervals(weights: RelevanceProfile, n_prime: int,
                         timestamps) -> List[Tuple[float, float]]:
    """``[x_{k_{j-1}}, x_{k_j}]`` for every target ``j``, computed from the weights alone."""
    x = np.asarray(timestamps, dtype=np.float64)
    w = np.asarray(weights.weights, dtype=np.float64)
    if x.size != w.size:
        raise InvalidParameterError("weights and timestamps differ in length")
    if not 1 <= n_prime <= w.size:
        raise InvalidParameterError(f"n_prime must be in [1, {w.size}], got {n_prime}")
    k = interval_indices(cumulative_weights(w, n_prime), n_prime)
    return [(float(x[a]), float(x[b])) for a, b in zip(k[:-1], k[1:])]


def transport_cost(coupling: Coupling, timestamps, points) -> float:
    """Squared-distance cost of moving the samples onto ``points``."""
    x = np.asarray(timestamps, dtype=np.float64)
    points = np.asarray(points, dtype=np.float64)
    gap = x[coupling.rows] - points[coupling.cols]
    return float(np.sum(coupling.mass * gap * gap))


def batch_segmentation(weights: RelevanceProfile, timestamps, n_prime: int,
                       integerize: bool = False) -> Segmentation:
    """Coupling and projection in one call."""
    return segmentation_points(optimal_coupling(weights, n_prime), timestamps, integerize)
