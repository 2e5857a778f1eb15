"""Streaming synopsis that answers segmentation queries from a bounded summary.

The synopsis keeps triples ``(x, phi, xi)``: a timestamp, the relevance mass
merged into it and the first moment ``sum(phi * x)`` of that mass. Merging
only ever joins adjacent triples whose combined mass stays under
``epsilon`` times the total, which is what bounds the query error.

Columns live in numpy arrays. Points observed since the last query or prune
wait in a short Python tail and are folded into the arrays on demand.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from .errors import InvalidParameterError, NonMonotoneTimestampError, RelcompressError
from .models import SynopsisSnapshot
from .relevance import TimeSeries
from .utils.numeric import compensated_cumsum, first_at_least

logger = logging.getLogger(__name__)

# A growth only prunes once the synopsis is this many times longer than
# after the previous prune; 1.0 prunes on every growth.
DEFAULT_PRUNE_FACTOR = 2.0

# Merged runs stay this many ulps of the total below the threshold.
_MERGE_GUARD_ULPS = 4


def _read_only(values: np.ndarray) -> np.ndarray:
    view = values.view()
    view.flags.writeable = False
    return view


@dataclass(frozen=True, eq=False)
class SegmentationEstimate:
    """Approximate segmentation points with the synopsis timestamps bracketing each."""

    points: np.ndarray
    lower_ends: np.ndarray
    upper_ends: np.ndarray
    n_prime: int

    def __len__(self) -> int:
        return int(self.points.size)


class Synopsis:
    def __init__(self, n_prime: int, alpha: float, prune_factor: float = DEFAULT_PRUNE_FACTOR):
        if n_prime < 1:
            raise InvalidParameterError(f"n_prime must be >= 1, got {n_prime}")
        if not 0 <= alpha <= 1 or math.isnan(alpha):
            raise InvalidParameterError(f"alpha must be in [0, 1], got {alpha}")
        if not 1 <= prune_factor < math.inf:
            raise InvalidParameterError(f"prune_factor must be >= 1, got {prune_factor}")
        self.n_prime = int(n_prime)
        self.alpha = float(alpha)
        self.prune_factor = float(prune_factor)
        self.n = 0
        self.z = 0.0
        self.delta_z = 0.0
        self.merges = 0
        self._prune_at = 0
        self._last = -math.inf
        self._x = np.empty(0, dtype=np.float64)
        self._phi = np.empty(0, dtype=np.float64)
        self._xi = np.empty(0, dtype=np.float64)
        self._size = np.empty(0, dtype=np.int64)
        self._tail_x: List[float] = []
        self._tail_phi: List[float] = []

    @classmethod
    def init(cls, prefix: TimeSeries, scores: Sequence[float], n_prime: int,
             alpha: float, prune_factor: float = DEFAULT_PRUNE_FACTOR) -> "Synopsis":
        """Start a synopsis with one triple per prefix sample."""
        scores = np.array(scores, dtype=np.float64).reshape(-1)
        if scores.size == 0:
            raise InvalidParameterError("cannot initialise a synopsis from an empty prefix")
        if scores.size != len(prefix):
            raise InvalidParameterError(
                f"prefix has {len(prefix)} points but {scores.size} scores"
            )
        if n_prime > len(prefix):
            raise InvalidParameterError(
                f"initial n_prime {n_prime} exceeds prefix length {len(prefix)}"
            )
        if not np.all(np.isfinite(scores)) or np.any(scores < 0):
            raise InvalidParameterError("scores must be finite and non-negative")

        synopsis = cls(n_prime, alpha, prune_factor)
        x = np.array(prefix.timestamps, dtype=np.float64)
        synopsis._x = x
        synopsis._phi = scores
        synopsis._xi = scores * x
        synopsis._size = np.ones(scores.size, dtype=np.int64)
        synopsis._last = float(x[-1])
        synopsis.n = scores.size
        synopsis.z = math.fsum(scores.tolist())
        logger.debug("synopsis initialised: n=%d n_prime=%d Z=%g", synopsis.n, n_prime, synopsis.z)
        return synopsis

    @property
    def epsilon(self) -> float:
        return self.alpha / self.n_prime

    def __len__(self) -> int:
        return self._x.size + len(self._tail_x)

    @property
    def total_mass(self) -> float:
        self._flush()
        return math.fsum(self._phi.tolist())

    @property
    def timestamps(self) -> np.ndarray:
        self._flush()
        return _read_only(self._x)

    @property
    def masses(self) -> np.ndarray:
        self._flush()
        return _read_only(self._phi)

    @property
    def moments(self) -> np.ndarray:
        self._flush()
        return _read_only(self._xi)

    @property
    def sizes(self) -> np.ndarray:
        """Raw samples merged into each triple."""
        self._flush()
        return _read_only(self._size)

    def _flush(self) -> None:
        """Move the pending tail into the column arrays."""
        if not self._tail_x:
            return
        x = np.array(self._tail_x, dtype=np.float64)
        phi = np.array(self._tail_phi, dtype=np.float64)
        self._x = np.concatenate((self._x, x))
        self._phi = np.concatenate((self._phi, phi))
        self._xi = np.concatenate((self._xi, phi * x))
        self._size = np.concatenate((self._size, np.ones(x.size, dtype=np.int64)))
        self._tail_x = []
        self._tail_phi = []

    def observe(self, timestamp: float, phi: float) -> "Synopsis":
        """Fold one new sample in, growing ``n_prime`` when enough mass arrived."""
        timestamp = float(timestamp)
        phi = float(phi)
        if not timestamp > self._last:
            raise NonMonotoneTimestampError(self._last, timestamp)
        if not 0.0 <= phi < math.inf:
            raise InvalidParameterError(f"relevance score must be finite and >= 0, got {phi}")

        delta = self.delta_z + phi
        if delta > 0 and delta >= self.z / self.n_prime:
            self._grow(delta)
        else:
            self.delta_z = delta

        self._tail_x.append(timestamp)
        self._tail_phi.append(phi)
        self._last = timestamp
        self.n += 1
        return self

    def _grow(self, delta: float) -> None:
        self.n_prime += 1
        self.z += delta
        self.delta_z = 0.0
        logger.debug("n_prime grew to %d at n=%d", self.n_prime, self.n + 1)
        if len(self) >= self._prune_at:
            self.prune()
            self._prune_at = int(self.prune_factor * len(self))

    def prune(self, threshold: Optional[float] = None) -> "Synopsis":
        """Merge runs of adjacent light triples, scanning from the right.

        A run ending at triple ``z`` is extended left while its mass stays at
        most ``threshold`` (``epsilon`` times the total mass by default); the
        merged triple keeps the run's right-most timestamp. The first and last
        triples are never merged.

        Every run's left end comes from one ``searchsorted`` over the prefix
        sums, so only the walk from one run to the next is sequential.
        """
        self._flush()
        count = self._phi.size
        if count <= 3:
            return self
        prefix = np.concatenate(([0.0], compensated_cumsum(self._phi)))
        if threshold is None:
            threshold = self.epsilon * math.fsum(self._phi.tolist())
        limit = threshold - _MERGE_GUARD_ULPS * float(np.spacing(prefix[-1]))
        if not limit > 0:
            return self

        index = np.arange(count)
        reach = np.searchsorted(prefix, prefix[1:] - limit, side="left")
        starts = np.where(reach > index, index, np.maximum(reach, 1)).tolist()

        run_starts = []
        end = count - 2
        while end >= 2:
            start = starts[end]
            run_starts.append(start)
            end = start - 1

        groups = np.concatenate((np.arange(end + 1), run_starts[::-1], [count - 1])).astype(np.intp)
        if groups.size == count:
            return self

        last = np.append(groups[1:] - 1, count - 1)
        self._x = self._x[last]
        self._phi = np.add.reduceat(self._phi, groups)
        self._xi = np.add.reduceat(self._xi, groups)
        self._size = np.add.reduceat(self._size, groups)
        self.merges += count - groups.size
        logger.debug("pruned %d triples to %d (threshold %g)", count, groups.size, threshold)
        return self

    def query(self) -> SegmentationEstimate:
        """Estimate the ``n_prime`` segmentation points of everything seen so far.

        Each target takes the mass between two cut points on the synopsis'
        cumulative mass curve; the triples holding the cuts contribute only
        their share, placed at their own timestamp.
        """
        self._flush()
        if self._x.size == 0:
            raise RelcompressError("cannot query an empty synopsis")

        x = self._x
        n_prime = self.n_prime
        cumulative = compensated_cumsum(self._phi)
        total = float(cumulative[-1])

        if total <= 0:
            points = np.linspace(x[0], x[-1], n_prime)
            return SegmentationEstimate(points=points, lower_ends=points.copy(),
                                        upper_ends=points.copy(), n_prime=n_prime)

        moments = compensated_cumsum(self._xi)
        j = np.arange(1, n_prime + 1, dtype=np.float64)
        lower_cut = (j - 1) * total / n_prime
        upper_cut = j * total / n_prime
        upper_cut[-1] = total

        il = first_at_least(cumulative, lower_cut)
        iu = first_at_least(cumulative, upper_cut)

        head = x[il] * (cumulative[il] - lower_cut)
        tail = x[iu] * (cumulative[iu] - upper_cut)
        interior = moments[iu] - moments[il]
        points = np.clip((interior + head - tail) / (total / n_prime), x[0], x[-1])

        # rounding can swap neighbours; each point keeps its own bracket
        order = np.argsort(points, kind="stable")
        return SegmentationEstimate(points=points[order], lower_ends=x[il][order],
                                    upper_ends=x[iu][order], n_prime=n_prime)

    def interval_ends(self) -> Tuple[np.ndarray, np.ndarray]:
        """Synopsis timestamps bracketing each segmentation point."""
        estimate = self.query()
        return estimate.lower_ends, estimate.upper_ends

    def copy(self) -> "Synopsis":
        self._flush()
        other = Synopsis(self.n_prime, self.alpha, self.prune_factor)
        other.n, other.z, other.delta_z, other.merges = self.n, self.z, self.delta_z, self.merges
        other._prune_at, other._last = self._prune_at, self._last
        other._x = self._x.copy()
        other._phi = self._phi.copy()
        other._xi = self._xi.copy()
        other._size = self._size.copy()
        return other

    def check_invariants(self, rel_tol: float = 1e-9) -> None:
        """Raise ``RelcompressError`` if the summary is internally inconsistent."""
        self._flush()
        if not (self._x.size == self._phi.size == self._xi.size == self._size.size):
            raise RelcompressError("synopsis columns differ in length")
        if self._x.size > 1 and np.any(np.diff(self._x) <= 0):
            raise RelcompressError("synopsis timestamps are not strictly increasing")
        covered = int(self._size.sum())
        if covered != self.n:
            raise RelcompressError(f"synopsis covers {covered} samples but has seen {self.n}")
        if self.n_prime < 1:
            raise RelcompressError("n_prime dropped below 1")
        expected = self.z + self.delta_z
        actual = self.total_mass
        if not math.isclose(actual, expected, rel_tol=rel_tol, abs_tol=rel_tol):
            raise RelcompressError(
                f"synopsis holds mass {actual!r} but has seen {expected!r}"
            )

    def to_snapshot(self) -> SynopsisSnapshot:
        self._flush()
        return SynopsisSnapshot(
            n=self.n,
            n_prime=self.n_prime,
            merges=self.merges,
            alpha=self.alpha.hex(),
            z=self.z.hex(),
            delta_z=self.delta_z.hex(),
            timestamps=[v.hex() for v in self._x.tolist()],
            masses=[v.hex() for v in self._phi.tolist()],
            moments=[v.hex() for v in self._xi.tolist()],
            sizes=self._size.tolist(),
            prune_factor=self.prune_factor.hex(),
            prune_at=self._prune_at,
        )

    @classmethod
    def from_snapshot(cls, snapshot: SynopsisSnapshot) -> "Synopsis":
        synopsis = cls(snapshot.n_prime, float.fromhex(snapshot.alpha),
                       float.fromhex(snapshot.prune_factor))
        synopsis.n = snapshot.n
        synopsis.merges = snapshot.merges
        synopsis.z = float.fromhex(snapshot.z)
        synopsis.delta_z = float.fromhex(snapshot.delta_z)
        synopsis._prune_at = snapshot.prune_at
        synopsis._x = np.array([float.fromhex(v) for v in snapshot.timestamps], dtype=np.float64)
        synopsis._phi = np.array([float.fromhex(v) for v in snapshot.masses], dtype=np.float64)
        synopsis._xi = np.array([float.fromhex(v) for v in snapshot.moments], dtype=np.float64)
        synopsis._size = np.array(snapshot.sizes, dtype=np.int64)
        if synopsis._x.size:
            synopsis._last = float(synopsis._x[-1])
        synopsis.check_invariants()
        return synopsis


def stream_synopsis(timestamps, scores, init_n: int, init_n_prime: int,
                    alpha: float, on_point=None,
                    prune_factor: float = DEFAULT_PRUNE_FACTOR) -> Optional[Synopsis]:
    """Initialise on the first ``init_n`` points and observe the rest.

    ``on_point(synopsis)`` runs after every point once the synopsis exists.
    Returns ``None`` for empty input.
    """
    x = np.asarray(timestamps, dtype=np.float64)
    scores = np.asarray(scores, dtype=np.float64)
    if x.size == 0:
        return None
    head = min(init_n, x.size)
    synopsis = Synopsis.init(TimeSeries(x[:head], np.zeros(head)), scores[:head],
                             min(init_n_prime, head), alpha, prune_factor)
    if on_point is not None:
        on_point(synopsis)
    observe = synopsis.observe
    for t, phi in zip(x[head:].tolist(), scores[head:].tolist()):
        observe(t, phi)
        if on_point is not None:
            on_point(synopsis)
    return synopsis


def dump_snapshot(synopsis: Synopsis, path) -> Path:
    """Write ``synopsis`` as a JSON snapshot."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(synopsis.to_snapshot().model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def load_snapshot(path) -> Synopsis:
    try:
        snapshot = SynopsisSnapshot.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except ValidationError as e:
        raise InvalidParameterError(f"invalid synopsis snapshot {path}: {e.errors()[0]['msg']}") from None
    return Synopsis.from_snapshot(snapshot)
