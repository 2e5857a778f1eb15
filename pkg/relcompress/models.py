"""Pydantic models for run configuration, labels, reports and snapshots."""

import math
from enum import Enum
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import InvalidParameterError
from .relevance import RelevanceSpec

SNAPSHOT_FORMAT_VERSION = 1


class RunMode(str, Enum):
    BATCH = "batch"
    STREAM = "stream"


class RunConfig(BaseModel):
    """Everything one CLI run needs; built from the parsed arguments."""

    model_config = ConfigDict(frozen=True)

    relevance: RelevanceSpec = Field(default_factory=RelevanceSpec)
    mode: RunMode = RunMode.BATCH
    n_points: Optional[int] = Field(None, ge=1, description="Target n_prime")
    ratio: Optional[float] = Field(None, gt=0, description="Target compression ratio n/n_prime")
    alpha: float = Field(0.2, ge=0, le=1)
    init_n: int = Field(1000, ge=1)
    init_nprime: int = Field(500, ge=1)
    checkpoint_every: int = Field(5000, ge=1)
    reconstruction: Optional[Literal["constant", "linear", "regression"]] = "linear"
    integerize: bool = False
    input_path: Optional[str] = None
    labels_path: Optional[str] = None
    out_dir: Path = Path(".")
    compare_batch: bool = False
    length: int = Field(500_000, ge=2, description="Length of the simulated bench stream")
    seed: int = 0

    @model_validator(mode="after")
    def _check_mode(self):
        if self.mode is RunMode.BATCH and (self.n_points is None) == (self.ratio is None):
            raise ValueError("batch runs need exactly one of n_points or ratio")
        if self.mode is RunMode.STREAM and self.init_nprime > self.init_n:
            raise ValueError(
                f"init_nprime ({self.init_nprime}) cannot exceed init_n ({self.init_n})"
            )
        return self

    def resolve_n_prime(self, n: int) -> int:
        """Target number of segmentation points for a series of length ``n``."""
        if self.n_points is not None:
            n_prime = self.n_points
        else:
            n_prime = max(1, math.floor(n / self.ratio))
        if n_prime > n:
            raise InvalidParameterError(
                f"cannot place {n_prime} segmentation points on {n} samples"
            )
        return n_prime


class IntervalKind(str, Enum):
    EVENT = "Event"
    NON_EVENT = "NonEvent"


class IntervalLabel(BaseModel):
    """Closed time interval ``[start, end]`` tagged as event or background."""

    start: float
    end: float
    kind: IntervalKind
    name: str = ""

    @field_validator("kind", mode="before")
    @classmethod
    def _normalize_kind(cls, value):
        if isinstance(value, str):
            lowered = value.strip().lower().replace("-", "").replace("_", "")
            if lowered == "event":
                return IntervalKind.EVENT
            if lowered == "nonevent":
                return IntervalKind.NON_EVENT
        return value

    @model_validator(mode="after")
    def _check_order(self):
        if not self.start < self.end:
            raise ValueError(f"interval start {self.start} must be before its end {self.end}")
        return self


class IntervalReport(BaseModel):
    label: IntervalLabel
    points_in: int
    points_stored: int
    compression_ratio: float
    compression_ratio_infinite: bool = False
    relative_error: float
    mse: float


class GlobalMetrics(BaseModel):
    n: int
    n_prime: int
    points_stored: int
    compression_ratio: float
    compression_ratio_infinite: bool = False
    relative_error: Optional[float] = None
    mse: Optional[float] = None
    uniform_fallback: bool = False


class BoundCheck(BaseModel):
    """How far a run stayed inside one theoretical error bound."""

    name: str
    bound: float = Field(..., description="Allowed value of the checked quantity")
    worst: float = Field(..., description="Largest observed value")
    mean: Optional[float] = None
    margin: float = Field(..., description="bound - worst; negative means violated")
    violations: int = 0
    checked: int = 0
    passed: bool


class EvalReport(BaseModel):
    """The ``report.json`` written by every subcommand."""

    command: str
    config: Optional[dict] = None
    global_metrics: Optional[GlobalMetrics] = None
    intervals: List[IntervalReport] = Field(default_factory=list)
    skipped_labels: List[IntervalLabel] = Field(default_factory=list)
    bounds: List[BoundCheck] = Field(default_factory=list)
    seed: Optional[int] = None


class SynopsisSnapshot(BaseModel):
    """Serialised synopsis state. Floats are stored as ``float.hex`` strings."""

    format_version: Literal[1] = SNAPSHOT_FORMAT_VERSION
    n: int = Field(..., ge=0)
    n_prime: int = Field(..., ge=1)
    merges: int = Field(0, ge=0)
    alpha: str
    z: str
    delta_z: str
    timestamps: List[str]
    masses: List[str]
    moments: List[str]
    sizes: List[int]
    prune_factor: str = Field((2.0).hex(), description="Length growth between deferred prunes")
    prune_at: int = Field(0, ge=0, description="Synopsis length that triggers the next prune")

    @model_validator(mode="after")
    def _check_columns(self):
        lengths = {len(self.timestamps), len(self.masses), len(self.moments), len(self.sizes)}
        if len(lengths) != 1:
            raise ValueError("snapshot columns differ in length")
        return self
