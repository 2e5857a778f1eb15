"""Reading series and labels, writing result artifacts."""

import csv
import io
import json
import logging
import math
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, List, Optional, TextIO, Tuple, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from ..errors import NonMonotoneTimestampError, SeriesFormatError
from ..models import IntervalLabel
from ..relevance import TimeSeries

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

STDIN = "-"


def format_float(value: float) -> str:
    """Shortest text that keeps 12 significant digits."""
    return f"{value:.12g}"


@contextmanager
def open_input(path: PathLike) -> Iterator[TextIO]:
    """Open ``path`` for reading; ``-`` means standard input."""
    if str(path) == STDIN:
        yield sys.stdin
        return
    try:
        handle = open(path, "r", encoding="utf-8")
    except OSError as e:
        raise SeriesFormatError(0, f"cannot open {path}: {e.strerror or e}") from e
    with handle:
        yield handle


def _data_lines(lines) -> Iterator[Tuple[int, List[str]]]:
    for line_number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield line_number, [cell.strip() for cell in line.split(",")]


def _parse_number(cell: str, line_number: int, what: str) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise SeriesFormatError(line_number, f"{what} {cell!r} is not a number") from None
    if not math.isfinite(value):
        raise SeriesFormatError(line_number, f"{what} {cell!r} is not finite")
    return value


def iter_records(lines) -> Iterator[Tuple[int, float, float]]:
    """Yield ``(line_number, timestamp, value)`` from ``timestamp,value`` lines.

    Blank lines and ``#`` comments are skipped; extra columns are ignored.
    Timestamps must increase strictly.
    """
    previous = None
    for line_number, cells in _data_lines(lines):
        if len(cells) < 2:
            raise SeriesFormatError(line_number, "expected 'timestamp,value'")
        timestamp = _parse_number(cells[0], line_number, "timestamp")
        value = _parse_number(cells[1], line_number, "value")
        if previous is not None and timestamp <= previous:
            raise NonMonotoneTimestampError(previous, timestamp, line_number)
        previous = timestamp
        yield line_number, timestamp, value


def read_series(path: PathLike) -> TimeSeries:
    """Load a whole series from a headerless CSV file (or ``-`` for stdin)."""
    with open_input(path) as handle:
        records = list(iter_records(handle))
    if not records:
        raise SeriesFormatError(0, f"{path} holds no data lines")
    timestamps = np.fromiter((r[1] for r in records), dtype=np.float64, count=len(records))
    values = np.fromiter((r[2] for r in records), dtype=np.float64, count=len(records))
    logger.info("read %d points from %s", len(records), path)
    return TimeSeries(timestamps, values)


def read_labels(path: PathLike) -> List[IntervalLabel]:
    """Labels as ``start,end,kind[,name]`` rows; kind is Event or NonEvent."""
    labels = []
    with open_input(path) as handle:
        for line_number, cells in _data_lines(handle):
            if len(cells) < 3:
                raise SeriesFormatError(line_number, "expected 'start,end,kind[,name]'")
            start = _parse_number(cells[0], line_number, "start")
            end = _parse_number(cells[1], line_number, "end")
            name = cells[3] if len(cells) > 3 else f"{cells[2]}@{cells[0]}"
            try:
                labels.append(IntervalLabel(start=start, end=end, kind=cells[2], name=name))
            except ValidationError as e:
                message = e.errors()[0]["msg"]
                raise SeriesFormatError(line_number, message) from None
    return labels


def _write_rows(path: Path, header: str, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(f"# {header}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerows(rows)
    return path


def write_segmentation_csv(path: PathLike, points, lower, upper) -> Path:
    """Rows ``j,point,lower,upper`` with 1-based ``j``."""
    rows = (
        (j, format_float(p), format_float(a), format_float(b))
        for j, (p, a, b) in enumerate(zip(points, lower, upper), start=1)
    )
    return _write_rows(Path(path), "j,point,lower,upper", rows)


def write_reconstruction_csv(path: PathLike, series: TimeSeries, sampled) -> Path:
    """Rows ``timestamp,original,reconstructed``; readable again as a series."""
    rows = (
        (format_float(x), format_float(y), format_float(s))
        for x, y, s in zip(series.timestamps, series.values, sampled)
    )
    return _write_rows(Path(path), "timestamp,original,reconstructed", rows)


def write_table(path: PathLike, columns: List[str], rows) -> Path:
    """Plain CSV with a header line; floats use 12 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_float(v) if isinstance(v, float) else v for v in row])
    return path


def write_json(path: PathLike, model: BaseModel) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


class JsonLinesWriter:
    """Appends one JSON object per line, flushing after each."""

    def __init__(self, path: PathLike):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle: Optional[io.TextIOBase] = open(self.path, "w", encoding="utf-8")
        self.count = 0

    def write(self, record: dict) -> None:
        self._handle.write(json.dumps(record, separators=(",", ":")) + "\n")
        self._handle.flush()
        self.count += 1

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def __enter__(self) -> "JsonLinesWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
