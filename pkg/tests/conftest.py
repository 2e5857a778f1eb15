import hypothesis
import numpy as np
import pytest

from relcompress.relevance import TimeSeries

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=5)
hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.load_profile("default")


@pytest.fixture
def worked_series():
    """Four points from the worked example: y = (0, 3, 0, 1) at x = 1..4."""
    return TimeSeries([1.0, 2.0, 3.0, 4.0], [0.0, 3.0, 0.0, 1.0])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def write_csv(tmp_path):
    """Write ``rows`` of (timestamp, value) to a CSV file and return its path."""

    def _write(rows, name="series.csv", header=None):
        path = tmp_path / name
        lines = []
        if header:
            lines.append(header)
        lines.extend(",".join(repr(float(v)) for v in row) for row in rows)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    return _write
