import pytest
from pydantic import ValidationError

from relcompress.errors import InvalidParameterError
from relcompress.models import RunConfig, RunMode, SynopsisSnapshot


def test_ratio_rounds_point_count_down():
    config = RunConfig(ratio=3.0)
    assert config.resolve_n_prime(10) == 3
    assert config.resolve_n_prime(2) == 1


def test_explicit_point_count_must_fit():
    config = RunConfig(n_points=5)
    assert config.resolve_n_prime(5) == 5
    with pytest.raises(InvalidParameterError):
        config.resolve_n_prime(4)


def test_batch_needs_exactly_one_target():
    with pytest.raises(ValidationError):
        RunConfig()
    with pytest.raises(ValidationError):
        RunConfig(n_points=3, ratio=2.0)


def test_stream_checks_initial_sizes():
    assert RunConfig(mode=RunMode.STREAM, init_n=10, init_nprime=10).init_nprime == 10
    with pytest.raises(ValidationError):
        RunConfig(mode=RunMode.STREAM, init_n=10, init_nprime=11)


def test_config_is_frozen():
    config = RunConfig(ratio=2.0)
    with pytest.raises(ValidationError):
        config.ratio = 3.0


def test_snapshot_columns_must_align():
    with pytest.raises(ValidationError):
        SynopsisSnapshot(n=2, n_prime=1, alpha="0x0p+0", z="0x0p+0", delta_z="0x0p+0",
                         timestamps=["0x1p+0", "0x1p+1"], masses=["0x0p+0"],
                         moments=["0x0p+0", "0x0p+0"], sizes=[1, 1])
