import math

import numpy as np
import pytest

from relcompress.errors import InvalidParameterError, NonMonotoneTimestampError, RelcompressError
from relcompress.metrics import streaming_bound_check
from relcompress.models import SynopsisSnapshot
from relcompress.relevance import TimeSeries, normalize_weights
from relcompress.synopsis import Synopsis, dump_snapshot, load_snapshot, stream_synopsis
from relcompress.transport import batch_segmentation
from relcompress.utils.numeric import compensated_cumsum, first_at_least
from relcompress.utils.synthetic import random_scores, random_timestamps


@pytest.fixture
def worked_synopsis(worked_series):
    return Synopsis.init(worked_series, [0.0, 3.0, 3.0, 1.0], n_prime=2, alpha=0.2)


def light_middle_synopsis():
    """Masses (5, 0.1, 0.1, 5) with a merge threshold of 0.5."""
    series = TimeSeries([1.0, 2.0, 3.0, 4.0], np.zeros(4))
    return Synopsis.init(series, [5.0, 0.1, 0.1, 5.0], n_prime=1, alpha=0.5 / 10.2)


def test_init_keeps_one_triple_per_sample(worked_synopsis):
    syn = worked_synopsis
    np.testing.assert_array_equal(syn.timestamps, [1, 2, 3, 4])
    np.testing.assert_array_equal(syn.masses, [0, 3, 3, 1])
    np.testing.assert_array_equal(syn.moments, [0, 6, 9, 4])
    assert len(syn) == 4 and syn.n == 4
    assert syn.z == 7 and syn.delta_z == 0
    assert syn.epsilon == pytest.approx(0.1)


def test_init_single_point():
    syn = Synopsis.init(TimeSeries([3.0], [0.0]), [2.5], n_prime=1, alpha=0.2)
    assert len(syn) == 1 and syn.z == 2.5
    np.testing.assert_array_equal(syn.query().points, [3.0])


@pytest.mark.parametrize("alpha", [-0.1, 1.5, math.nan])
def test_init_rejects_alpha_outside_unit_interval(worked_series, alpha):
    with pytest.raises(InvalidParameterError):
        Synopsis.init(worked_series, [0, 3, 3, 1], n_prime=2, alpha=alpha)


def test_init_rejects_more_points_than_samples(worked_series):
    with pytest.raises(InvalidParameterError):
        Synopsis.init(worked_series, [0, 3, 3, 1], n_prime=5, alpha=0.2)


def test_init_rejects_mismatched_scores(worked_series):
    with pytest.raises(InvalidParameterError):
        Synopsis.init(worked_series, [0, 3, 3], n_prime=2, alpha=0.2)


def test_large_mass_grows_n_prime(worked_synopsis):
    syn = worked_synopsis.observe(5.0, 4.0)
    assert syn.n_prime == 3
    assert syn.z == 11 and syn.delta_z == 0
    assert syn.n == 5 and len(syn) == 5
    syn.check_invariants()


def test_small_mass_is_held_back(worked_synopsis):
    syn = worked_synopsis.observe(5.0, 1.0)
    assert syn.n_prime == 2
    assert syn.z == 7 and syn.delta_z == 1


def test_zero_scores_never_grow(worked_synopsis):
    syn = worked_synopsis
    for t in range(5, 105):
        syn.observe(float(t), 0.0)
    assert syn.n_prime == 2 and syn.delta_z == 0


def test_observe_rejects_non_increasing_timestamp(worked_synopsis):
    with pytest.raises(NonMonotoneTimestampError):
        worked_synopsis.observe(4.0, 1.0)


def test_observe_rejects_negative_score(worked_synopsis):
    with pytest.raises(InvalidParameterError):
        worked_synopsis.observe(5.0, -1.0)


def test_prune_merges_light_run():
    syn = light_middle_synopsis().prune()
    np.testing.assert_array_equal(syn.timestamps, [1.0, 3.0, 4.0])
    np.testing.assert_allclose(syn.masses, [5.0, 0.2, 5.0])
    np.testing.assert_allclose(syn.moments, [5.0, 0.1 * 2 + 0.1 * 3, 20.0])
    np.testing.assert_array_equal(syn.sizes, [1, 2, 1])
    assert syn.merges == 1
    syn.check_invariants()


def test_prune_keeps_heavy_triples(worked_synopsis):
    before = worked_synopsis.masses.copy()
    worked_synopsis.prune()
    np.testing.assert_array_equal(worked_synopsis.masses, before)


def test_prune_with_zero_alpha_is_noop():
    series = TimeSeries([1.0, 2.0, 3.0, 4.0], np.zeros(4))
    syn = Synopsis.init(series, [5.0, 0.0, 0.0, 5.0], n_prime=1, alpha=0.0).prune()
    assert len(syn) == 4


def test_query_matches_batch_on_worked_example(worked_synopsis, worked_series):
    estimate = worked_synopsis.query()
    assert estimate.points == pytest.approx([15 / 7, 23 / 7], rel=1e-12)
    np.testing.assert_array_equal(estimate.lower_ends, [1.0, 3.0])
    np.testing.assert_array_equal(estimate.upper_ends, [3.0, 4.0])

    batch = batch_segmentation(normalize_weights([0, 3, 3, 1]), worked_series.timestamps, 2)
    np.testing.assert_allclose(estimate.points, batch.points, rtol=1e-12)


def test_single_point_query_is_weighted_mean(rng):
    syn = stream_synopsis(random_timestamps(rng, 300), random_scores(rng, 300),
                          init_n=50, init_n_prime=1, alpha=0.5)
    syn.n_prime = 1
    expected = math.fsum(syn.moments) / math.fsum(syn.masses)
    assert syn.query().points[0] == pytest.approx(expected, rel=1e-12)


def test_query_without_mass_spreads_points_evenly():
    syn = Synopsis.init(TimeSeries([1.0, 2.0, 5.0], np.zeros(3)), [0.0, 0.0, 0.0],
                        n_prime=3, alpha=0.2)
    np.testing.assert_array_equal(syn.query().points, [1.0, 3.0, 5.0])


def test_empty_query_raises():
    with pytest.raises(RelcompressError):
        Synopsis(2, 0.2).query()


def test_zero_alpha_tracks_batch_exactly(rng):
    for _ in range(50):
        n = int(rng.integers(200, 2001))
        x = random_timestamps(rng, n)
        phi = random_scores(rng, n)
        init_n = int(rng.integers(20, 200))
        checked = []

        def compare(syn):
            if syn.n % 100:
                return
            batch = batch_segmentation(normalize_weights(phi[:syn.n]), x[:syn.n], syn.n_prime)
            np.testing.assert_allclose(syn.query().points, batch.points, rtol=1e-11, atol=1e-9)
            checked.append(syn.n)

        syn = stream_synopsis(x, phi, init_n, int(rng.integers(1, 11)), alpha=0.0,
                              on_point=compare)
        assert len(syn) == n and syn.merges == 0
        assert checked


def test_mass_and_moments_are_conserved(rng):
    x = random_timestamps(rng, 5000)
    phi = random_scores(rng, 5000)

    def check(syn):
        syn.check_invariants()
        if syn.n % 25:
            return
        seen = slice(0, syn.n)
        assert math.fsum(syn.masses) == pytest.approx(math.fsum(phi[seen]), rel=1e-9)
        assert math.fsum(syn.moments) == pytest.approx(math.fsum(phi[seen] * x[seen]), rel=1e-9)
        assert syn.timestamps[0] == x[0] and syn.timestamps[-1] == x[syn.n - 1]

    syn = stream_synopsis(x, phi, init_n=100, init_n_prime=5, alpha=0.3, on_point=check)
    assert syn.merges > 0
    assert len(syn) < 5000


def test_merged_triples_stay_light_after_growth(rng):
    x = random_timestamps(rng, 8000)
    phi = random_scores(rng, 8000)
    state = {"n_prime": None, "growths": 0}

    def check(syn):
        if state["n_prime"] is not None and syn.n_prime > state["n_prime"]:
            state["growths"] += 1
            merged = syn.masses[syn.sizes > 1]
            assert np.all(merged <= syn.epsilon * syn.total_mass * (1 + 1e-12))
        state["n_prime"] = syn.n_prime

    stream_synopsis(x, phi, init_n=200, init_n_prime=10, alpha=0.25, on_point=check)
    assert state["growths"] > 0


def test_interval_ends_carry_nearly_the_true_mass(rng):
    for _ in range(10):
        n = 4000
        x = random_timestamps(rng, n)
        phi = random_scores(rng, n)
        syn = stream_synopsis(x, phi, init_n=150, init_n_prime=8, alpha=0.2)

        true_cumulative = compensated_cumsum(phi)
        total = float(true_cumulative[-1])
        cuts = np.arange(syn.n_prime + 1) * total / syn.n_prime
        synopsis_cumulative = compensated_cumsum(syn.masses)
        k = first_at_least(true_cumulative, cuts)
        ends = first_at_least(synopsis_cumulative, cuts)
        gap = np.abs(synopsis_cumulative[ends] - true_cumulative[k])
        assert np.all(gap <= syn.epsilon * total + 1e-9 * total)


def test_streaming_error_within_bound(rng):
    for _ in range(20):
        n = 3000
        x = random_timestamps(rng, n)
        phi = random_scores(rng, n)
        checks = []

        def check(syn):
            if syn.n % 250:
                return
            batch = batch_segmentation(normalize_weights(phi[:syn.n]), x[:syn.n], syn.n_prime)
            checks.append(streaming_bound_check(syn.query().points, batch, x[:syn.n], 0.2))

        stream_synopsis(x, phi, init_n=250, init_n_prime=10, alpha=0.2, on_point=check)
        assert checks and all(c.passed for c in checks)


def test_query_points_are_sorted_and_clamped(rng):
    x = random_timestamps(rng, 2000)
    phi = random_scores(rng, 2000, zero_fraction=0.6)
    syn = stream_synopsis(x, phi, init_n=100, init_n_prime=20, alpha=0.5)
    points = syn.query().points
    assert np.all(np.diff(points) >= 0)
    assert points[0] >= x[0] and points[-1] <= x[-1]


def test_copy_is_independent(worked_synopsis):
    other = worked_synopsis.copy()
    other.observe(5.0, 4.0)
    assert worked_synopsis.n == 4 and worked_synopsis.n_prime == 2
    assert other.n == 5 and other.n_prime == 3


def test_snapshot_round_trip_is_bit_exact(rng, tmp_path):
    syn = stream_synopsis(random_timestamps(rng, 3000), random_scores(rng, 3000),
                          init_n=100, init_n_prime=5, alpha=0.2)
    path = dump_snapshot(syn, tmp_path / "nested" / "synopsis.json")
    restored = load_snapshot(path)

    assert (restored.n, restored.n_prime, restored.merges) == (syn.n, syn.n_prime, syn.merges)
    assert restored.alpha == syn.alpha
    assert restored.z == syn.z and restored.delta_z == syn.delta_z
    np.testing.assert_array_equal(restored.timestamps, syn.timestamps)
    np.testing.assert_array_equal(restored.masses, syn.masses)
    np.testing.assert_array_equal(restored.moments, syn.moments)
    np.testing.assert_array_equal(restored.sizes, syn.sizes)
    np.testing.assert_array_equal(restored.query().points, syn.query().points)
    assert restored.to_snapshot() == syn.to_snapshot()


def test_invalid_snapshot_is_rejected(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"format_version": 2, "n": 1}', encoding="utf-8")
    with pytest.raises(InvalidParameterError):
        load_snapshot(path)


def test_empty_stream_gives_no_synopsis():
    assert stream_synopsis([], [], init_n=10, init_n_prime=2, alpha=0.2) is None


def test_query_sorts_interval_ends_with_their_points():
    # the moment 8 sits on x = 1, so the second target lands beyond the third
    snapshot = SynopsisSnapshot(
        n=4, n_prime=4, alpha=(0.2).hex(), z=(4.0).hex(), delta_z=(0.0).hex(),
        timestamps=[v.hex() for v in (0.0, 1.0, 2.0, 10.0)],
        masses=[(1.0).hex()] * 4,
        moments=[v.hex() for v in (0.0, 8.0, 2.0, 10.0)],
        sizes=[1, 1, 1, 1],
    )
    estimate = Synopsis.from_snapshot(snapshot).query()
    np.testing.assert_array_equal(estimate.points, [0.0, 2.0, 8.0, 10.0])
    np.testing.assert_array_equal(estimate.lower_ends, [0.0, 1.0, 0.0, 2.0])
    np.testing.assert_array_equal(estimate.upper_ends, [0.0, 2.0, 1.0, 10.0])


def test_eager_pruning_bounds_length_at_every_growth(rng):
    x = random_timestamps(rng, 6000)
    phi = random_scores(rng, 6000)
    state = {"n_prime": None, "growths": 0}

    def check(syn):
        if state["n_prime"] is not None and syn.n_prime > state["n_prime"]:
            state["growths"] += 1
            # any two neighbouring merged runs outweigh the threshold
            assert len(syn) <= 2 * syn.n_prime / syn.alpha + 6
        state["n_prime"] = syn.n_prime

    syn = stream_synopsis(x, phi, init_n=200, init_n_prime=10, alpha=0.25,
                          on_point=check, prune_factor=1.0)
    assert state["growths"] > 0 and syn.merges > 0


def test_deferred_pruning_keeps_streaming_bound(rng):
    x = random_timestamps(rng, 4000)
    phi = random_scores(rng, 4000)
    results = {}
    for factor in (1.0, 4.0):
        syn = stream_synopsis(x, phi, init_n=200, init_n_prime=10, alpha=0.2,
                              prune_factor=factor)
        batch = batch_segmentation(normalize_weights(phi), x, syn.n_prime)
        assert streaming_bound_check(syn.query().points, batch, x, 0.2).passed
        results[factor] = syn
    assert results[1.0].n_prime == results[4.0].n_prime
    assert results[1.0].merges > 0 and results[4.0].merges > 0


@pytest.mark.parametrize("factor", [0.5, math.inf, math.nan])
def test_prune_factor_must_be_at_least_one(factor):
    with pytest.raises(InvalidParameterError):
        Synopsis(2, 0.2, prune_factor=factor)
