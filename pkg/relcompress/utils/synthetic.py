"""Deterministic synthetic series for benchmarks and tests."""

from typing import List, Tuple

import numpy as np

from ..models import IntervalKind, IntervalLabel
from ..relevance import TimeSeries

BENCH_LENGTH = 500_000
BENCH_CYCLES = 200


def sine_cubed_series(length: int = BENCH_LENGTH, cycles: int = BENCH_CYCLES,
                      horizon: int = BENCH_LENGTH) -> TimeSeries:
    """``y_i = sin(i * pi * cycles / horizon) ** 3`` at ``x_i = i`` for i = 1..length.

    The frequency depends on ``horizon`` only, so a shorter run is a prefix
    of the full one.
    """
    i = np.arange(1, length + 1, dtype=np.float64)
    return TimeSeries(i, np.sin(i * np.pi * cycles / horizon) ** 3)


def labeled_event_series(
    n_events: int = 5,
    sample_rate: float = 80.0,
    event_seconds: float = 2.0,
    gap_seconds: float = 20.0,
    event_period_samples: int = 50,
    amplitude: float = 1.0,
    noise: float = 0.05,
    wander: float = 0.3,
    spike_amplitude: float = 3.0,
    spike_spacing: float = 0.5,
    seed: int = 0,
) -> Tuple[TimeSeries, List[IntervalLabel]]:
    """Gaussian noise on a slow background wander, with sinusoid bursts and background spikes.

    Bursts of ``event_seconds`` are separated by ``gap_seconds`` of background
    (one gap before the first burst and after the last). The wander has the
    burst spacing as its period and crosses zero at every burst centre and
    every gap centre. Single-sample spikes of random sign, about
    ``spike_spacing`` seconds apart, sit in every gap at least ``event_seconds``
    away from any burst; they mimic sensor glitches that a burst-shaped query
    should not favour. Labels mark each burst as an Event and a window of the
    same length centred in each gap as a NonEvent.
    """
    rng = np.random.default_rng(seed)
    spacing = gap_seconds + event_seconds
    total_seconds = n_events * spacing + gap_seconds
    n = int(round(total_seconds * sample_rate))
    t = np.arange(n, dtype=np.float64) / sample_rate

    starts = gap_seconds + spacing * np.arange(n_events)
    centres = starts + event_seconds / 2
    y = wander * np.sin(2 * np.pi * (t - centres[0]) / spacing)
    y += rng.normal(0.0, noise, size=n)

    burst_frequency = sample_rate / event_period_samples
    labels = []
    for k, start in enumerate(starts):
        inside = (t >= start) & (t <= start + event_seconds)
        y[inside] += amplitude * np.sin(2 * np.pi * burst_frequency * (t[inside] - start))
        labels.append(IntervalLabel(start=float(start), end=float(start + event_seconds),
                                    kind=IntervalKind.EVENT, name=f"event-{k + 1}"))

    if spike_amplitude > 0:
        times = np.arange(0.0, total_seconds, spike_spacing)
        times += rng.uniform(-0.2, 0.2, size=times.size) * spike_spacing
        to_burst = np.maximum(starts[None, :] - times[:, None],
                              times[:, None] - (starts[None, :] + event_seconds))
        times = times[np.all(to_burst >= event_seconds, axis=1)]
        index = np.clip(np.rint(times * sample_rate).astype(int), 0, n - 1)
        y[index] += spike_amplitude * rng.choice([-1.0, 1.0], size=index.size)

    gap_centres = np.concatenate(([gap_seconds / 2], starts + event_seconds + gap_seconds / 2))
    half = event_seconds / 2
    for k, centre in enumerate(gap_centres):
        labels.append(IntervalLabel(start=float(centre - half), end=float(centre + half),
                                    kind=IntervalKind.NON_EVENT, name=f"background-{k + 1}"))

    labels.sort(key=lambda label: label.start)
    return TimeSeries(t, y), labels


def random_scores(rng: np.random.Generator, n: int, zero_fraction: float = 0.1) -> np.ndarray:
    """Positive exponential scores with a share of exact zeros."""
    scores = rng.exponential(1.0, size=n)
    scores[rng.random(n) < zero_fraction] = 0.0
    return scores


def random_timestamps(rng: np.random.Generator, n: int, start: float = 1.0) -> np.ndarray:
    """Strictly increasing positive timestamps with random spacing."""
    return start + np.cumsum(rng.uniform(0.1, 2.0, size=n)) - 0.1
