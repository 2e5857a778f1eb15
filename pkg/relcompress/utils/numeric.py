"""Small numeric helpers shared by the transport and synopsis code."""

import numpy as np


def compensated_cumsum(values) -> np.ndarray:
    """Prefix sums of ``values`` with each step's rounding error folded back in.

    ``np.add.accumulate`` adds strictly left to right, so the exact error of
    every partial sum is recoverable afterwards with the two-sum identity and
    the whole correction stays vectorised.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return values.copy()

    partial = np.cumsum(values)
    previous = np.concatenate(([0.0], partial[:-1]))

    # two-sum: partial == previous + values - error, error exact
    b_virtual = partial - previous
    a_virtual = partial - b_virtual
    error = (previous - a_virtual) + (values - b_virtual)

    return partial + np.cumsum(error)


def first_at_least(cumulative: np.ndarray, targets) -> np.ndarray:
    """Index of the first entry of ``cumulative`` that is >= each target.

    ``cumulative`` must be nondecreasing. Targets beyond the last entry map to
    the last index.
    """
    index = np.searchsorted(cumulative, targets, side="left")
    return np.minimum(index, cumulative.size - 1)
