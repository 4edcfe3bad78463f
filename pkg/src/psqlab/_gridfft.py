"""Shared FFT plumbing for evaluating exponential sums on frequency grids."""

from __future__ import annotations

import numpy as np

from .errors import TooLarge

MAX_GRID = 1 << 25


def fold_sequence(values: np.ndarray, N: int, K: int, one_indexed: bool) -> np.ndarray:
    """Place a sequence on [1, N] (or [0, N-1]) into a length K*N buffer.

    Index arithmetic is mod K*N, which is exact at grid frequencies.
    """
    L = K * N
    if L > MAX_GRID:
        raise TooLarge(f"grid size {L} exceeds bound {MAX_GRID}")
    x = np.zeros(L)
    if one_indexed:
        if L > N:
            x[1 : N + 1] = values[1 : N + 1]
        else:  # K == 1: index N aliases to 0
            x[1:N] = values[1:N]
            x[0] = values[N]
    else:
        x[:N] = values[:N]
    return x


def grid_transform(values: np.ndarray, N: int, K: int, one_indexed: bool) -> np.ndarray:
    """Exponential sum sum_n v(n) e(n k / (K N)) for k = 0 .. K*N - 1."""
    x = fold_sequence(values, N, K, one_indexed)
    return np.conj(np.fft.fft(x))
