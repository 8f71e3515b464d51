# src/processing/prepare_series.py
"""
Prepares a raw series for one-step-ahead prediction:
- standardize (zero mean, unit std, then divide by max-abs -> values in [-1, 1])
- time-embed into (window of d past values -> next value) pairs
- split into a training window and a later, disjoint test window
- optional additive white Gaussian noise at a given SNR
"""

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.errors import InvalidArgumentError


@dataclass(frozen=True)
class ScalingRecord:
    mean: float
    std: float
    max_abs: float

    def apply(self, series):
        return (np.asarray(series, dtype=float) - self.mean) / self.std / self.max_abs

    def invert(self, scaled):
        return np.asarray(scaled, dtype=float) * self.max_abs * self.std + self.mean


@dataclass(frozen=True)
class EmbeddedDataset:
    inputs: np.ndarray  # (count, d)
    targets: np.ndarray  # (count,)
    target_index: np.ndarray  # position of each target in the source series
    scaling: ScalingRecord = None

    def __len__(self):
        return self.targets.shape[0]


def standardize(series):
    series = np.asarray(series, dtype=float)
    if series.size < 2:
        raise InvalidArgumentError(f"need at least 2 samples to standardize, got {series.size}")
    mean = float(series.mean())
    std = float(series.std())
    if std == 0:
        raise InvalidArgumentError("cannot standardize a constant series")
    max_abs = float(np.max(np.abs((series - mean) / std)))
    record = ScalingRecord(mean, std, max_abs)
    return record.apply(series), record


def embed(series, d, start, count, scaling=None):
    """input i = s[start+i : start+i+d], target i = s[start+i+d]."""
    series = np.asarray(series, dtype=float)
    if d < 1 or count < 1 or start < 0:
        raise InvalidArgumentError(f"need d >= 1, count >= 1, start >= 0; got {d}, {count}, {start}")
    if start + count + d > series.size:
        raise InvalidArgumentError(
            f"window start={start} count={count} d={d} needs {start + count + d} samples, "
            f"series has {series.size}"
        )
    windows = sliding_window_view(series[start : start + count + d - 1], d)
    targets = series[start + d : start + d + count]
    index = np.arange(start + d, start + d + count)
    return EmbeddedDataset(windows.copy(), targets.copy(), index, scaling)


def train_test_split(series, d, start, n_train, n_test, scaling=None):
    """Training pairs from `start`, test pairs immediately after them.

    Test targets always lie strictly after the last training target.
    """
    train = embed(series, d, start, n_train, scaling)
    test = embed(series, d, start + n_train, n_test, scaling)
    assert train.target_index[-1] < test.target_index[0]
    return train, test


def random_start(rng, series_length, d, n_train, n_test):
    """Uniform over every offset that leaves room for both splits."""
    last = series_length - (n_train + n_test + d)
    if last < 0:
        raise InvalidArgumentError(
            f"series of length {series_length} is too short for {n_train}+{n_test} pairs at d={d}"
        )
    return int(rng.integers(0, last + 1))


def add_awgn(series, snr_db, seed):
    """Add white Gaussian noise with power mean(s^2) * 10^(-snr_db / 10).

    snr_db = inf (or None) means clean and returns an unchanged copy.
    """
    series = np.asarray(series, dtype=float)
    if snr_db is None or snr_db == math.inf:
        return series.copy()
    if not math.isfinite(snr_db):
        raise InvalidArgumentError(f"snr_db must be finite or +inf, got {snr_db}")
    power = float(np.mean(series**2))
    noise_std = math.sqrt(power * 10.0 ** (-snr_db / 10.0))
    rng = np.random.default_rng(seed)
    return series + noise_std * rng.standard_normal(series.shape)
