"""Turning a simulated voltage trace into supervised forecasting samples.

Pipeline: contiguous 60/20/20 split along time, spike-peak clipping at
30 mV, per-neuron z-scoring with statistics taken from the training
segment only, then sliding-window extraction inside each segment so no
sample straddles a split boundary.
"""

from dataclasses import dataclass

import numpy as np

from spikecause.errors import ConfigError, NormalizationError

SPIKE_CLIP = 30.0
TRAIN_FRACTION = 0.6
VAL_FRACTION = 0.2


def split_indices(rows):
    """Boundaries of the contiguous train/val/test segments.

    Returns (train_end, val_end): train is [0, train_end), validation
    [train_end, val_end), test [val_end, rows).
    """
    if rows < 5:
        raise ConfigError(f"series too short to split, got {rows} rows")
    train_end = int(rows * TRAIN_FRACTION)
    val_end = int(rows * (TRAIN_FRACTION + VAL_FRACTION))
    return train_end, val_end


def normalize(series, train_end):
    """Clip spike peaks and z-score each neuron using train-segment stats.

    Mean and population standard deviation come from rows [0, train_end)
    of the clipped series and are applied to every row, so validation and
    test data never leak into the statistics.
    """
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 2:
        raise ConfigError("series must be (rows, neurons)")
    if not 0 < train_end <= series.shape[0]:
        raise ConfigError(f"train_end {train_end} outside series of {series.shape[0]} rows")
    clipped = np.minimum(series, SPIKE_CLIP)
    mean = clipped[:train_end].mean(axis=0)
    std = clipped[:train_end].std(axis=0)
    if np.any(std <= 0.0):
        flat = int(np.argmax(std <= 0.0))
        raise NormalizationError(
            f"neuron {flat} is constant over the training segment"
        )
    return (clipped - mean) / std, mean, std


def denormalize(values, mean, std):
    return np.asarray(values) * std + mean


def window(series, context, horizon):
    """Slide a (context+1, horizon) window pair over the rows of ``series``.

    Sample s covers input rows [s, s + context] inclusive and target rows
    [s + context + 1, s + context + horizon]. Returns
    (inputs (S, context+1, n), targets (S, horizon, n)).
    """
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 2:
        raise ConfigError("series must be (rows, neurons)")
    if context < 1 or horizon < 1:
        raise ConfigError("context and horizon must be >= 1")
    rows = series.shape[0]
    count = rows - context - horizon
    if count < 1:
        raise ConfigError(
            f"{rows} rows cannot fit context {context} + horizon {horizon}"
        )
    inputs = np.stack([series[s:s + context + 1] for s in range(count)])
    targets = np.stack(
        [series[s + context + 1:s + context + 1 + horizon] for s in range(count)]
    )
    return inputs, targets


@dataclass
class WindowedDataset:
    train_x: np.ndarray
    train_y: np.ndarray
    val_x: np.ndarray
    val_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray
    # global row index of each window's first input row, per split;
    # provenance only, the model sees window-relative positions
    train_t0: np.ndarray
    val_t0: np.ndarray
    test_t0: np.ndarray
    total_rows: int
    mean: np.ndarray
    std: np.ndarray
    context: int
    horizon: int

    @property
    def n(self):
        return self.train_x.shape[2]


def build_dataset(series, context, horizon):
    """Full preprocessing from a raw (rows, neurons) voltage series."""
    series = np.asarray(series, dtype=np.float64)
    train_end, val_end = split_indices(series.shape[0])
    normalized, mean, std = normalize(series, train_end)
    train_x, train_y = window(normalized[:train_end], context, horizon)
    val_x, val_y = window(normalized[train_end:val_end], context, horizon)
    test_x, test_y = window(normalized[val_end:], context, horizon)
    return WindowedDataset(
        train_x=train_x, train_y=train_y,
        val_x=val_x, val_y=val_y,
        test_x=test_x, test_y=test_y,
        train_t0=np.arange(train_x.shape[0]),
        val_t0=train_end + np.arange(val_x.shape[0]),
        test_t0=val_end + np.arange(test_x.shape[0]),
        total_rows=int(series.shape[0]),
        mean=mean, std=std, context=context, horizon=horizon,
    )
