"""Preprocessing: splits, clipping, train-only statistics, windowing."""

import numpy as np
import pytest

from spikecause.dataset import (
    SPIKE_CLIP,
    WindowedDataset,
    build_dataset,
    denormalize,
    normalize,
    split_indices,
    window,
)
from spikecause.errors import ConfigError, NormalizationError
from spikecause.rng import Rng


def test_split_fractions():
    assert split_indices(100) == (60, 80)
    assert split_indices(5000) == (3000, 4000)
    # floor semantics for awkward lengths
    assert split_indices(101) == (60, 80)
    with pytest.raises(ConfigError):
        split_indices(4)


def test_normalize_clips_peaks_only_from_above():
    series = np.array([[100.0, -70.0], [20.0, -60.0], [-90.0, 31.0], [0.0, -65.0]])
    normalized, mean, std = normalize(series, 4)
    clipped = np.minimum(series, SPIKE_CLIP)
    np.testing.assert_allclose(mean, clipped.mean(axis=0), atol=1e-12)
    np.testing.assert_allclose(std, clipped.std(axis=0), atol=1e-12)
    np.testing.assert_allclose(normalized, (clipped - mean) / std, atol=1e-12)
    # downward excursions are untouched
    assert clipped[2, 0] == -90.0
    assert clipped[0, 0] == SPIKE_CLIP


def test_normalize_uses_train_rows_only():
    rng = Rng(1)
    series = rng.normal(size=(50, 3))
    series[40:] += 1000.0  # test-era drift must not affect the statistics
    _, mean, std = normalize(series, 30)
    np.testing.assert_allclose(mean, series[:30].mean(axis=0), atol=1e-12)
    np.testing.assert_allclose(std, series[:30].std(axis=0), atol=1e-12)


def test_normalized_train_segment_is_standard():
    rng = Rng(2)
    series = rng.normal(size=(200, 4)) * 3.0 - 60.0
    normalized, _, _ = normalize(series, 120)
    np.testing.assert_allclose(normalized[:120].mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(normalized[:120].std(axis=0), 1.0, atol=1e-12)


def test_normalize_rejects_constant_channel():
    series = np.ones((20, 2))
    series[:, 1] = np.arange(20)
    with pytest.raises(NormalizationError):
        normalize(series, 10)


def test_denormalize_inverts():
    rng = Rng(3)
    series = rng.normal(size=(30, 2)) * 2.0 + 5.0
    normalized, mean, std = normalize(series, 20)
    np.testing.assert_allclose(denormalize(normalized, mean, std),
                               np.minimum(series, SPIKE_CLIP), atol=1e-10)


def test_window_counts_and_alignment():
    rows, n, context, horizon = 20, 2, 3, 2
    series = np.arange(rows * n, dtype=float).reshape(rows, n)
    inputs, targets = window(series, context, horizon)
    assert inputs.shape == (rows - context - horizon, context + 1, n)
    assert targets.shape == (rows - context - horizon, horizon, n)
    # sample s: inputs rows [s, s+context], targets immediately after
    for s in (0, 7, 14):
        np.testing.assert_array_equal(inputs[s], series[s:s + context + 1])
        np.testing.assert_array_equal(
            targets[s], series[s + context + 1:s + context + 3]
        )


def test_window_validation():
    series = np.zeros((10, 2))
    with pytest.raises(ConfigError):
        window(series, 0, 1)
    with pytest.raises(ConfigError):
        window(series, 9, 1)
    with pytest.raises(ConfigError):
        window(np.zeros(10), 2, 1)


def test_build_dataset_shapes_and_t0():
    rng = Rng(4)
    series = rng.normal(size=(100, 3)) * 5.0 - 60.0
    data = build_dataset(series, context=4, horizon=2)
    assert isinstance(data, WindowedDataset)
    # segments of 60 / 20 / 20 rows each lose context+horizon windows
    assert data.train_x.shape == (54, 5, 3)
    assert data.val_x.shape == (14, 5, 3)
    assert data.test_x.shape == (14, 5, 3)
    assert data.n == 3
    assert data.total_rows == 100
    np.testing.assert_array_equal(data.train_t0, np.arange(54))
    np.testing.assert_array_equal(data.val_t0, 60 + np.arange(14))
    np.testing.assert_array_equal(data.test_t0, 80 + np.arange(14))


def test_build_dataset_no_split_straddling():
    # a window of the validation split must be reproducible from the
    # normalized series rows addressed by its t0
    rng = Rng(5)
    series = rng.normal(size=(100, 2)) - 60.0
    data = build_dataset(series, context=4, horizon=1)
    normalized, _, _ = normalize(series, 60)
    s = 3
    t0 = int(data.val_t0[s])
    np.testing.assert_allclose(data.val_x[s], normalized[t0:t0 + 5], atol=1e-12)
    np.testing.assert_allclose(data.val_y[s], normalized[t0 + 5:t0 + 6], atol=1e-12)


def test_build_dataset_deterministic():
    rng = Rng(6)
    series = rng.normal(size=(80, 2)) - 60.0
    d1 = build_dataset(series, 3, 1)
    d2 = build_dataset(series, 3, 1)
    np.testing.assert_array_equal(d1.train_x, d2.train_x)
    np.testing.assert_array_equal(d1.test_y, d2.test_y)
