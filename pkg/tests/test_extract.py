"""Attention-to-adjacency aggregation arithmetic."""

import numpy as np
import pytest

from spikecause.errors import DimensionError, NormalizationError
from spikecause.extract import (
    CausalEstimate,
    aggregate_heads,
    aggregate_history,
    average_and_renormalize,
    average_models,
    sample_matrices,
)


class TestAggregateHistory:
    def test_two_neuron_worked_example(self):
        # n=2, h=1, c+1=2: row sums over each neuron's two history columns
        a = np.array([[0.1, 0.2, 0.3, 0.4],
                      [0.25, 0.25, 0.25, 0.25]])
        got = aggregate_history(a, n=2)
        assert np.allclose(got, [[0.3, 0.7], [0.5, 0.5]])

    def test_multi_step_horizon_sums_target_rows(self):
        # n=2, h=2: rows 0,1 belong to neuron 0, rows 2,3 to neuron 1
        a = np.zeros((4, 4))
        a[0, 0] = 1.0           # neuron 0, step 1 -> neuron 0 block
        a[1, 2] = 1.0           # neuron 0, step 2 -> neuron 1 block
        a[2, 3] = 1.0
        a[3, 1] = 1.0
        got = aggregate_history(a, n=2)
        assert np.allclose(got, [[1.0, 1.0], [1.0, 1.0]])

    def test_mass_is_conserved(self):
        rng = np.random.default_rng(3)
        for trial in range(20):
            n = int(rng.integers(2, 6))
            h = int(rng.integers(1, 4))
            block = int(rng.integers(1, 12))
            raw = rng.uniform(size=(n * h, n * block))
            raw /= raw.sum(axis=1, keepdims=True)
            got = aggregate_history(raw, n)
            assert got.shape == (n, n)
            # softmax rows each carry unit mass, so the pooled matrix
            # carries one unit per target row
            assert got.sum() == pytest.approx(n * h)
            assert np.allclose(got.sum(axis=1), h)

    def test_shape_must_factor(self):
        with pytest.raises(DimensionError):
            aggregate_history(np.zeros((3, 4)), n=2)
        with pytest.raises(DimensionError):
            aggregate_history(np.zeros((2, 5)), n=2)


class TestAggregateHeads:
    def test_sums_elementwise(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        b = np.array([[10.0, 20.0], [30.0, 40.0]])
        assert np.allclose(aggregate_heads([a, b]), a + b)

    def test_empty_or_ragged_rejected(self):
        with pytest.raises(DimensionError):
            aggregate_heads([])
        with pytest.raises(DimensionError):
            aggregate_heads([np.zeros((2, 2)), np.zeros((3, 3))])


class TestAverageAndRenormalize:
    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(5)
        mats = [rng.uniform(0.1, 1.0, size=(4, 4)) for _ in range(7)]
        got = average_and_renormalize(mats)
        assert np.allclose(got.sum(axis=1), 1.0)
        mean = np.mean(mats, axis=0)
        assert np.allclose(got, mean / mean.sum(axis=1, keepdims=True))

    def test_zero_mass_row_rejected(self):
        m = np.ones((3, 3))
        m[1] = 0.0
        with pytest.raises(NormalizationError):
            average_and_renormalize([m])


class TestAverageModels:
    def test_mean_with_zeroed_diagonal(self):
        a = np.full((3, 3), 2.0)
        b = np.full((3, 3), 4.0)
        got = average_models([a, b])
        want = np.full((3, 3), 3.0)
        np.fill_diagonal(want, 0.0)
        assert np.array_equal(got, want)

    def test_single_model_passthrough(self):
        a = np.arange(9.0).reshape(3, 3)
        got = average_models([a])
        want = a.copy()
        np.fill_diagonal(want, 0.0)
        assert np.array_equal(got, want)
        # input must not be mutated
        assert a[1, 1] == 4.0

    def test_ragged_rejected(self):
        with pytest.raises(DimensionError):
            average_models([np.zeros((2, 2)), np.zeros((3, 3))])


class TestSampleMatrices:
    def test_matches_per_head_composition(self):
        rng = np.random.default_rng(11)
        b, heads, n, h, block = 3, 4, 3, 2, 5
        raw = rng.uniform(size=(b, heads, n * h, n * block))
        raw /= raw.sum(axis=-1, keepdims=True)
        got = sample_matrices(raw, n)
        assert got.shape == (b, n, n)
        for s in range(b):
            per_head = [aggregate_history(raw[s, k], n) for k in range(heads)]
            assert np.allclose(got[s], aggregate_heads(per_head), atol=1e-12)

    def test_bad_rank_rejected(self):
        with pytest.raises(DimensionError):
            sample_matrices(np.zeros((2, 3, 4)), n=2)


class TestCausalEstimate:
    def test_dict_roundtrip(self):
        scores = np.arange(16.0).reshape(4, 4)
        est = CausalEstimate(scores=scores, provenance="attention")
        back = CausalEstimate.from_dict(est.to_dict())
        assert np.array_equal(back.scores, scores)
        assert back.provenance == "attention"
        assert back.diagonal_zeroed

    def test_n_property(self):
        est = CausalEstimate(scores=np.zeros((5, 5)), provenance="var_f")
        assert est.n == 5


class TestPermutationConsistency:
    def test_aggregation_commutes_with_relabeling(self):
        # relabeling neurons before aggregating equals aggregating then
        # permuting rows and columns
        rng = np.random.default_rng(13)
        n, h, block = 4, 1, 6
        raw = rng.uniform(size=(1, 2, n * h, n * block))
        raw /= raw.sum(axis=-1, keepdims=True)
        perm = np.array([2, 0, 3, 1])

        base = sample_matrices(raw, n)[0]
        qs = raw.reshape(1, 2, n, h, n, block)
        shuffled = qs[:, :, perm][:, :, :, :, perm].reshape(
            1, 2, n * h, n * block)
        got = sample_matrices(shuffled, n)[0]
        assert np.allclose(got, base[perm][:, perm], atol=1e-12)
