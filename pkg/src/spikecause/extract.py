"""Reducing recorded cross-attention into an n x n causal score matrix.

Aggregation order: per head, sum each target neuron's rows over each
source neuron's (c+1)-wide history block; sum the resulting matrices
over heads; average over test samples and renormalize rows to 1; average
over independently seeded models; finally zero the diagonal. Entry (j, i)
of the result scores the edge "neuron i drives neuron j".
"""

from dataclasses import dataclass, field

import numpy as np

from spikecause import tensor
from spikecause.errors import DimensionError, NormalizationError


@dataclass
class CausalEstimate:
    scores: np.ndarray
    provenance: str                 # "attention" or "var_f"
    diagonal_zeroed: bool = True
    failures: list = field(default_factory=list)

    @property
    def n(self):
        return self.scores.shape[0]

    def to_dict(self):
        return {
            "n": int(self.n),
            "scores": [float(x) for x in self.scores.reshape(-1)],
            "provenance": self.provenance,
            "diagonal_zeroed": bool(self.diagonal_zeroed),
        }

    @classmethod
    def from_dict(cls, payload):
        n = int(payload["n"])
        scores = np.array(payload["scores"], dtype=np.float64).reshape(n, n)
        return cls(
            scores=scores,
            provenance=payload["provenance"],
            diagonal_zeroed=bool(payload["diagonal_zeroed"]),
        )


def aggregate_history(a_head, n):
    """Collapse one head's (n*h, n*(c+1)) attention onto neuron pairs.

    Output[j, i] sums the attention mass neuron j's target rows place on
    any history step of neuron i; total mass equals the row count n*h.
    """
    a_head = np.asarray(a_head, dtype=np.float64)
    if a_head.ndim != 2 or a_head.shape[0] % n or a_head.shape[1] % n:
        raise DimensionError(
            f"attention shape {a_head.shape} does not factor over n={n}"
        )
    h = a_head.shape[0] // n
    block = a_head.shape[1] // n
    return a_head.reshape(n, h, n, block).sum(axis=(1, 3))


def aggregate_heads(per_head):
    """Element-wise sum of per-head aggregated matrices."""
    mats = [np.asarray(m, dtype=np.float64) for m in per_head]
    if not mats:
        raise DimensionError("need at least one head matrix")
    shape = mats[0].shape
    for m in mats[1:]:
        if m.shape != shape:
            raise DimensionError("head matrices disagree in shape")
    return np.sum(mats, axis=0)


def average_and_renormalize(per_sample):
    """Mean over test samples, then scale each row to sum to 1."""
    mats = [np.asarray(m, dtype=np.float64) for m in per_sample]
    if not mats:
        raise DimensionError("need at least one sample matrix")
    mean = np.mean(mats, axis=0)
    sums = mean.sum(axis=1, keepdims=True)
    if np.any(sums <= 0):
        bad = int(np.argmax(sums <= 0))
        raise NormalizationError(f"row {bad} has no attention mass")
    return mean / sums


def average_models(per_model):
    """Mean over seeds, diagonal replaced with zeros."""
    mats = [np.asarray(m, dtype=np.float64) for m in per_model]
    if not mats:
        raise DimensionError("need at least one model matrix")
    shape = mats[0].shape
    for m in mats[1:]:
        if m.shape != shape:
            raise DimensionError("model matrices disagree in shape")
    out = np.mean(mats, axis=0)
    np.fill_diagonal(out, 0.0)
    return out


def sample_matrices(recorded, n):
    """Head-summed neuron-pair matrices for a recorded batch.

    ``recorded`` is (B, heads, n*h, n*(c+1)); returns (B, n, n), one
    matrix per sample, equal to aggregate_heads over aggregate_history
    of each head (vectorized).
    """
    recorded = np.asarray(recorded, dtype=np.float64)
    if recorded.ndim != 4 or recorded.shape[2] % n or recorded.shape[3] % n:
        raise DimensionError(
            f"recorded shape {recorded.shape} does not factor over n={n}"
        )
    b, heads = recorded.shape[:2]
    h = recorded.shape[2] // n
    block = recorded.shape[3] // n
    per_head = recorded.reshape(b, heads, n, h, n, block).sum(axis=(3, 5))
    return per_head.sum(axis=1)


def extract_for_model(model, data, batch_size=64):
    """Sample-averaged, row-normalized attention matrix of one trained model.

    Runs the model over every test window with recording on and reduces
    the global cross-attention as described in the module docstring (all
    stages before the across-seed average).
    """
    n = model.config.n
    mats = []
    with tensor.no_grad():
        for lo in range(0, data.test_x.shape[0], batch_size):
            _, record, _ = model.forward(
                data.test_x[lo:lo + batch_size], training=False, record=True,
            )
            mats.append(sample_matrices(record.global_cross, n))
    return average_and_renormalize(list(np.concatenate(mats, axis=0)))
