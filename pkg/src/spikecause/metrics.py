"""Threshold-free agreement between score matrices and a binary adjacency.

AUROC is computed by the rank formulation of the Mann-Whitney statistic
with average ranks on ties, which equals the area under the piecewise
ROC curve traced by sweeping a threshold over every distinct score.
"""

from dataclasses import dataclass

import numpy as np

from spikecause.errors import ConfigError, UndefinedMetricError


@dataclass
class RocResult:
    auroc: float
    fpr: np.ndarray          # curve x, starts at 0, ends at 1
    tpr: np.ndarray          # curve y
    thresholds: np.ndarray   # score at each curve point past the first
    positives: int
    negatives: int


def _flatten(scores, truth, include_diagonal):
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth)
    if scores.shape != truth.shape:
        raise ConfigError(f"shape mismatch: {scores.shape} vs {truth.shape}")
    if scores.ndim == 1:
        return scores.copy(), truth.astype(np.float64)
    if scores.ndim != 2 or scores.shape[0] != scores.shape[1]:
        raise ConfigError("expected a square matrix or a flat vector")
    if include_diagonal:
        # self-edges are structurally absent: both score and label are
        # forced to 0 so the diagonal contributes guaranteed negatives
        s = scores.copy()
        t = truth.astype(np.float64).copy()
        np.fill_diagonal(s, 0.0)
        np.fill_diagonal(t, 0.0)
        return s.reshape(-1), t.reshape(-1)
    off = ~np.eye(scores.shape[0], dtype=bool)
    return scores[off], truth.astype(np.float64)[off]


def _average_ranks(values):
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auroc(scores, truth, include_diagonal=True):
    """Area under the ROC curve of ``scores`` against binary ``truth``.

    Matrix inputs follow the adjacency convention; the diagonal is either
    included as forced (0, 0) entries (default) or dropped entirely.
    1-D inputs are used as-is. Raises when only one class is present.
    """
    s, t = _flatten(scores, truth, include_diagonal)
    if not np.all((t == 0) | (t == 1)):
        raise ConfigError("truth entries must be 0 or 1")
    positives = int(t.sum())
    negatives = t.size - positives
    if positives == 0 or negatives == 0:
        raise UndefinedMetricError(
            f"need both classes, got {positives} positives / {negatives} negatives"
        )

    ranks = _average_ranks(s)
    area = (ranks[t == 1].sum() - positives * (positives + 1) / 2.0) \
        / (positives * negatives)

    # ROC curve: sweep thresholds from high to low over distinct scores
    order = np.argsort(-s, kind="mergesort")
    sorted_t = t[order]
    sorted_s = s[order]
    cum_pos = np.cumsum(sorted_t)
    cum_neg = np.cumsum(1.0 - sorted_t)
    last_of_tie = np.nonzero(
        np.append(sorted_s[1:] != sorted_s[:-1], True)
    )[0]
    tpr = np.concatenate([[0.0], cum_pos[last_of_tie] / positives])
    fpr = np.concatenate([[0.0], cum_neg[last_of_tie] / negatives])
    thresholds = sorted_s[last_of_tie]
    return RocResult(
        auroc=float(area), fpr=fpr, tpr=tpr, thresholds=thresholds,
        positives=positives, negatives=negatives,
    )
