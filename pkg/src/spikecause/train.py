"""Training loop: AdamW on mini-batch MSE with plateau decay and early stop.

The learning rate halves after lr_patience epochs without a validation
improvement (the no-improvement counter restarts after each decay), and
training stops after early_stop_patience such epochs or at max_epochs.
The parameters reported back are the ones from the best-validation epoch.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from spikecause import params as params_mod
from spikecause import tensor
from spikecause.errors import ConfigError, DegenerateSeriesError, DivergenceError
from spikecause.rng import Rng, derive_seed
from spikecause.tensor import mse

# Inference batches larger than this lose cache locality and run slower.
EVAL_BATCH = 64


@dataclass
class TrainConfig:
    seed: int = 0
    batch_size: int = 16
    lr: float = 5e-4
    lr_decay: float = 0.5
    lr_patience: int = 3
    weight_decay: float = 1e-3
    max_epochs: int = 200
    early_stop_patience: int = 10
    dropout: float = 0.1

    def __post_init__(self):
        if min(self.batch_size, self.max_epochs,
               self.early_stop_patience, self.lr_patience) < 1:
            raise ConfigError("counts and patiences must be >= 1")
        if self.lr <= 0 or not 0 < self.lr_decay <= 1 or self.weight_decay < 0:
            raise ConfigError("invalid optimizer settings")
        if not 0 <= self.dropout < 1:
            raise ConfigError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.early_stop_patience >= self.max_epochs:
            raise ConfigError("early_stop_patience must be < max_epochs")

    def to_dict(self):
        return {
            "seed": self.seed, "batch_size": self.batch_size, "lr": self.lr,
            "lr_decay": self.lr_decay, "lr_patience": self.lr_patience,
            "weight_decay": self.weight_decay, "max_epochs": self.max_epochs,
            "early_stop_patience": self.early_stop_patience,
            "dropout": self.dropout,
        }


@dataclass
class TrainReport:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    lr_per_epoch: list = field(default_factory=list)
    stopped_epoch: int = 0
    best_epoch: int = 0
    best_val_loss: float = np.inf
    wall_seconds: float = 0.0

    def to_dict(self):
        # wall clock is deliberately left out: reports from identical
        # seeds must serialize to identical bytes
        return {
            "train_loss": [float(x) for x in self.train_loss],
            "val_loss": [float(x) for x in self.val_loss],
            "lr_per_epoch": [float(x) for x in self.lr_per_epoch],
            "stopped_epoch": self.stopped_epoch,
            "best_epoch": self.best_epoch,
            "best_val_loss": float(self.best_val_loss),
        }


def _predict_batched(model, xs):
    """Eval-mode forecasts over an array of samples, in fixed-size chunks."""
    out = []
    with tensor.no_grad():
        for lo in range(0, xs.shape[0], EVAL_BATCH):
            pred, _, _ = model.forward(xs[lo:lo + EVAL_BATCH], training=False)
            out.append(pred.data)
    return np.concatenate(out, axis=0)


def validation_loss(model, data):
    preds = _predict_batched(model, data.val_x)
    return float(np.mean((preds - data.val_y) ** 2))


def train(model, data, cfg):
    """Fit the model on a windowed dataset; returns (best_params, report).

    ``best_params`` is the flat parameter vector of the best-validation
    epoch; the model is left loaded with it. Batches are reshuffled each
    epoch from a seed-derived stream, so a (seed, dataset) pair fixes the
    whole trajectory.
    """
    n_train = data.train_x.shape[0]
    if n_train < 1 or data.val_x.shape[0] < 1:
        raise ConfigError("training needs nonempty train and val splits")

    shuffle_rng = Rng(derive_seed(cfg.seed, "batch-order"))
    dropout_rng = Rng(derive_seed(cfg.seed, "dropout"))
    model.config.dropout = cfg.dropout

    started = time.perf_counter()
    report = TrainReport()
    lr = cfg.lr
    best_flat = model.store.to_flat()
    stall = 0
    lr_stall = 0

    for epoch in range(1, cfg.max_epochs + 1):
        order = shuffle_rng.permutation(n_train)
        sse_weighted = 0.0
        for batch_index, lo in enumerate(range(0, n_train, cfg.batch_size)):
            pick = order[lo:lo + cfg.batch_size]
            pred, _, _ = model.forward(
                data.train_x[pick], training=True, rng=dropout_rng,
            )
            loss = mse(pred, data.train_y[pick])
            value = loss.item()
            if not np.isfinite(value):
                raise DivergenceError(
                    f"loss became non-finite at epoch {epoch}, "
                    f"batch {batch_index}", step=epoch,
                )
            params_mod.backward(loss, model.store)
            model.store.adamw_step(lr, weight_decay=cfg.weight_decay)
            sse_weighted += value * len(pick)

        train_loss = sse_weighted / n_train
        val = validation_loss(model, data)
        report.train_loss.append(train_loss)
        report.val_loss.append(val)
        report.lr_per_epoch.append(lr)
        report.stopped_epoch = epoch

        if val < report.best_val_loss:
            report.best_val_loss = val
            report.best_epoch = epoch
            best_flat = model.store.to_flat()
            stall = 0
            lr_stall = 0
        else:
            stall += 1
            lr_stall += 1
            if lr_stall >= cfg.lr_patience:
                lr *= cfg.lr_decay
                lr_stall = 0
            if stall >= cfg.early_stop_patience:
                break

    model.store.load_flat(best_flat)
    report.wall_seconds = time.perf_counter() - started
    return best_flat, report


def evaluate_r2(model, data):
    """Per-neuron and mean R^2 of concatenated one-step test forecasts.

    Computed on the normalized scale: R2_i = 1 - SSE_i / SST_i with SST
    taken about the test-segment mean of neuron i.
    """
    if data.test_x.shape[0] < 1:
        raise ConfigError("test split is empty")
    preds = _predict_batched(model, data.test_x)
    truth = data.test_y
    flat_p = preds.reshape(-1, preds.shape[2])
    flat_t = truth.reshape(-1, truth.shape[2])
    sse = ((flat_p - flat_t) ** 2).sum(axis=0)
    sst = ((flat_t - flat_t.mean(axis=0)) ** 2).sum(axis=0)
    if np.any(sst <= 0):
        bad = int(np.argmax(sst <= 0))
        raise DegenerateSeriesError(f"neuron {bad} has zero test variance")
    r2 = 1.0 - sse / sst
    return r2, float(r2.mean())
