"""Losses, mini-batch SGD training loop, and dataset splitting."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .errors import ConfigError, ContractError, ShapeError, TrainingError
from .tensor import RandomSource, as_tensor, seeded_shuffle, softmax_rows


@dataclass
class Hyperparams:
    learning_rate: float = 0.05
    batch_size: int = 32
    epochs: int = 150
    loss: str = "cross_entropy"  # or "mse"
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigError(f"batch size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigError(f"epoch count must be >= 0, got {self.epochs}")


@dataclass
class Dataset:
    """Paired inputs/targets. inputs: N x F (or N x T x F for sequences);
    targets: N x C one-hot for classification, length-N vector for regression."""

    inputs: np.ndarray
    targets: np.ndarray
    label_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.inputs = as_tensor(self.inputs)
        self.targets = as_tensor(self.targets)
        if len(self.inputs) != len(self.targets):
            raise ShapeError(
                f"inputs ({len(self.inputs)}) and targets ({len(self.targets)}) disagree"
            )

    def __len__(self) -> int:
        return len(self.inputs)

    def subset(self, idx) -> "Dataset":
        return Dataset(self.inputs[idx], self.targets[idx], self.label_names)


@dataclass
class TrainHistory:
    epoch_loss: list[float] = field(default_factory=list)
    final_metrics: dict = field(default_factory=dict)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "loss"])
            for i, loss in enumerate(self.epoch_loss):
                writer.writerow([i, repr(loss)])


def _check_one_hot(y: np.ndarray) -> None:
    ok = (
        y.ndim == 2
        and np.all((y == 0.0) | (y == 1.0))
        and np.all(y.sum(axis=1) == 1.0)
    )
    if not ok:
        raise ContractError("targets are not one-hot rows")


def cross_entropy(logits: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean batch cross-entropy; returns (loss, dlogits = (softmax - y)/m)."""
    logits = np.atleast_2d(as_tensor(logits))
    y = np.atleast_2d(as_tensor(y))
    if logits.shape != y.shape:
        raise ShapeError(f"logits {logits.shape} vs targets {y.shape}")
    _check_one_hot(y)
    m = logits.shape[0]
    p = softmax_rows(logits)
    # log-sum-exp form avoids log(0) for extreme logits
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_p = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = float(-(y * log_p).sum() / m)
    return loss, (p - y) / m


def mse(pred: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error; returns (loss, dpred = 2(pred - y)/m)."""
    pred = np.atleast_1d(as_tensor(pred))
    y = np.atleast_1d(as_tensor(y))
    if pred.shape != y.shape:
        raise ShapeError(f"pred {pred.shape} vs targets {y.shape}")
    m = pred.size
    diff = pred - y
    return float((diff**2).sum() / m), 2.0 * diff / m


def loss_function(tag: str):
    if tag == "cross_entropy":
        return cross_entropy
    if tag == "mse":
        return mse
    raise ConfigError(f"unknown loss tag {tag!r}")


def sgd_step(model, grads: nn.Gradients, lr: float):
    """In-place parameter update p <- p - lr * g. Returns the model."""
    params = model.param_arrays()
    if len(params) != len(grads.params):
        raise ContractError("gradient layout does not match model parameters")
    for p, g in zip(params, grads.params):
        if p.shape != np.shape(g):
            raise ContractError(f"gradient shape {np.shape(g)} vs parameter {p.shape}")
        p -= lr * g
    return model


def fit(model, train_set: Dataset, hyper: Hyperparams) -> tuple[object, TrainHistory]:
    """Mini-batch SGD: shuffle each epoch, forward (train mode), backward, step.

    Deterministic given hyper.seed. Raises TrainingError on non-finite loss.
    """
    if len(train_set) == 0:
        raise ConfigError("cannot fit on an empty dataset")
    loss_fn = loss_function(hyper.loss)
    rng = RandomSource(hyper.seed)
    shuffle_rng = rng.child("shuffle")
    dropout_rng = rng.child("dropout")
    n = len(train_set)
    history = TrainHistory()
    for _epoch in range(hyper.epochs):
        perm = seeded_shuffle(n, shuffle_rng)
        total, seen = 0.0, 0
        for start in range(0, n, hyper.batch_size):
            idx = perm[start : start + hyper.batch_size]
            xb = train_set.inputs[idx]
            yb = train_set.targets[idx]
            out, cache = nn.forward(model, xb, mode="train", rng=dropout_rng)
            loss, dout = loss_fn(out, yb)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite training loss at epoch {_epoch}")
            grads = nn.backward(model, cache, dout)
            sgd_step(model, grads, hyper.learning_rate)
            total += loss * len(idx)
            seen += len(idx)
        history.epoch_loss.append(total / seen)
    return model, history


def split_dataset(
    ds: Dataset, test_fraction: float, rng: RandomSource
) -> tuple[Dataset, Dataset]:
    """Seeded shuffle, then floor(N * fraction) test samples, remainder train."""
    if not (0.0 < test_fraction < 1.0):
        raise ConfigError(f"test fraction must be in (0, 1), got {test_fraction}")
    n = len(ds)
    perm = seeded_shuffle(n, rng)
    n_test = int(np.floor(n * test_fraction))
    return ds.subset(perm[n_test:]), ds.subset(perm[:n_test])
