"""Synthetic data and a plain minibatch SGD loop."""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NumericError, ShapeError
from .network import Network, check_input
from .tensor import fixture_read, fixture_write


@dataclass
class Dataset:
    x: np.ndarray
    y: np.ndarray
    templates: np.ndarray | None = None

    def __len__(self):
        return len(self.y)

    @property
    def classes(self) -> int:
        return int(self.y.max()) + 1


def synth_dataset(seed: int, samples: int, classes: int, c: int, hw: int,
                  template_scale: float = 3.0, noise_std: float = 1.0) -> Dataset:
    """Gaussian noise around one template per class; labels assigned round-robin.

    A template is constant over space and varies across channels, with RMS
    ``template_scale``.
    """
    if classes < 2 or samples < classes or min(c, hw) < 1:
        raise ValueError(f"degenerate dataset request: samples={samples} classes={classes} c={c} hw={hw}")
    rng = np.random.default_rng(seed)
    levels = rng.standard_normal((classes, c))
    levels *= template_scale / np.sqrt((levels**2).mean(axis=1, keepdims=True))
    templates = np.broadcast_to(levels[:, :, None, None], (classes, c, hw, hw)).copy()
    y = np.arange(samples) % classes
    x = templates[y] + noise_std * rng.standard_normal((samples, c, hw, hw))
    return Dataset(x, y.astype(np.int64), templates)


def nearest_template_accuracy(data: Dataset) -> float:
    d = ((data.x[:, None] - data.templates[None]) ** 2).sum(axis=(2, 3, 4))
    return float((d.argmin(axis=1) == data.y).mean())


def save_dataset(data: Dataset, directory: str | os.PathLike) -> None:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    fixture_write(data.x, out / "inputs.dsx")
    fixture_write(data.y.astype(np.float64).reshape(-1, 1, 1, 1), out / "labels.dsx")


def load_dataset(directory: str | os.PathLike) -> Dataset:
    """Read ``inputs.dsx`` and ``labels.dsx`` (shape (n, 1, 1, 1)) from a directory."""
    src = Path(directory)
    x = fixture_read(src / "inputs.dsx")
    labels = fixture_read(src / "labels.dsx")
    if labels.shape != (x.shape[0], 1, 1, 1):
        raise ShapeError(f"labels shape {labels.shape} does not match {x.shape[0]} inputs")
    y = labels.reshape(-1)
    if np.any(y != np.round(y)) or y.min() < 0:
        raise ValueError("labels must be non-negative integers")
    return Dataset(x, y.astype(np.int64))


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError(f"epochs and batch_size must be positive: {self}")
        if self.learning_rate < 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")


def evaluate(net: Network, data: Dataset, batch_size: int = 256) -> tuple[float, float]:
    """Mean cross-entropy and accuracy over the whole dataset, in index order."""
    total = 0.0
    correct = 0
    for lo in range(0, len(data), batch_size):
        xb, yb = data.x[lo:lo + batch_size], data.y[lo:lo + batch_size]
        logits = net.forward(xb)
        shifted = logits - logits.max(axis=1, keepdims=True)
        logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        total += -logp[np.arange(len(yb)), yb].sum()
        correct += int((logits.argmax(axis=1) == yb).sum())
    return float(total / len(data)), correct / len(data)


def train(net: Network, data: Dataset, cfg: TrainConfig, log=None):
    """Plain SGD. Returns ``[(epoch, loss, accuracy), ...]`` with epoch 0 the untrained model.

    Loss and accuracy are measured on the full training set after each epoch.
    """
    check_input(net, data.x)
    if data.classes > net.classes:
        raise ShapeError(f"dataset has {data.classes} classes, network outputs {net.classes}")
    rng = np.random.default_rng(cfg.seed)
    history = [(0, *evaluate(net, data))]
    if log is not None:
        log(*history[0])
    step = 0
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(data))
        for lo in range(0, len(data), cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            loss, _ = net.loss_and_backward(data.x[idx], data.y[idx])
            if not np.isfinite(loss):
                raise NumericError(f"non-finite loss {loss} at step {step} (epoch {epoch})")
            for p, g in net.params_and_grads():
                p -= cfg.learning_rate * g
            step += 1
        history.append((epoch, *evaluate(net, data)))
        if log is not None:
            log(*history[-1])
    return history
