"""Training and scoring loops.

All randomness flows from three independent streams spawned off the seed:
parameter initialization, epoch shuffling, and dropout masks. Given the same
data and configuration, two runs therefore produce bit-identical models.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyInputError, ShapeError
from .layers import mae_loss, one_hot
from .model import Model, ModelConfig
from .optim import SGD


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-6
    momentum: float = 0.99
    batch_size: int = 2
    epochs: int = 1
    seed: int = 0


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    loss: float
    acc: float


def train(x, labels, model_config: ModelConfig, train_config: TrainConfig):
    """Train a fresh model; returns (model, optimizer, per-epoch history)."""
    x = np.asarray(x)
    labels = np.asarray(labels, dtype=np.int64)
    if x.ndim != 4:
        raise ShapeError(f"expected [n, W, H, D] training data, got rank {x.ndim}")
    n = x.shape[0]
    if n == 0:
        raise EmptyInputError("training set is empty")
    if labels.shape != (n,):
        raise ShapeError(f"labels shape {labels.shape} does not match {n} samples")
    if tuple(x.shape[1:]) != model_config.input_shape:
        raise ShapeError(
            f"sample shape {tuple(x.shape[1:])} != configured {model_config.input_shape}"
        )

    root = np.random.SeedSequence([int(train_config.seed)])
    init_ss, shuffle_ss, dropout_ss = root.spawn(3)
    model = Model(model_config)
    model.init_params(np.random.default_rng(init_ss))
    shuffle_rng = np.random.default_rng(shuffle_ss)
    dropout_rng = np.random.default_rng(dropout_ss)
    optimizer = SGD(model.params(), train_config.lr, train_config.momentum)

    batch = int(train_config.batch_size)
    classes = model_config.classes
    dtype = model_config.np_dtype
    history = []
    for epoch in range(int(train_config.epochs)):
        perm = shuffle_rng.permutation(n)
        abs_sum = 0.0
        correct = 0
        for start in range(0, n, batch):
            idx = perm[start:start + batch]
            xb = x[idx][:, None].astype(dtype, copy=False)
            yb = one_hot(labels[idx], classes, dtype)
            probs = model.forward(xb, train=True, rng=dropout_rng)
            loss, grad = mae_loss(probs, yb)
            model.backward(grad)
            optimizer.step()
            abs_sum += loss * idx.size * classes
            correct += int((probs.argmax(axis=1) == labels[idx]).sum())
        history.append(EpochStats(epoch, abs_sum / (n * classes), correct / n))
    return model, optimizer, history


def predict_scores(model: Model, x, batch_size=8):
    """Eval-mode probability of class 1 for every sample."""
    x = np.asarray(x)
    if x.ndim != 4:
        raise ShapeError(f"expected [n, W, H, D] data, got rank {x.ndim}")
    dtype = model.config.np_dtype
    scores = []
    for start in range(0, x.shape[0], int(batch_size)):
        xb = x[start:start + int(batch_size)][:, None].astype(dtype, copy=False)
        probs = model.forward(xb, train=False)
        scores.append(probs[:, 1])
    if not scores:
        return np.zeros(0, dtype=dtype)
    return np.concatenate(scores)
