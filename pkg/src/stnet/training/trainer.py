"""Mini-batch training loop and test-set evaluation."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from ..errors import DataError, DivergenceError, NumericInputError, ShapeError
from ..models.checkpoint import save_checkpoint
from ..tensor import rng_stream
from .metrics import HistoryRecord, Metrics, compute_metrics, predict_labels
from .optim import (
    OptimizerState,
    TrainConfig,
    clip_gradients,
    cross_entropy_grad,
    cross_entropy_loss,
    optimizer_step,
)

log = logging.getLogger(__name__)


def one_hot_batch(labels, classes: int = 2, dtype=np.float32) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.size, classes), dtype=dtype)
    out[np.arange(labels.size), labels] = 1
    return out


def _as_dataset(data, what: str):
    if data is None:
        return None
    X, y = data
    X = np.asarray(X)
    y = np.asarray(y, dtype=np.int64)
    if len(X) == 0:
        raise DataError(f"{what} set is empty")
    if len(X) != len(y):
        raise ShapeError(f"{what} set: {len(X)} clips but {len(y)} labels")
    return X, y


def predict_probs(model, X: np.ndarray, batch_size: int = 8) -> np.ndarray:
    """Eval-mode probabilities for every clip, batched."""
    return np.concatenate([model.predict(X[i:i + batch_size]) for i in range(0, len(X), batch_size)])


def train_step(model, xb, yb, state: OptimizerState, cfg: TrainConfig, rng):
    """One forward/backward/update on a batch; returns (loss, probs)."""
    targets = one_hot_batch(yb, dtype=model.dtype)
    probs, cache = model.forward(xb, rng=rng, cache=True)
    if not np.all(np.isfinite(probs)):
        raise NumericInputError("non-finite class probabilities")
    loss = cross_entropy_loss(probs, targets)
    grads = model.backward(cache, cross_entropy_grad(probs, targets))
    if cfg.clip_norm is not None:
        clip_gradients(grads, cfg.clip_norm)
    optimizer_step(model.parameters(), grads, state, cfg)
    return loss, probs


def train(model, train_set, val_set=None, cfg: TrainConfig | None = None, checkpoint_dir=None, on_epoch=None):
    """Fit ``model`` on ``train_set = (X, y)``; returns (model, history).

    Shuffling and dropout draw from named streams of ``cfg.seed`` so a run is
    reproducible bit for bit. With ``cfg.checkpoint_every = k > 0`` and a
    ``checkpoint_dir``, a checkpoint is written after every k-th epoch.
    """
    cfg = (cfg or TrainConfig()).validate()
    X, y = _as_dataset(train_set, "training")
    val = _as_dataset(val_set, "validation")
    model.train()
    state = OptimizerState()
    history: list[HistoryRecord] = []
    n = len(X)
    for epoch in range(1, cfg.epochs + 1):
        order = rng_stream(cfg.seed, f"shuffle/{epoch}").permutation(n)
        drop_rng = rng_stream(cfg.seed, f"dropout/{epoch}")
        loss_sum, correct = 0.0, 0
        for step, start in enumerate(range(0, n, cfg.batch_size), 1):
            idx = order[start:start + cfg.batch_size]
            try:
                loss, probs = train_step(model, X[idx], y[idx], state, cfg, drop_rng)
            except (NumericInputError, FloatingPointError) as exc:
                raise DivergenceError(f"training diverged at epoch {epoch}, step {step}: {exc}", epoch, step) from exc
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite loss at epoch {epoch}, step {step}", epoch, step)
            loss_sum += loss * len(idx)
            correct += int(np.sum(predict_labels(probs) == y[idx]))
        record = HistoryRecord(epoch, loss_sum / n, correct / n, None, None)
        if val is not None:
            m = evaluate(model, val)
            record.val_loss, record.val_accuracy = m.loss, m.accuracy
        history.append(record)
        log.info("epoch %d: %s", epoch, record)
        if on_epoch is not None:
            on_epoch(record)
        if cfg.checkpoint_every and checkpoint_dir is not None and epoch % cfg.checkpoint_every == 0:
            Path(checkpoint_dir).mkdir(parents=True, exist_ok=True)
            save_checkpoint(model, Path(checkpoint_dir) / f"epoch_{epoch:03d}.ckpt", epoch=epoch, seed=cfg.seed)
    model.eval()
    return model, history


def evaluate(model, test_set, batch_size: int = 8) -> Metrics:
    """Argmax predictions on ``test_set = (X, y)`` scored into :class:`Metrics`."""
    X, y = _as_dataset(test_set, "test")
    probs = predict_probs(model, X, batch_size)
    loss = cross_entropy_loss(probs, one_hot_batch(y, dtype=probs.dtype))
    return compute_metrics(predict_labels(probs), y, loss)
