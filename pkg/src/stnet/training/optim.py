"""Cross-entropy loss and the SGD / Adam update rules."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, NumericInputError, ShapeError

PROB_FLOOR = 1e-12


def cross_entropy_loss(probs: np.ndarray, targets: np.ndarray) -> float:
    """Mean negative log-probability of the true class, clamped at 1e-12."""
    probs = np.asarray(probs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if probs.shape != targets.shape or probs.ndim != 2:
        raise ShapeError(f"cross entropy: probs {probs.shape} vs targets {targets.shape}")
    if np.any(np.abs(probs.sum(axis=1) - 1.0) > 1e-4):
        raise NumericInputError("cross entropy: probability rows must sum to 1")
    p_true = (probs * targets).sum(axis=1)
    return float(-np.log(np.maximum(p_true, PROB_FLOOR)).mean())


def cross_entropy_grad(probs: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """dL/dprobs for :func:`cross_entropy_loss` (zero where the clamp is active)."""
    p = np.maximum(probs, PROB_FLOOR)
    g = -targets / p / probs.shape[0]
    return np.where(probs >= PROB_FLOOR, g, 0.0).astype(probs.dtype)


@dataclass
class TrainConfig:
    optimizer: str = "adam"
    lr: float = 1e-4
    batch_size: int = 4
    epochs: int = 30
    seed: int = 0
    clip_norm: float | None = None
    checkpoint_every: int = 0

    def validate(self) -> "TrainConfig":
        if self.optimizer not in ("sgd", "adam"):
            raise ConfigError(f"optimizer must be 'sgd' or 'adam', got {self.optimizer!r}")
        if self.lr <= 0:
            raise ConfigError("learning rate must be > 0")
        if self.batch_size < 1 or self.epochs < 1:
            raise ConfigError("batch size and epochs must be >= 1")
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ConfigError("clip_norm must be > 0")
        return self


DESK_LR = 3e-4


def desk_train_config(seed: int = 0, **overrides) -> TrainConfig:
    """Adam at ``DESK_LR`` for the reduced 16x24x24 preset.

    At 1e-4 the recurrent variants are still near chance after 30 epochs of
    the 160-clip synthetic train split; at 1e-3 the 13-conv VGG stack
    collapses to a constant output.
    """
    return TrainConfig(lr=DESK_LR, seed=seed, **overrides).validate()


TRAIN_PRESETS = {"full": lambda seed=0: TrainConfig(seed=seed), "desk": desk_train_config}


@dataclass
class OptimizerState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


BETA1, BETA2, ADAM_EPS = 0.9, 0.999, 1e-8


def optimizer_step(params: dict, grads: dict, state: OptimizerState, cfg: TrainConfig) -> OptimizerState:
    """Update ``params`` in place from ``grads``."""
    for name, g in grads.items():
        if name not in params:
            raise ShapeError(f"gradient for unknown parameter {name!r}")
        if params[name].shape != g.shape:
            raise ShapeError(f"{name}: parameter {params[name].shape} vs gradient {g.shape}")
    state.step += 1
    if cfg.optimizer == "sgd":
        for name, g in grads.items():
            params[name] -= (cfg.lr * g).astype(params[name].dtype)
        return state
    t = state.step
    c1 = 1 - BETA1 ** t
    c2 = 1 - BETA2 ** t
    for name, g in grads.items():
        g = g.astype(np.float64)
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros(g.shape)
            state.v[name] = np.zeros(g.shape)
        v = state.v[name]
        m *= BETA1
        m += (1 - BETA1) * g
        v *= BETA2
        v += (1 - BETA2) * g * g
        update = cfg.lr * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)
        params[name] -= update.astype(params[name].dtype)
    return state


def clip_gradients(grads: dict, max_norm: float) -> float:
    """Scale all gradients so their joint L2 norm is at most ``max_norm``; returns the norm."""
    norm = float(np.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads.values())))
    if norm > max_norm:
        scale = max_norm / norm
        for k in grads:
            grads[k] = grads[k] * scale
    return norm
