"""Dense, activation, flatten, dropout and temporal pooling layers."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, ShapeError
from ..tensor import default_dtype, softmax
from .base import EVAL, Context, Layer, glorot, require_cache


class Dense(Layer):
    """y = A x + b over the last axis; A has shape (out, in)."""

    kind = "dense"

    def __init__(self, in_features, out_features, rng=None, dtype=None):
        super().__init__()
        dtype = dtype or default_dtype()
        rng = rng or np.random.default_rng(0)
        self.in_features, self.out_features = in_features, out_features
        self.params["A"] = glorot(rng, (out_features, in_features), in_features, out_features, dtype)
        self.params["b"] = np.zeros(out_features, dtype=dtype)

    def output_shape(self, in_shape):
        if in_shape[-1] != self.in_features:
            raise ShapeError(f"dense: input length {in_shape[-1]} != {self.in_features}")
        return (*in_shape[:-1], self.out_features)

    def forward(self, x, ctx: Context = EVAL):
        self.output_shape(x.shape[1:] if x.ndim > 1 else x.shape)
        y = x @ self.params["A"].T + self.params["b"]
        return y, (x if ctx.cache else None)

    def backward(self, cache, grad_out):
        x = require_cache(cache, self)
        g2 = grad_out.reshape(-1, self.out_features)
        x2 = x.reshape(-1, self.in_features)
        return grad_out @ self.params["A"], {"A": g2.T @ x2, "b": g2.sum(axis=0)}

    def describe(self):
        return f"dense({self.out_features})"


def dense_forward(layer: Dense, x: np.ndarray) -> np.ndarray:
    return layer(x)


def _sigmoid(x):
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


ACTIVATIONS = ("relu", "sigmoid", "tanh", "softmax")


def activation_forward(kind: str, x: np.ndarray) -> np.ndarray:
    if kind == "relu":
        return np.maximum(x, 0)
    if kind == "sigmoid":
        return _sigmoid(np.asarray(x))
    if kind == "tanh":
        return np.tanh(x)
    if kind == "softmax":
        return softmax(x, axis=-1)
    raise ConfigError(f"unknown activation {kind!r}")


def activation_backward(kind: str, x, y, grad_out):
    if kind == "relu":
        return grad_out * (x > 0)
    if kind == "sigmoid":
        return grad_out * y * (1 - y)
    if kind == "tanh":
        return grad_out * (1 - y * y)
    return y * (grad_out - (grad_out * y).sum(axis=-1, keepdims=True))


class Activation(Layer):
    def __init__(self, kind: str):
        super().__init__()
        if kind not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {kind!r}")
        self.kind = kind

    def forward(self, x, ctx: Context = EVAL):
        y = activation_forward(self.kind, x)
        return y, ((x, y) if ctx.cache else None)

    def backward(self, cache, grad_out):
        x, y = require_cache(cache, self)
        return activation_backward(self.kind, x, y, grad_out), {}


class Flatten(Layer):
    kind = "flatten"

    def output_shape(self, in_shape):
        return (int(np.prod(in_shape)),)

    def forward(self, x, ctx: Context = EVAL):
        return x.reshape(x.shape[0], -1), (x.shape if ctx.cache else None)

    def backward(self, cache, grad_out):
        return grad_out.reshape(require_cache(cache, self)), {}


def flatten(x: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(x).reshape(-1)


def dropout_forward(x, rate: float, train: bool, rng=None, mask=None):
    """Inverted dropout; returns (output, keep-mask or None)."""
    if not 0 <= rate < 1:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if not train or rate == 0:
        return x, None
    if mask is None:
        if rng is None:
            raise ConfigError("train-mode dropout needs a seeded generator")
        mask = rng.random(x.shape) >= rate
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != x.shape:
        raise ShapeError(f"dropout mask shape {mask.shape} != input {x.shape}")
    return x * mask / (1.0 - rate), mask


class Dropout(Layer):
    kind = "dropout"

    def __init__(self, rate: float = 0.5):
        super().__init__()
        if not 0 <= rate < 1:
            raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, x, ctx: Context = EVAL):
        y, mask = dropout_forward(x, self.rate, ctx.train, ctx.rng, ctx.extras.get("dropout_mask"))
        return y, ((mask,) if ctx.cache else None)

    def backward(self, cache, grad_out):
        (mask,) = require_cache(cache, self)
        if mask is None:
            return grad_out, {}
        return grad_out * mask / (1.0 - self.rate), {}

    def describe(self):
        return f"dropout({self.rate})"


class TemporalMeanPool(Layer):
    """(N, T, d) -> (N, d) average over time."""

    kind = "mean_pool_time"

    def output_shape(self, in_shape):
        return tuple(in_shape[1:])

    def forward(self, x, ctx: Context = EVAL):
        return x.mean(axis=1), (x.shape if ctx.cache else None)

    def backward(self, cache, grad_out):
        shape = require_cache(cache, self)
        return np.repeat(grad_out[:, None] / shape[1], shape[1], axis=1), {}
