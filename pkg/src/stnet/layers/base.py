"""Layer protocol shared by every primitive.

A layer owns a dict of parameter tensors and exposes::

    y, cache = layer.forward(x, ctx)
    dx, grads = layer.backward(cache, dy)

``cache`` is whatever the backward pass needs; it lives with the caller, so
one layer instance can serve several concurrent evaluations. ``grads`` maps
parameter names (relative to the layer, dotted for children) to arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import StnetError, UsageError
from ..tensor import default_dtype


@dataclass
class Context:
    """Per-call forward settings.

    ``cache=False`` lets inference skip retaining activations.
    """

    train: bool = False
    rng: np.random.Generator | None = None
    cache: bool = True
    extras: dict = field(default_factory=dict)


EVAL = Context(train=False, cache=False)


def glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int, dtype=None) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype or default_dtype())


def require_cache(cache, layer: "Layer"):
    if cache is None:
        raise UsageError(f"{layer.kind}: backward called without a cached forward pass")
    return cache


class Layer:
    kind = "layer"

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}

    def children(self) -> list[tuple[str, "Layer"]]:
        return []

    def named_parameters(self, prefix: str = ""):
        for name, value in self.params.items():
            yield prefix + name, value
        for cname, child in self.children():
            yield from child.named_parameters(f"{prefix}{cname}.")

    def output_shape(self, in_shape: tuple) -> tuple:
        return tuple(in_shape)

    def forward(self, x: np.ndarray, ctx: Context = EVAL):
        raise NotImplementedError

    def backward(self, cache, grad_out: np.ndarray):
        raise NotImplementedError

    def __call__(self, x, ctx: Context = EVAL):
        return self.forward(x, ctx)[0]

    def describe(self) -> str:
        return self.kind

    def __repr__(self):
        return f"{type(self).__name__}({self.describe()})"


def merge_grads(into: dict, grads: dict, prefix: str = "") -> dict:
    for k, v in grads.items():
        key = prefix + k
        if key in into:
            into[key] = into[key] + v
        else:
            into[key] = v
    return into


class Sequential(Layer):
    kind = "sequential"

    def __init__(self, layers, names=None):
        super().__init__()
        self.layers = list(layers)
        self.names = list(names) if names is not None else [str(i) for i in range(len(self.layers))]
        if len(set(self.names)) != len(self.names):
            raise ValueError("layer names must be unique")

    def children(self):
        return list(zip(self.names, self.layers))

    def output_shape(self, in_shape):
        shape = tuple(in_shape)
        for layer in self.layers:
            shape = layer.output_shape(shape)
        return shape

    def forward(self, x, ctx: Context = EVAL):
        caches = []
        for layer in self.layers:
            x, c = layer.forward(x, ctx)
            caches.append(c)
        return x, (caches if ctx.cache else None)

    def backward(self, cache, grad_out):
        caches = require_cache(cache, self)
        grads: dict = {}
        for name, layer, c in zip(reversed(self.names), reversed(self.layers), reversed(caches)):
            grad_out, g = layer.backward(c, grad_out)
            merge_grads(grads, g, name + ".")
        return grad_out, grads

    def describe(self):
        return ", ".join(layer.describe() for layer in self.layers)


class TimeDistributed(Layer):
    """Apply one layer to every time slice of an (N, T, ...) input."""

    kind = "time_distributed"

    def __init__(self, layer: Layer):
        super().__init__()
        self.layer = layer

    def children(self):
        return [("inner", self.layer)]

    def output_shape(self, in_shape):
        t, *rest = in_shape
        return (t, *self.layer.output_shape(tuple(rest)))

    def forward(self, x, ctx: Context = EVAL):
        outs, caches = [], []
        for t in range(x.shape[1]):
            try:
                y, c = self.layer.forward(x[:, t], ctx)
            except StnetError as exc:
                raise type(exc)(f"time step {t}: {exc}") from exc
            outs.append(y)
            caches.append(c)
        return np.stack(outs, axis=1), (caches if ctx.cache else None)

    def backward(self, cache, grad_out):
        caches = require_cache(cache, self)
        dxs, grads = [], {}
        for t, c in enumerate(caches):
            dx, g = self.layer.backward(c, grad_out[:, t])
            dxs.append(dx)
            merge_grads(grads, g, "inner.")
        return np.stack(dxs, axis=1), grads

    def describe(self):
        return f"time_distributed[{self.layer.describe()}]"


def time_distributed(layer: Layer, xs: np.ndarray, ctx: Context = EVAL) -> np.ndarray:
    """Apply ``layer`` to each slice of an unbatched (T, ...) sequence."""
    return TimeDistributed(layer)(xs[None], ctx)[0]
