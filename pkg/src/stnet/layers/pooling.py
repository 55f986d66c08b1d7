"""Non-overlapping max pooling over 2 or 3 spatial axes.

Trailing rows/columns (and frames) that do not fill a whole window are
dropped. The argmax offset of every window is kept for the backward pass,
which routes each upstream gradient entirely to that position.
"""

import numpy as np

from .. import _kernels
from ..errors import ConfigError, ShapeError
from .base import EVAL, Context, Layer, require_cache


class MaxPool(Layer):
    def __init__(self, window=(2, 2)):
        super().__init__()
        self.window = tuple(int(w) for w in window)
        if len(self.window) not in (2, 3) or min(self.window) < 1:
            raise ConfigError(f"pool window must have 2 or 3 positive sizes, got {window}")
        self.kind = f"maxpool{len(self.window)}d"

    def output_shape(self, in_shape):
        *spatial, c = in_shape
        if len(spatial) != len(self.window):
            raise ShapeError(f"{self.kind} expects {len(self.window)} spatial axes, got shape {tuple(in_shape)}")
        for n, w in zip(spatial, self.window):
            if w > n:
                raise ShapeError(f"{self.kind}: window {self.window} larger than input {tuple(spatial)}")
        return (*(n // w for n, w in zip(spatial, self.window)), c)

    def forward(self, x, ctx: Context = EVAL):
        self.output_shape(x.shape[1:])
        x5 = x[:, None] if len(self.window) == 2 else x
        w5 = (1, *self.window) if len(self.window) == 2 else self.window
        out, idx = _kernels.maxpool_forward(x5, *w5)
        if len(self.window) == 2:
            out = out[:, 0]
        return out, ((x5.shape, idx, w5) if ctx.cache else None)

    def backward(self, cache, grad_out):
        shape5, idx, w5 = require_cache(cache, self)
        g5 = grad_out[:, None] if len(self.window) == 2 else grad_out
        dx = _kernels.maxpool_backward(np.ascontiguousarray(g5), idx, tuple(shape5), *w5)
        if len(self.window) == 2:
            dx = dx[:, 0]
        return dx, {}

    def describe(self):
        return f"{self.kind}({'x'.join(map(str, self.window))})"


def maxpool_forward(x: np.ndarray, window) -> np.ndarray:
    """Single-sample convenience: pool a (*spatial, C) tensor."""
    return MaxPool(window)(x[None])[0]
