"""Scaled dot-product attention and the transformer encoder block."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, ShapeError
from ..tensor import default_dtype, softmax
from .base import EVAL, Context, Layer, Sequential, glorot, merge_grads, require_cache
from .core import Activation, Dense


def scaled_dot_attention(Q, K, V, return_weights=False):
    """softmax(Q K^T / sqrt(d_k)) V over the last two axes; no masking."""
    if Q.shape[-1] != K.shape[-1] or K.shape[-2] != V.shape[-2] or Q.shape[-1] < 1:
        raise ShapeError(f"attention: incompatible Q {Q.shape}, K {K.shape}, V {V.shape}")
    scale = 1.0 / np.sqrt(Q.shape[-1])
    weights = softmax(Q @ np.swapaxes(K, -1, -2) * scale, axis=-1)
    out = weights @ V
    return (out, weights) if return_weights else out


def scaled_dot_attention_backward(Q, K, V, weights, grad_out):
    scale = 1.0 / np.sqrt(Q.shape[-1])
    dV = np.swapaxes(weights, -1, -2) @ grad_out
    dA = grad_out @ np.swapaxes(V, -1, -2)
    dS = weights * (dA - (dA * weights).sum(axis=-1, keepdims=True)) * scale
    return dS @ K, np.swapaxes(dS, -1, -2) @ Q, dV


class MultiHeadAttention(Layer):
    """Self-attention over (N, T, d_model).

    W_Q, W_K, W_V have shape (d_model, heads * d_k); head h uses columns
    [h * d_k, (h + 1) * d_k). W_O maps the concatenated heads back to d_model.
    """

    kind = "mha"

    def __init__(self, d_model, heads=4, rng=None, dtype=None):
        super().__init__()
        if heads < 1 or d_model % heads:
            raise ConfigError(f"d_model {d_model} is not divisible by heads {heads}")
        dtype = dtype or default_dtype()
        rng = rng or np.random.default_rng(0)
        self.d_model, self.heads, self.d_k = d_model, heads, d_model // heads
        hd = heads * self.d_k
        for name in ("W_Q", "W_K", "W_V"):
            self.params[name] = glorot(rng, (d_model, hd), d_model, hd, dtype)
        self.params["W_O"] = glorot(rng, (hd, d_model), hd, d_model, dtype)

    def output_shape(self, in_shape):
        if in_shape[-1] != self.d_model:
            raise ShapeError(f"mha: feature size {in_shape[-1]} != d_model {self.d_model}")
        return tuple(in_shape)

    def _split(self, a):
        n, t, _ = a.shape
        return a.reshape(n, t, self.heads, self.d_k).transpose(0, 2, 1, 3)

    def _merge(self, a):
        n, h, t, dk = a.shape
        return a.transpose(0, 2, 1, 3).reshape(n, t, h * dk)

    def forward(self, x, ctx: Context = EVAL):
        self.output_shape(x.shape)
        p = self.params
        q, k, v = (self._split(x @ p[w]) for w in ("W_Q", "W_K", "W_V"))
        att, weights = scaled_dot_attention(q, k, v, return_weights=True)
        merged = self._merge(att)
        y = merged @ p["W_O"]
        return y, ((x, q, k, v, weights, merged) if ctx.cache else None)

    def backward(self, cache, grad_out):
        x, q, k, v, weights, merged = require_cache(cache, self)
        p = self.params
        d = self.d_model
        g2 = grad_out.reshape(-1, d)
        dW_O = merged.reshape(-1, merged.shape[-1]).T @ g2
        datt = self._split(grad_out @ p["W_O"].T)
        dq, dk, dv = scaled_dot_attention_backward(q, k, v, weights, datt)
        x2 = x.reshape(-1, d)
        grads = {"W_O": dW_O}
        dx = np.zeros_like(x, dtype=np.result_type(x, grad_out))
        for name, g in (("W_Q", dq), ("W_K", dk), ("W_V", dv)):
            gm = self._merge(g)
            grads[name] = x2.T @ gm.reshape(-1, gm.shape[-1])
            dx += gm @ p[name].T
        return dx, grads

    def describe(self):
        return f"mha({self.heads}x{self.d_k})"


def multi_head_attention(layer: MultiHeadAttention, x: np.ndarray) -> np.ndarray:
    """Unbatched (T, d_model) self-attention."""
    return layer(x[None])[0]


class LayerNorm(Layer):
    kind = "layernorm"

    def __init__(self, d, eps=1e-5, dtype=None):
        super().__init__()
        dtype = dtype or default_dtype()
        self.d, self.eps = d, eps
        self.params["gain"] = np.ones(d, dtype=dtype)
        self.params["offset"] = np.zeros(d, dtype=dtype)

    def forward(self, x, ctx: Context = EVAL):
        if x.shape[-1] != self.d:
            raise ShapeError(f"layernorm: feature size {x.shape[-1]} != {self.d}")
        mu = x.mean(axis=-1, keepdims=True)
        xc = x - mu
        inv = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + self.eps)
        xhat = xc * inv
        y = xhat * self.params["gain"] + self.params["offset"]
        return y, ((xhat, inv) if ctx.cache else None)

    def backward(self, cache, grad_out):
        xhat, inv = require_cache(cache, self)
        d = self.d
        dxhat = grad_out * self.params["gain"]
        dx = inv / d * (d * dxhat - dxhat.sum(axis=-1, keepdims=True)
                        - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True))
        g2 = grad_out.reshape(-1, d)
        return dx, {"gain": (g2 * xhat.reshape(-1, d)).sum(axis=0), "offset": g2.sum(axis=0)}


def feed_forward(d_model, d_ff=256, rng=None, dtype=None) -> Sequential:
    """Position-wise d_model -> d_ff -> d_model map with relu in between."""
    return Sequential(
        [Dense(d_model, d_ff, rng, dtype), Activation("relu"), Dense(d_ff, d_model, rng, dtype)],
        names=["in", "relu", "out"],
    )


class EncoderBlock(Layer):
    """Pre-norm encoder block: x + MHA(LN(x)), then + FFN(LN(.))."""

    kind = "encoder"

    def __init__(self, d_model, heads=4, d_ff=256, rng=None, dtype=None):
        super().__init__()
        self.ln1 = LayerNorm(d_model, dtype=dtype)
        self.mha = MultiHeadAttention(d_model, heads, rng, dtype)
        self.ln2 = LayerNorm(d_model, dtype=dtype)
        self.ffn = feed_forward(d_model, d_ff, rng, dtype)
        self.d_model = d_model

    def children(self):
        return [("ln1", self.ln1), ("mha", self.mha), ("ln2", self.ln2), ("ffn", self.ffn)]

    def output_shape(self, in_shape):
        return self.mha.output_shape(in_shape)

    def forward(self, x, ctx: Context = EVAL):
        a, c1 = self.ln1.forward(x, ctx)
        m, c2 = self.mha.forward(a, ctx)
        y = x + m
        b, c3 = self.ln2.forward(y, ctx)
        f, c4 = self.ffn.forward(b, ctx)
        return y + f, ((c1, c2, c3, c4) if ctx.cache else None)

    def backward(self, cache, grad_out):
        c1, c2, c3, c4 = require_cache(cache, self)
        grads: dict = {}
        db, g = self.ffn.backward(c4, grad_out)
        merge_grads(grads, g, "ffn.")
        dy_ln, g = self.ln2.backward(c3, db)
        merge_grads(grads, g, "ln2.")
        dy = grad_out + dy_ln
        da, g = self.mha.backward(c2, dy)
        merge_grads(grads, g, "mha.")
        dx_ln, g = self.ln1.backward(c1, da)
        merge_grads(grads, g, "ln1.")
        return dy + dx_ln, grads

    def describe(self):
        return f"encoder({self.d_model},{self.mha.heads}h)"


def transformer_encoder_block(layer: EncoderBlock, x: np.ndarray) -> np.ndarray:
    return layer(x[None])[0]


def positional_encoding(T: int, d_model: int, dtype=None) -> np.ndarray:
    """Fixed sinusoidal table: sin on even columns, cos on odd columns."""
    if T < 1 or d_model < 1:
        raise ConfigError(f"positional encoding needs T, d_model >= 1, got {T}, {d_model}")
    pos = np.arange(T, dtype=np.float64)[:, None]
    two_i = np.arange(0, d_model, 2, dtype=np.float64)
    angle = pos / np.power(10000.0, two_i / d_model)
    pe = np.zeros((T, d_model))
    pe[:, 0::2] = np.sin(angle)
    pe[:, 1::2] = np.cos(angle[:, : d_model // 2])
    return pe.astype(dtype or default_dtype())


class PositionalEncoding(Layer):
    kind = "positional_encoding"

    def __init__(self, T, d_model):
        super().__init__()
        self.table = positional_encoding(T, d_model, np.float64)

    def output_shape(self, in_shape):
        if tuple(in_shape) != self.table.shape:
            raise ShapeError(f"positional encoding: input {tuple(in_shape)} != {self.table.shape}")
        return tuple(in_shape)

    def forward(self, x, ctx: Context = EVAL):
        self.output_shape(x.shape[1:])
        return x + self.table.astype(x.dtype), (() if ctx.cache else None)

    def backward(self, cache, grad_out):
        require_cache(cache, self)
        return grad_out, {}
