"""2-D and 3-D convolution with flipped kernels.

The kernel is applied as a true convolution: output[s, t] sums
``x[s + p, t + q] * W[P - 1 - p, Q - 1 - q]``. Internally the kernel is
flipped once and the patch matrix is multiplied against it.
"""

from __future__ import annotations

import math

import numpy as np

from .. import _kernels
from ..errors import ConfigError, ShapeError
from ..tensor import default_dtype
from .base import EVAL, Context, Layer, glorot, require_cache


def _as_tuple(v, n):
    if isinstance(v, int):
        return (v,) * n
    v = tuple(int(i) for i in v)
    if len(v) != n:
        raise ConfigError(f"expected {n} values, got {v}")
    return v


def conv_padding(spatial, kernel, stride, padding):
    """(before, after) pad per axis; 'same' follows ceil(n / stride) outputs."""
    if padding == "valid":
        return [(0, 0)] * len(spatial)
    if padding != "same":
        raise ConfigError(f"padding must be 'valid' or 'same', got {padding!r}")
    pads = []
    for n, k, s in zip(spatial, kernel, stride):
        out = -(-n // s)
        total = max((out - 1) * s + k - n, 0)
        pads.append((total // 2, total - total // 2))
    return pads


def conv_output_spatial(spatial, kernel, stride, padding):
    out = []
    for n, k, s, (a, b) in zip(spatial, kernel, stride, conv_padding(spatial, kernel, stride, padding)):
        size = n + a + b
        if size < k:
            raise ShapeError(f"input extent {n} smaller than kernel {k} under {padding} padding")
        out.append((size - k) // s + 1)
    return tuple(out)


def _to5d(x, nsp):
    return x[:, None] if nsp == 2 else x


def _kernel5(kernel):
    return (1, *kernel) if len(kernel) == 2 else tuple(kernel)


def conv_nd(x, W, b, padding="valid", stride=None, keep_cache=True):
    """Convolve (N, *spatial, C_in) with W of shape (*kernel, C_in, C_out).

    Returns the pre-activation output and a cache for :func:`conv_nd_backward`.
    """
    nsp = W.ndim - 2
    kernel = W.shape[:nsp]
    stride = _as_tuple(stride or 1, nsp)
    if x.ndim != nsp + 2:
        raise ShapeError(f"conv{nsp}d expects a rank-{nsp + 2} batch, got shape {x.shape}")
    if x.shape[-1] != W.shape[-2]:
        raise ShapeError(f"conv{nsp}d: input has {x.shape[-1]} channels, kernel expects {W.shape[-2]}")
    conv_output_spatial(x.shape[1:-1], kernel, stride, padding)
    pads = conv_padding(x.shape[1:-1], kernel, stride, padding)
    x5 = _to5d(x, nsp)
    pads5 = ([(0, 0)] if nsp == 2 else []) + pads
    xp = np.pad(x5, [(0, 0), *pads5, (0, 0)]) if any(a or b for a, b in pads) else x5
    xp = np.ascontiguousarray(xp)
    k5 = _kernel5(kernel)
    s5 = (1, *stride) if nsp == 2 else stride
    cols = _kernels.im2col(xp, *k5, *s5)
    c_out = W.shape[-1]
    wmat = W[(slice(None, None, -1),) * nsp].reshape(-1, c_out)
    z = cols @ wmat
    if b is not None:
        z += b
    n = x.shape[0]
    out_sp = tuple((xp.shape[1 + i] - k5[i]) // s5[i] + 1 for i in range(3))
    z = z.reshape(n, *(out_sp[1:] if nsp == 2 else out_sp), c_out)
    cache = (x.shape, xp.shape, pads5, cols, wmat, k5, s5, nsp, W.shape) if keep_cache else None
    return z, cache


def conv_nd_backward(cache, dz, with_bias=True):
    xshape, xpshape, pads5, cols, wmat, k5, s5, nsp, wshape = cache
    c_out = dz.shape[-1]
    dz2 = dz.reshape(-1, c_out)
    dwmat = cols.T @ dz2
    dW = dwmat.reshape(wshape)[(slice(None, None, -1),) * nsp]
    db = dz2.sum(axis=0) if with_bias else None
    dcols = dz2 @ wmat.T
    dxp = _kernels.col2im(np.ascontiguousarray(dcols), tuple(xpshape), *k5, *s5)
    sl = tuple(slice(a, dxp.shape[1 + i] - b) for i, (a, b) in enumerate(pads5))
    dx = dxp[(slice(None), *sl, slice(None))]
    if nsp == 2:
        dx = dx[:, 0]
    return np.ascontiguousarray(dx).reshape(xshape), np.ascontiguousarray(dW), db


class _ConvND(Layer):
    nsp = 2

    def __init__(self, in_channels, filters, kernel=3, padding="valid", stride=1,
                 activation="none", rng=None, dtype=None):
        super().__init__()
        kernel = _as_tuple(kernel, self.nsp)
        self.stride = _as_tuple(stride, self.nsp)
        if min(kernel) < 1 or min(self.stride) < 1:
            raise ConfigError("kernel size and stride must be >= 1")
        if activation not in ("none", "relu"):
            raise ConfigError(f"conv activation must be 'none' or 'relu', got {activation!r}")
        if padding not in ("valid", "same"):
            raise ConfigError(f"padding must be 'valid' or 'same', got {padding!r}")
        self.padding = padding
        self.activation = activation
        self.in_channels, self.filters, self.kernel = in_channels, filters, kernel
        dtype = dtype or default_dtype()
        rng = rng or np.random.default_rng(0)
        rf = math.prod(kernel)
        self.params["W"] = glorot(rng, (*kernel, in_channels, filters), rf * in_channels, rf * filters, dtype)
        self.params["b"] = np.zeros(filters, dtype=dtype)

    def output_shape(self, in_shape):
        *spatial, c = in_shape
        if len(spatial) != self.nsp:
            raise ShapeError(f"{self.kind} expects {self.nsp} spatial axes, got shape {tuple(in_shape)}")
        if c != self.in_channels:
            raise ShapeError(f"{self.kind}: input has {c} channels, expected {self.in_channels}")
        return (*conv_output_spatial(spatial, self.kernel, self.stride, self.padding), self.filters)

    def forward(self, x, ctx: Context = EVAL):
        z, cc = conv_nd(x, self.params["W"], self.params["b"], self.padding, self.stride, ctx.cache)
        y = np.maximum(z, 0) if self.activation == "relu" else z
        return y, ((cc, z > 0 if self.activation == "relu" else None) if ctx.cache else None)

    def backward(self, cache, grad_out):
        cc, mask = require_cache(cache, self)
        dz = grad_out * mask if mask is not None else grad_out
        dx, dW, db = conv_nd_backward(cc, dz)
        return dx, {"W": dW, "b": db}

    def describe(self):
        k = "x".join(map(str, self.kernel))
        act = "+relu" if self.activation == "relu" else ""
        return f"{self.kind}({self.filters},{k},{self.padding}){act}"


class Conv2D(_ConvND):
    kind = "conv2d"
    nsp = 2


class Conv3D(_ConvND):
    kind = "conv3d"
    nsp = 3


def conv2d_forward(layer: Conv2D, x: np.ndarray) -> np.ndarray:
    """Single-sample convenience: (H, W, C_in) -> (H', W', C_out)."""
    return layer(x[None])[0]


def conv3d_forward(layer: Conv3D, x: np.ndarray) -> np.ndarray:
    return layer(x[None])[0]
