"""LSTM, bidirectional LSTM and the convolutional LSTM.

Gate order in every stacked parameter is (input, forget, cell, output).
Both recurrences start from zero hidden and cell state and are
differentiated by backpropagation through time.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, ShapeError
from ..tensor import default_dtype
from .base import EVAL, Context, Layer, glorot, merge_grads, require_cache
from .conv import conv_nd, conv_nd_backward
from .core import _sigmoid


class LSTM(Layer):
    """Unidirectional LSTM over (N, T, D).

    With ``reverse=True`` the sequence is consumed back to front and the
    per-step states are reported in original time order, so the final
    state corresponds to t = 0.
    """

    kind = "lstm"

    def __init__(self, input_size, hidden=256, reverse=False, return_sequences=True,
                 rng=None, dtype=None, forget_bias=1.0):
        super().__init__()
        dtype = dtype or default_dtype()
        rng = rng or np.random.default_rng(0)
        self.input_size, self.hidden = input_size, hidden
        self.reverse, self.return_sequences = reverse, return_sequences
        h = hidden
        self.params["W"] = glorot(rng, (input_size, 4 * h), input_size, 4 * h, dtype)
        self.params["U"] = glorot(rng, (h, 4 * h), h, 4 * h, dtype)
        b = np.zeros(4 * h, dtype=dtype)
        b[h:2 * h] = forget_bias
        self.params["b"] = b

    def output_shape(self, in_shape):
        t, d = in_shape
        if d != self.input_size:
            raise ShapeError(f"lstm: input size {d} != {self.input_size}")
        return (t, self.hidden) if self.return_sequences else (self.hidden,)

    def forward(self, x, ctx: Context = EVAL):
        if x.ndim != 3 or x.shape[2] != self.input_size:
            raise ShapeError(f"lstm expects (N, T, {self.input_size}), got {x.shape}")
        W, U, b = self.params["W"], self.params["U"], self.params["b"]
        H = self.hidden
        xs = x[:, ::-1] if self.reverse else x
        n, T, _ = xs.shape
        xw = xs @ W + b
        dtype = xw.dtype
        h = np.zeros((n, H), dtype=dtype)
        c = np.zeros((n, H), dtype=dtype)
        hs = np.empty((n, T, H), dtype=dtype)
        steps = []
        for t in range(T):
            z = xw[:, t] + h @ U
            i = _sigmoid(z[:, :H])
            f = _sigmoid(z[:, H:2 * H])
            g = np.tanh(z[:, 2 * H:3 * H])
            o = _sigmoid(z[:, 3 * H:])
            c_prev, h_prev = c, h
            c = f * c_prev + i * g
            tc = np.tanh(c)
            h = o * tc
            hs[:, t] = h
            if ctx.cache:
                steps.append((i, f, g, o, c_prev, h_prev, tc))
        out_seq = hs[:, ::-1] if self.reverse else hs
        y = out_seq if self.return_sequences else h
        cache = (xs, steps) if ctx.cache else None
        return np.ascontiguousarray(y), cache

    def backward(self, cache, grad_out):
        xs, steps = require_cache(cache, self)
        W, U = self.params["W"], self.params["U"]
        n, T, _ = xs.shape
        H = self.hidden
        if self.return_sequences:
            dhs = grad_out[:, ::-1] if self.reverse else grad_out
        else:
            dhs = np.zeros((n, T, H), dtype=grad_out.dtype)
            dhs[:, -1] = grad_out
        dz_all = np.empty((n, T, 4 * H), dtype=np.result_type(grad_out, W))
        dU = np.zeros_like(U, dtype=dz_all.dtype)
        dh_next = np.zeros((n, H), dtype=dz_all.dtype)
        dc_next = np.zeros((n, H), dtype=dz_all.dtype)
        for t in range(T - 1, -1, -1):
            i, f, g, o, c_prev, h_prev, tc = steps[t]
            dh = dhs[:, t] + dh_next
            do = dh * tc
            dc = dc_next + dh * o * (1 - tc * tc)
            di = dc * g
            dg = dc * i
            df = dc * c_prev
            dc_next = dc * f
            dz = dz_all[:, t]
            dz[:, :H] = di * i * (1 - i)
            dz[:, H:2 * H] = df * f * (1 - f)
            dz[:, 2 * H:3 * H] = dg * (1 - g * g)
            dz[:, 3 * H:] = do * o * (1 - o)
            dU += h_prev.T @ dz
            dh_next = dz @ U.T
        dW = xs.reshape(-1, self.input_size).T @ dz_all.reshape(-1, 4 * H)
        db = dz_all.sum(axis=(0, 1))
        dxs = dz_all @ W.T
        dx = dxs[:, ::-1] if self.reverse else dxs
        return np.ascontiguousarray(dx), {"W": dW, "U": dU, "b": db}

    def describe(self):
        return f"{'reverse_' if self.reverse else ''}lstm({self.hidden})"


class BiLSTM(Layer):
    """Forward and backward LSTMs concatenated on the feature axis.

    With ``return_sequences=False`` the output is the forward pass's final
    state followed by the backward pass's final state.
    """

    kind = "bilstm"

    def __init__(self, input_size, hidden=256, return_sequences=False, rng=None, dtype=None,
                 fwd: LSTM | None = None, bwd: LSTM | None = None):
        super().__init__()
        self.fwd = fwd or LSTM(input_size, hidden, False, return_sequences, rng, dtype)
        self.bwd = bwd or LSTM(input_size, hidden, True, return_sequences, rng, dtype)
        if self.fwd.hidden != self.bwd.hidden:
            raise ConfigError(f"bilstm: hidden sizes differ ({self.fwd.hidden} vs {self.bwd.hidden})")
        if self.fwd.return_sequences != self.bwd.return_sequences:
            raise ConfigError("bilstm: both directions must agree on return_sequences")
        self.bwd.reverse = True
        self.fwd.reverse = False
        self.hidden = self.fwd.hidden
        self.return_sequences = self.fwd.return_sequences

    def children(self):
        return [("fwd", self.fwd), ("bwd", self.bwd)]

    def output_shape(self, in_shape):
        s = self.fwd.output_shape(in_shape)
        return (*s[:-1], 2 * self.hidden)

    def forward(self, x, ctx: Context = EVAL):
        yf, cf = self.fwd.forward(x, ctx)
        yb, cb = self.bwd.forward(x, ctx)
        return np.concatenate([yf, yb], axis=-1), ((cf, cb) if ctx.cache else None)

    def backward(self, cache, grad_out):
        cf, cb = require_cache(cache, self)
        H = self.hidden
        dxf, gf = self.fwd.backward(cf, grad_out[..., :H])
        dxb, gb = self.bwd.backward(cb, grad_out[..., H:])
        grads = merge_grads({}, gf, "fwd.")
        merge_grads(grads, gb, "bwd.")
        return dxf + dxb, grads

    def describe(self):
        return f"bilstm({self.hidden})"


def lstm_forward(layer: LSTM, xs: np.ndarray, direction: str = "forward"):
    """Run ``layer`` on an unbatched (T, D) sequence.

    Returns per-step hidden states (T, H) in original time order and the
    final (h, c) state.
    """
    if direction not in ("forward", "backward"):
        raise ConfigError(f"direction must be 'forward' or 'backward', got {direction!r}")
    saved = (layer.reverse, layer.return_sequences)
    layer.reverse, layer.return_sequences = direction == "backward", True
    try:
        hs, (xs_, steps) = layer.forward(xs[None], Context(cache=True))
    finally:
        layer.reverse, layer.return_sequences = saved
    i, f, g, o, c_prev, _, _ = steps[-1]
    c_final = f * c_prev + i * g
    h_final = hs[0, 0] if direction == "backward" else hs[0, -1]
    return hs[0], (h_final, c_final[0])


def bilstm_forward(fwd: LSTM, bwd: LSTM, xs: np.ndarray) -> np.ndarray:
    """(T, D) -> (T, 2H) concatenation of both directions per step."""
    if fwd.hidden != bwd.hidden:
        raise ConfigError(f"bilstm: hidden sizes differ ({fwd.hidden} vs {bwd.hidden})")
    hf, _ = lstm_forward(fwd, xs, "forward")
    hb, _ = lstm_forward(bwd, xs, "backward")
    return np.concatenate([hf, hb], axis=-1)


class ConvLSTMCell(Layer):
    """One step of the convolutional LSTM with Hadamard peepholes.

    Gate pre-activations are same-padded convolutions of the input and the
    previous hidden state; peephole weights have the cell-state shape
    (H, W, F) and enter element-wise.
    """

    kind = "convlstm_cell"

    def __init__(self, in_channels, filters=32, kernel=3, spatial=(90, 90), rng=None, dtype=None,
                 forget_bias=1.0):
        super().__init__()
        dtype = dtype or default_dtype()
        rng = rng or np.random.default_rng(0)
        self.in_channels, self.filters, self.kernel = in_channels, filters, kernel
        self.spatial = tuple(spatial)
        F = filters
        rf = kernel * kernel
        self.params["Wx"] = glorot(rng, (kernel, kernel, in_channels, 4 * F), rf * in_channels, rf * 4 * F, dtype)
        self.params["Wh"] = glorot(rng, (kernel, kernel, F, 4 * F), rf * F, rf * 4 * F, dtype)
        for name in ("wci", "wcf", "wco"):
            self.params[name] = np.zeros((*self.spatial, F), dtype=dtype)
        b = np.zeros(4 * F, dtype=dtype)
        b[F:2 * F] = forget_bias
        self.params["b"] = b

    def _check(self, x, h, c):
        want = (*self.spatial, self.filters)
        if x.ndim != 4 or x.shape[1:] != (*self.spatial, self.in_channels):
            raise ShapeError(f"convlstm: input {x.shape[1:]} incompatible with {(*self.spatial, self.in_channels)}")
        if h.shape[1:] != want or c.shape[1:] != want:
            raise ShapeError(f"convlstm: state shapes {h.shape[1:]}, {c.shape[1:]} != {want}")

    def step_forward(self, x, h_prev, c_prev, keep_cache=True):
        """One recurrence step on batched (N, H, W, C) tensors -> (h, c, cache)."""
        self._check(x, h_prev, c_prev)
        p = self.params
        F = self.filters
        zx, cx = conv_nd(x, p["Wx"], p["b"], "same", 1, keep_cache)
        zh, ch = conv_nd(h_prev, p["Wh"], None, "same", 1, keep_cache)
        z = zx + zh
        i = _sigmoid(z[..., :F] + p["wci"] * c_prev)
        f = _sigmoid(z[..., F:2 * F] + p["wcf"] * c_prev)
        g = np.tanh(z[..., 2 * F:3 * F])
        c = f * c_prev + i * g
        o = _sigmoid(z[..., 3 * F:] + p["wco"] * c)
        tc = np.tanh(c)
        h = o * tc
        cache = (cx, ch, i, f, g, o, c_prev, c, tc) if keep_cache else None
        return h, c, cache

    def step_backward(self, cache, dh, dc):
        """Gradients of one step given dL/dh_t and dL/dc_t (from later steps)."""
        cx, ch, i, f, g, o, c_prev, c, tc = require_cache(cache, self)
        p = self.params
        do = dh * tc
        dzo = do * o * (1 - o)
        dc = dc + dh * o * (1 - tc * tc) + dzo * p["wco"]
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dzi = di * i * (1 - i)
        dzf = df * f * (1 - f)
        dzg = dg * (1 - g * g)
        dc_prev = dc * f + dzi * p["wci"] + dzf * p["wcf"]
        dz = np.concatenate([dzi, dzf, dzg, dzo], axis=-1)
        dx, dWx, db = conv_nd_backward(cx, dz)
        dh_prev, dWh, _ = conv_nd_backward(ch, dz, with_bias=False)
        grads = {
            "Wx": dWx,
            "Wh": dWh,
            "b": db,
            "wci": (dzi * c_prev).sum(axis=0),
            "wcf": (dzf * c_prev).sum(axis=0),
            "wco": (dzo * c).sum(axis=0),
        }
        return dx, dh_prev, dc_prev, grads

    def forward(self, x, ctx: Context = EVAL):
        """Single step from zero state; returns h."""
        z = np.zeros((x.shape[0], *self.spatial, self.filters), dtype=x.dtype)
        h, c, cache = self.step_forward(x, z, z, ctx.cache)
        return h, cache

    def backward(self, cache, grad_out):
        dx, _, _, grads = self.step_backward(cache, grad_out, np.zeros_like(grad_out))
        return dx, grads


def convlstm_cell_step(cell: ConvLSTMCell, x_t, h_prev, c_prev):
    """Unbatched step: (H, W, C), (H, W, F), (H, W, F) -> (h_t, c_t)."""
    h, c, _ = cell.step_forward(x_t[None], h_prev[None], c_prev[None], keep_cache=False)
    return h[0], c[0]


class ConvLSTM(Layer):
    """Convolutional LSTM over (N, T, H, W, C).

    Returns the final hidden state (N, H, W, F), or every step when
    ``return_sequences`` is set.
    """

    kind = "convlstm"

    def __init__(self, in_channels, filters=32, kernel=3, spatial=(90, 90), return_sequences=False,
                 rng=None, dtype=None):
        super().__init__()
        self.cell = ConvLSTMCell(in_channels, filters, kernel, spatial, rng, dtype)
        self.return_sequences = return_sequences

    def children(self):
        return [("cell", self.cell)]

    def output_shape(self, in_shape):
        t, *rest = in_shape
        if tuple(rest) != (*self.cell.spatial, self.cell.in_channels):
            raise ShapeError(f"convlstm: frame shape {tuple(rest)} != {(*self.cell.spatial, self.cell.in_channels)}")
        out = (*self.cell.spatial, self.cell.filters)
        return (t, *out) if self.return_sequences else out

    def forward(self, x, ctx: Context = EVAL):
        if x.ndim != 5:
            raise ShapeError(f"convlstm expects (N, T, H, W, C), got {x.shape}")
        n, T = x.shape[:2]
        h = np.zeros((n, *self.cell.spatial, self.cell.filters), dtype=np.result_type(x, self.cell.params["Wx"]))
        c = h
        hs, caches = [], []
        for t in range(T):
            h, c, cc = self.cell.step_forward(x[:, t], h, c, ctx.cache)
            caches.append(cc)
            if self.return_sequences:
                hs.append(h)
        y = np.stack(hs, axis=1) if self.return_sequences else h
        return y, (caches if ctx.cache else None)

    def backward(self, cache, grad_out):
        caches = require_cache(cache, self)
        T = len(caches)
        dh_next = np.zeros_like(grad_out[:, 0] if self.return_sequences else grad_out)
        dc_next = np.zeros_like(dh_next)
        grads: dict = {}
        dxs = [None] * T
        for t in range(T - 1, -1, -1):
            dh = dh_next + (grad_out[:, t] if self.return_sequences else (grad_out if t == T - 1 else 0))
            dxs[t], dh_next, dc_next, g = self.cell.step_backward(caches[t], dh, dc_next)
            merge_grads(grads, g, "cell.")
        return np.stack(dxs, axis=1), grads

    def describe(self):
        return f"convlstm({self.cell.filters},{self.cell.kernel}x{self.cell.kernel},same)"
