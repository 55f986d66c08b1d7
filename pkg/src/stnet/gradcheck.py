"""Finite-difference verification of every layer's backward pass.

Each case builds a small float64 layer with randomized parameters, projects
its output onto a fixed random tensor R (loss = sum(y * R)) and compares the
analytic gradients of that loss against central differences for the input
and every parameter.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .layers import (
    Activation,
    BiLSTM,
    Context,
    Conv2D,
    Conv3D,
    ConvLSTM,
    ConvLSTMCell,
    Dense,
    Dropout,
    EncoderBlock,
    Flatten,
    LayerNorm,
    LSTM,
    MaxPool,
    MultiHeadAttention,
    PositionalEncoding,
    Sequential,
    TemporalMeanPool,
    TimeDistributed,
    feed_forward,
)
from .layers.attention import scaled_dot_attention, scaled_dot_attention_backward
from .tensor import finite_difference_gradient, precision

EPS = 1e-5
TOL = 1e-4
EXEMPT = 1e-8


@dataclass
class GradCheckResult:
    name: str
    seed: int
    max_rel_error: float
    worst: str
    checked: int
    seconds: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= TOL


def relative_error(analytic, numeric):
    """Element-wise |a - n| / (|a| + |n|), with tiny pairs reported as 0."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    denom = np.abs(a) + np.abs(n)
    err = np.zeros_like(denom)
    mask = denom >= EXEMPT
    err[mask] = np.abs(a - n)[mask] / denom[mask]
    return err


def check(name, seed, tensors: dict, forward: Callable, backward: Callable, eps=EPS) -> GradCheckResult:
    """Generic checker.

    ``forward()`` returns (y, cache) reading the arrays in ``tensors``;
    ``backward(cache, R)`` returns analytic gradients keyed like ``tensors``.
    """
    t0 = time.perf_counter()
    y, cache = forward()
    R = np.random.default_rng(seed + 7919).standard_normal(y.shape)
    analytic = backward(cache, R)
    missing = set(tensors) - set(analytic)
    if missing:
        raise AssertionError(f"{name}: no gradient for {sorted(missing)}")

    def loss(_):
        return float(np.sum(forward()[0] * R))

    worst, where, count = 0.0, "", 0
    for key, arr in tensors.items():
        numeric = finite_difference_gradient(loss, arr, eps)
        err = relative_error(analytic[key], numeric)
        count += err.size
        if err.size and err.max() > worst:
            worst, where = float(err.max()), key
    return GradCheckResult(name, seed, worst, where, count, time.perf_counter() - t0)


def _randomize(layer, rng, scale=0.5):
    for _, p in layer.named_parameters():
        p[...] = rng.standard_normal(p.shape) * scale


def check_layer(name, layer, x, seed, ctx_factory=None) -> GradCheckResult:
    ctx_factory = ctx_factory or (lambda: Context(train=False))
    params = dict(layer.named_parameters())
    tensors = {"input": x, **params}

    def forward():
        return layer.forward(x, ctx_factory())

    def backward(cache, R):
        dx, grads = layer.backward(cache, R)
        return {"input": dx, **grads}

    return check(name, seed, tensors, forward, backward)


# --- cases -----------------------------------------------------------------

def _case_conv2d(seed):
    rng = np.random.default_rng(seed)
    layer = Sequential([
        Conv2D(2, 3, 3, "valid", rng=rng),
        Conv2D(3, 2, 2, "same", stride=2, activation="relu", rng=rng),
    ])
    _randomize(layer, rng)
    return check_layer("conv2d", layer, rng.standard_normal((2, 6, 5, 2)), seed)


def _case_conv3d(seed):
    rng = np.random.default_rng(seed)
    layer = Sequential([
        Conv3D(2, 2, 2, "valid", rng=rng),
        Conv3D(2, 2, 3, "same", activation="relu", rng=rng),
    ])
    _randomize(layer, rng)
    return check_layer("conv3d", layer, rng.standard_normal((1, 4, 4, 5, 2)), seed)


def _case_maxpool(seed):
    rng = np.random.default_rng(seed)
    a = check_layer("maxpool2d", MaxPool((2, 2)), rng.standard_normal((2, 5, 4, 3)), seed)
    b = check_layer("maxpool3d", MaxPool((2, 2, 2)), rng.standard_normal((1, 4, 5, 4, 2)), seed)
    return _combine("maxpool", seed, a, b)


def _case_dense(seed):
    rng = np.random.default_rng(seed)
    layer = Dense(5, 3, rng=rng)
    _randomize(layer, rng)
    return check_layer("dense", layer, rng.standard_normal((4, 5)), seed)


def _case_activations(seed):
    rng = np.random.default_rng(seed)
    results = [
        check_layer(f"activation:{k}", Activation(k), rng.standard_normal((3, 6)), seed)
        for k in ("relu", "sigmoid", "tanh", "softmax")
    ]
    results.append(check_layer("flatten", Flatten(), rng.standard_normal((2, 3, 2, 2)), seed))
    results.append(check_layer("mean_pool_time", TemporalMeanPool(), rng.standard_normal((2, 4, 3)), seed))
    return _combine("activations", seed, *results)


def _case_dropout(seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((3, 8))
    return check_layer(
        "dropout", Dropout(0.5), x, seed,
        ctx_factory=lambda: Context(train=True, rng=np.random.default_rng(seed)),
    )


def _case_time_distributed(seed):
    rng = np.random.default_rng(seed)
    inner = Sequential([Conv2D(2, 2, 3, "valid", activation="relu", rng=rng), MaxPool((2, 2)), Flatten()])
    layer = TimeDistributed(inner)
    _randomize(layer, rng)
    return check_layer("time_distributed", layer, rng.standard_normal((2, 3, 6, 6, 2)), seed)


def _case_lstm_step(seed):
    rng = np.random.default_rng(seed)
    layer = LSTM(3, 4, rng=rng)
    _randomize(layer, rng)
    return check_layer("lstm_step", layer, rng.standard_normal((2, 1, 3)), seed)


def _case_lstm(seed):
    rng = np.random.default_rng(seed)
    fwd = LSTM(3, 4, rng=rng)
    rev = LSTM(3, 4, reverse=True, return_sequences=False, rng=rng)
    _randomize(fwd, rng)
    _randomize(rev, rng)
    x = rng.standard_normal((2, 4, 3))
    return _combine("lstm", seed, check_layer("lstm", fwd, x, seed), check_layer("lstm_rev", rev, x, seed))


def _case_bilstm(seed):
    rng = np.random.default_rng(seed)
    seq = BiLSTM(3, 3, return_sequences=True, rng=rng)
    last = BiLSTM(3, 3, return_sequences=False, rng=rng)
    _randomize(seq, rng)
    _randomize(last, rng)
    x = rng.standard_normal((2, 4, 3))
    return _combine("bilstm", seed, check_layer("bilstm_seq", seq, x, seed), check_layer("bilstm", last, x, seed))


def _case_convlstm_cell(seed):
    rng = np.random.default_rng(seed)
    cell = ConvLSTMCell(1, 2, 3, spatial=(2, 2), rng=rng)
    _randomize(cell, rng)
    x = rng.standard_normal((1, 2, 2, 1))
    h = rng.standard_normal((1, 2, 2, 2)) * 0.5
    c = rng.standard_normal((1, 2, 2, 2)) * 0.5
    params = dict(cell.named_parameters())

    def forward():
        h_t, c_t, cache = cell.step_forward(x, h, c)
        return np.concatenate([h_t, c_t], axis=-1), cache

    def backward(cache, R):
        dx, dh, dc, grads = cell.step_backward(cache, R[..., :2], R[..., 2:])
        return {"x": dx, "h_prev": dh, "c_prev": dc, **grads}

    cell_res = check("convlstm_cell", seed, {"x": x, "h_prev": h, "c_prev": c, **params}, forward, backward)
    seq = ConvLSTM(2, 2, 3, spatial=(3, 3), rng=rng)
    _randomize(seq, rng)
    seq_res = check_layer("convlstm_seq", seq, rng.standard_normal((1, 3, 3, 3, 2)), seed)
    return _combine("convlstm", seed, cell_res, seq_res)


def _case_attention(seed):
    rng = np.random.default_rng(seed)
    Q = rng.standard_normal((2, 3, 4))
    K = rng.standard_normal((2, 5, 4))
    V = rng.standard_normal((2, 5, 3))

    def forward():
        out, w = scaled_dot_attention(Q, K, V, return_weights=True)
        return out, w

    def backward(w, R):
        dq, dk, dv = scaled_dot_attention_backward(Q, K, V, w, R)
        return {"Q": dq, "K": dk, "V": dv}

    return check("scaled_dot_attention", seed, {"Q": Q, "K": K, "V": V}, forward, backward)


def _case_mha(seed):
    rng = np.random.default_rng(seed)
    layer = MultiHeadAttention(4, 2, rng=rng)
    _randomize(layer, rng)
    return check_layer("mha", layer, rng.standard_normal((2, 5, 4)), seed)


def _case_encoder(seed):
    rng = np.random.default_rng(seed)
    block = EncoderBlock(4, 2, 6, rng=rng)
    _randomize(block, rng)
    ln = LayerNorm(4)
    _randomize(ln, rng)
    ffn = feed_forward(4, 5, rng=rng)
    _randomize(ffn, rng)
    pe = PositionalEncoding(3, 4)
    x = rng.standard_normal((2, 3, 4))
    return _combine(
        "encoder",
        seed,
        check_layer("encoder_block", block, x, seed),
        check_layer("layernorm", ln, x, seed),
        check_layer("feed_forward", ffn, x, seed),
        check_layer("positional_encoding", pe, x, seed),
    )


def _combine(name, seed, *results):
    worst = max(results, key=lambda r: r.max_rel_error)
    return GradCheckResult(
        name, seed, worst.max_rel_error, f"{worst.name}:{worst.worst}",
        sum(r.checked for r in results), sum(r.seconds for r in results),
    )


CASES: dict[str, Callable[[int], GradCheckResult]] = {
    "conv2d": _case_conv2d,
    "conv3d": _case_conv3d,
    "maxpool": _case_maxpool,
    "dense": _case_dense,
    "activations": _case_activations,
    "dropout": _case_dropout,
    "time_distributed": _case_time_distributed,
    "lstm_step": _case_lstm_step,
    "lstm": _case_lstm,
    "bilstm": _case_bilstm,
    "convlstm": _case_convlstm_cell,
    "scaled_dot_attention": _case_attention,
    "mha": _case_mha,
    "encoder_block": _case_encoder,
}


def run_suite(seeds=(0, 1, 2), names=None) -> list[GradCheckResult]:
    """Run every case in 64-bit mode for each seed."""
    out = []
    with precision(np.float64):
        for name in names or CASES:
            for seed in seeds:
                out.append(CASES[name](seed))
    return out
