"""The five classifier blueprints and the Model wrapper."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, ShapeError, UsageError
from ..layers import (
    Activation,
    BiLSTM,
    Context,
    Conv2D,
    Conv3D,
    ConvLSTM,
    Dense,
    Dropout,
    EncoderBlock,
    Flatten,
    MaxPool,
    PositionalEncoding,
    Sequential,
    TemporalMeanPool,
    TimeDistributed,
)
from ..layers.base import merge_grads
from ..tensor import default_dtype, precision, rng_stream
from .config import ModelConfig

VGG_BLOCKS = (2, 2, 3, 3, 3)


def _he_rescale(conv: Conv2D) -> Conv2D:
    """Stretch a Glorot-uniform kernel to the He-uniform range sqrt(6 / fan_in)."""
    W = conv.params["W"]
    rf = W.shape[0] * W.shape[1]
    fan_in, fan_out = rf * W.shape[2], rf * W.shape[3]
    W *= W.dtype.type(np.sqrt((fan_in + fan_out) / fan_in))
    return conv


def _backbone_conv(cfg, cin, cout, padding, rng, dtype):
    conv = Conv2D(cin, cout, 3, padding, activation="relu", rng=rng, dtype=dtype)
    return _he_rescale(conv) if cfg.backbone_init == "he" else conv


def custom_cnn(cfg: ModelConfig, rng, dtype) -> Sequential:
    layers, names = [], []
    c = cfg.channels
    for i, f in enumerate(cfg.cnn_filters, 1):
        layers += [_backbone_conv(cfg, c, f, "valid", rng, dtype), MaxPool((2, 2))]
        names += [f"conv{i}", f"pool{i}"]
        c = f
    return Sequential(layers + [Flatten()], names + ["flatten"])


def vgg_backbone(cfg: ModelConfig, rng, dtype) -> Sequential:
    """VGG-16 convolutional stack without the classifier top."""
    layers, names = [], []
    c = cfg.channels
    for b, (n_conv, width) in enumerate(zip(VGG_BLOCKS, cfg.vgg_widths), 1):
        for k in range(1, n_conv + 1):
            layers.append(_backbone_conv(cfg, c, width, "same", rng, dtype))
            names.append(f"block{b}_conv{k}")
            c = width
        if b <= cfg.vgg_pool_blocks:
            layers.append(MaxPool((2, 2)))
            names.append(f"block{b}_pool")
    return Sequential(layers + [Flatten()], names + ["flatten"])


def _blueprint(cfg: ModelConfig, rng, dtype):
    T, H, W, C = cfg.input_shape
    v = cfg.variant
    if v == "ConvLSTM":
        return [
            ("convlstm", ConvLSTM(C, cfg.convlstm_filters, cfg.convlstm_kernel, (H, W), rng=rng, dtype=dtype)),
            ("pool", MaxPool((2, 2))),
            ("flatten", Flatten()),
            ("fc_out", None),
            ("softmax", Activation("softmax")),
        ]
    if v == "C3D":
        f1, f2 = cfg.c3d_filters
        return [
            ("conv1", Conv3D(C, f1, 3, "valid", activation="relu", rng=rng, dtype=dtype)),
            ("pool1", MaxPool(cfg.c3d_pool)),
            ("conv2", Conv3D(f1, f2, 3, "valid", activation="relu", rng=rng, dtype=dtype)),
            ("pool2", MaxPool(cfg.c3d_pool)),
            ("flatten", Flatten()),
            ("fc1", ("dense", cfg.head_hidden)),
            ("relu", Activation("relu")),
            ("dropout", Dropout(cfg.dropout)),
            ("fc_out", None),
            ("softmax", Activation("softmax")),
        ]
    if v == "LRCN_CustomCNN":
        return [
            ("backbone", TimeDistributed(custom_cnn(cfg, rng, dtype))),
            ("bilstm", ("bilstm", cfg.lstm_hidden)),
            ("fc_out", None),
            ("softmax", Activation("softmax")),
        ]
    if v == "LRCN_VGG":
        return [
            ("backbone", TimeDistributed(vgg_backbone(cfg, rng, dtype))),
            ("bilstm", ("bilstm", cfg.lstm_hidden)),
            ("fc1", ("dense", cfg.head_hidden)),
            ("relu", Activation("relu")),
            ("fc_out", None),
            ("softmax", Activation("softmax")),
        ]
    if v == "CNN_Transformer":
        items = [
            ("backbone", TimeDistributed(custom_cnn(cfg, rng, dtype))),
            ("embed", ("dense", cfg.d_model)),
            ("position", PositionalEncoding(T, cfg.d_model)),
        ]
        for i in range(1, cfg.encoder_blocks + 1):
            items.append((f"encoder{i}", EncoderBlock(cfg.d_model, cfg.heads, cfg.d_ff, rng, dtype)))
        return items + [
            ("pool", TemporalMeanPool()),
            ("fc_out", None),
            ("softmax", Activation("softmax")),
        ]
    raise ConfigError(f"unknown variant {v!r}")


def build_network(cfg: ModelConfig, seed: int = 0, dtype=None) -> Sequential:
    """Instantiate the variant's layer graph, propagating shapes as it goes.

    Placeholder entries (dense/bilstm sizes, the 2-way output) are resolved
    once the incoming feature size is known.
    """
    cfg.validate()
    dtype = np.dtype(dtype or default_dtype())
    rng = rng_stream(seed, "init")
    layers, names = [], []
    shape = cfg.input_shape
    for name, spec in _blueprint(cfg, rng, dtype):
        if spec is None:
            spec = Dense(shape[-1], cfg.classes, rng, dtype)
        elif isinstance(spec, tuple):
            kind, size = spec
            if kind == "dense":
                spec = Dense(shape[-1], size, rng, dtype)
            else:
                spec = BiLSTM(shape[-1], size, return_sequences=False, rng=rng, dtype=dtype)
        try:
            shape = spec.output_shape(shape)
        except ShapeError as exc:
            raise ConfigError(f"{cfg.variant}: layer {name!r} cannot accept its input ({exc})") from exc
        layers.append(spec)
        names.append(name)
    return Sequential(layers, names)


class Model:
    """A built variant: layer graph, parameter registry and train/eval mode."""

    def __init__(self, config: ModelConfig, net: Sequential, seed: int = 0):
        self.config = config
        self.net = net
        self.seed = seed
        self.mode = "eval"

    # registry -----------------------------------------------------------
    def parameters(self) -> dict[str, np.ndarray]:
        return dict(self.net.named_parameters())

    def count_parameters(self) -> int:
        return count_parameters(self)

    def blueprint(self) -> list[str]:
        return [layer.describe() for layer in self.net.layers]

    @property
    def dtype(self):
        for _, p in self.net.named_parameters():
            return p.dtype
        return default_dtype()

    def astype(self, dtype) -> "Model":
        """Copy of the model with every parameter cast to ``dtype``."""
        with precision(dtype):
            other = build_model(self.config, self.seed)
        for (name, dst), (_, src) in zip(other.net.named_parameters(), self.net.named_parameters()):
            dst[...] = src
        other.mode = self.mode
        return other

    # mode ---------------------------------------------------------------
    def train(self) -> "Model":
        self.mode = "train"
        return self

    def eval(self) -> "Model":
        self.mode = "eval"
        return self

    # compute ------------------------------------------------------------
    def _check_batch(self, batch):
        if batch.ndim != 5 or tuple(batch.shape[1:]) != self.config.input_shape:
            raise ShapeError(
                f"{self.config.variant}: batch shape {tuple(batch.shape)} does not match "
                f"(B, {', '.join(map(str, self.config.input_shape))})"
            )

    def forward(self, batch: np.ndarray, rng=None, cache=False):
        """Class probabilities (B, 2); returns (probs, cache) when ``cache``."""
        self._check_batch(batch)
        if self.mode == "train" and rng is None:
            raise UsageError("train-mode forward needs a generator for dropout")
        x = batch.astype(self.dtype, copy=False)
        ctx = Context(train=self.mode == "train", rng=rng, cache=cache)
        probs, c = self.net.forward(x, ctx)
        return (probs, c) if cache else probs

    def predict(self, batch: np.ndarray) -> np.ndarray:
        """Eval-mode probabilities regardless of the current mode."""
        self._check_batch(batch)
        probs, _ = self.net.forward(batch.astype(self.dtype, copy=False), Context(train=False, cache=False))
        return probs

    def backward(self, cache, grad_probs) -> dict[str, np.ndarray]:
        if cache is None:
            raise UsageError("backward needs the cache from forward(..., cache=True)")
        _, grads = self.net.backward(cache, grad_probs)
        return merge_grads({}, grads)

    # convenience ---------------------------------------------------------
    def feature_extractor(self) -> Sequential | None:
        """The per-frame 2-D CNN, when the variant has one."""
        first = self.net.layers[0]
        if isinstance(first, TimeDistributed) and isinstance(first.layer, Sequential):
            return first.layer
        return None

    def __repr__(self):
        return f"Model({self.config.variant}, params={self.count_parameters()})"


def build_model(cfg: ModelConfig, seed: int = 0) -> Model:
    return Model(cfg, build_network(cfg, seed), seed)


def model_forward(model: Model, batch: np.ndarray) -> np.ndarray:
    return model.predict(batch)


def count_parameters(model) -> int:
    """Total scalar parameters in a Model, Layer, or name->tensor mapping."""
    if isinstance(model, Model):
        params = model.parameters().values()
    elif isinstance(model, dict):
        params = model.values()
    elif model is None:
        return 0
    else:
        params = (p for _, p in model.named_parameters())
    return int(sum(int(np.prod(p.shape)) for p in params))
