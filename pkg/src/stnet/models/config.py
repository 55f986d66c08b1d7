"""Model configuration and the two standard presets."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from ..errors import ConfigError

VARIANTS = ("ConvLSTM", "LRCN_CustomCNN", "LRCN_VGG", "C3D", "CNN_Transformer")
FULL_INPUT = (25, 90, 90, 3)


@dataclass
class ModelConfig:
    variant: str
    frames: int = 25
    height: int = 90
    width: int = 90
    channels: int = 3
    classes: int = 2
    strict: bool = True
    # per-frame custom CNN (LRCN_CustomCNN, CNN_Transformer): conv3x3+relu+pool per entry
    cnn_filters: tuple = (16, 32, 64, 64)
    # VGG-16 backbone: 13 convs in blocks of (2, 2, 3, 3, 3)
    vgg_widths: tuple = (64, 128, 256, 512, 512)
    vgg_pool_blocks: int = 5
    # weight scale for per-frame CNN convolutions: "glorot" or "he" (fan-in only)
    backbone_init: str = "glorot"
    lstm_hidden: int = 256
    head_hidden: int = 256
    convlstm_filters: int = 32
    convlstm_kernel: int = 3
    c3d_filters: tuple = (64, 32)
    c3d_pool: tuple = (2, 2, 2)
    dropout: float = 0.5
    d_model: int = 128
    heads: int = 4
    d_ff: int = 256
    encoder_blocks: int = 2
    extras: dict = field(default_factory=dict)

    @property
    def input_shape(self) -> tuple:
        return (self.frames, self.height, self.width, self.channels)

    def validate(self) -> "ModelConfig":
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {', '.join(VARIANTS)}")
        if self.classes != 2:
            raise ConfigError(f"class count must be 2, got {self.classes}")
        if self.strict and self.input_shape != FULL_INPUT:
            raise ConfigError(f"strict mode requires input shape {FULL_INPUT}, got {self.input_shape}")
        if min(self.input_shape) < 1:
            raise ConfigError(f"input dimensions must be >= 1, got {self.input_shape}")
        if not 0 <= self.dropout < 1:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.d_model % self.heads:
            raise ConfigError(f"d_model {self.d_model} must be divisible by heads {self.heads}")
        if len(self.vgg_widths) != 5:
            raise ConfigError("vgg_widths needs one width per block (5)")
        if self.backbone_init not in ("glorot", "he"):
            raise ConfigError(f"backbone_init must be 'glorot' or 'he', got {self.backbone_init!r}")
        if not 0 <= self.vgg_pool_blocks <= 5:
            raise ConfigError("vgg_pool_blocks must be in 0..5")
        if len(self.c3d_filters) != 2:
            raise ConfigError("c3d_filters needs two entries")
        for name in ("lstm_hidden", "head_hidden", "convlstm_filters", "convlstm_kernel",
                     "d_model", "d_ff", "encoder_blocks"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        return self

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown model config keys: {sorted(unknown)}")
        kw = {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}
        return cls(**kw)

    def replace(self, **kw) -> "ModelConfig":
        return dataclasses.replace(self, **kw)


def full_config(variant: str) -> ModelConfig:
    """Full-size 25x90x90x3 configuration."""
    return ModelConfig(variant).validate()


def desk_config(variant: str) -> ModelConfig:
    """Reduced 16x24x24x3 configuration for laptop-scale training.

    Layer types match the full blueprint; widths shrink, the custom CNN keeps
    two of its four blocks and VGG keeps three of its five pools so the
    backbone still ends on a 3x3 grid. Backbone convolutions use He-uniform
    init: with the fan-in/fan-out rule the 13-conv VGG stack shrinks its
    activations about 4000x and the LRCN never leaves chance.
    """
    return ModelConfig(
        variant,
        frames=16,
        height=24,
        width=24,
        strict=False,
        cnn_filters=(16, 32),
        vgg_widths=(8, 16, 32, 32, 32),
        vgg_pool_blocks=3,
        backbone_init="he",
        lstm_hidden=32,
        head_hidden=32,
        convlstm_filters=8,
        c3d_filters=(16, 8),
        d_model=32,
        heads=4,
        d_ff=64,
    ).validate()


PRESETS = {"full": full_config, "desk": desk_config}
