"""Frame sampling, resizing, normalization and label encoding."""

from __future__ import annotations

import numpy as np

from ..errors import EmptyClipError, LabelError, ShapeError

CLIP_FRAMES = 25
FRAME_SIZE = (90, 90)
CLASS_NAMES = ("nonviolent", "violent")


def sample_frame_indices(total: int, n: int = CLIP_FRAMES) -> list[int]:
    """Uniform-stride indices floor(i * total / n); repeats frames when total < n."""
    if total < 1:
        raise EmptyClipError("clip has no frames")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return [i * total // n for i in range(n)]


def _axis_weights(n_in: int, n_out: int):
    scale = n_in / n_out
    src = (np.arange(n_out) + 0.5) * scale - 0.5
    src = np.clip(src, 0, n_in - 1)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, src - lo


def resize_bilinear(frame: np.ndarray, out=FRAME_SIZE) -> np.ndarray:
    """Bilinear resize of (H, W, C) with half-pixel centres, float64 output."""
    if frame.ndim != 3 or min(frame.shape[:2]) < 1:
        raise ShapeError(f"resize expects an (H, W, C) frame, got {frame.shape}")
    oh, ow = out
    f = frame.astype(np.float64, copy=False)
    lo, hi, w = _axis_weights(frame.shape[0], oh)
    rows = f[lo] * (1 - w)[:, None, None] + f[hi] * w[:, None, None]
    lo, hi, w = _axis_weights(frame.shape[1], ow)
    return rows[:, lo] * (1 - w)[None, :, None] + rows[:, hi] * w[None, :, None]


def normalize(frame: np.ndarray) -> np.ndarray:
    """Map 8-bit intensities to [0, 1] as float32."""
    return (np.asarray(frame, dtype=np.float64) / 255.0).astype(np.float32)


def one_hot(label: int, classes: int = 2) -> np.ndarray:
    if not 0 <= int(label) < classes:
        raise LabelError(f"label {label} outside [0, {classes})")
    v = np.zeros(classes, dtype=np.float32)
    v[int(label)] = 1.0
    return v


def preprocess_frames(frames: np.ndarray, size=FRAME_SIZE) -> np.ndarray:
    """Resize and normalize every frame of a (T, H, W, 3) stack."""
    if frames.ndim != 4:
        raise ShapeError(f"expected (T, H, W, C) frames, got {frames.shape}")
    if frames.shape[1:3] == tuple(size):
        return normalize(frames)
    return np.stack([normalize(resize_bilinear(f, size)) for f in frames])


def preprocess_clip(frames: np.ndarray, n: int = CLIP_FRAMES, size=FRAME_SIZE) -> np.ndarray:
    """Sample ``n`` frames, resize to ``size`` and normalize: (n, *size, C) float32."""
    if frames.ndim != 4:
        raise ShapeError(f"expected (T, H, W, C) frames, got {frames.shape}")
    idx = sample_frame_indices(frames.shape[0], n)
    return preprocess_frames(frames[idx], size)
