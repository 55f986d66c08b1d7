"""Window-level classification over a long frame stream."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data.preprocess import preprocess_clip, preprocess_frames
from ..errors import InsufficientFramesError, UsageError


@dataclass(frozen=True)
class StreamWindowResult:
    start: int
    label: int
    probs: tuple

    def to_dict(self):
        return {"start": self.start, "label": self.label, "probs": list(self.probs)}


def window_starts(total: int, window: int, stride: int) -> list[int]:
    if window < 1 or stride < 1:
        raise UsageError(f"window and stride must be >= 1, got window={window}, stride={stride}")
    if total < window:
        raise InsufficientFramesError(f"stream has {total} frames but the window needs {window}")
    return list(range(0, total - window + 1, stride))


def sliding_window_classify(model, frames: np.ndarray, window: int | None = None, stride: int = 1,
                            batch_size: int = 8) -> list[StreamWindowResult]:
    """Classify windows ``[i*stride, i*stride + window)`` of a (T, H, W, C) uint8 stream.

    ``window`` defaults to the model's clip length. When it equals that length
    every frame is resized and normalized once and windows are slices of the
    result; otherwise each window is sampled down to the model's clip length
    exactly as a training clip would be.
    """
    cfg = model.config
    window = cfg.frames if window is None else int(window)
    starts = window_starts(len(frames), window, int(stride))
    size = (cfg.height, cfg.width)
    if window == cfg.frames:
        pre = preprocess_frames(frames, size)
        clip = lambda s: pre[s:s + window]  # noqa: E731
    else:
        clip = lambda s: preprocess_clip(frames[s:s + window], cfg.frames, size)  # noqa: E731
    results = []
    for b in range(0, len(starts), batch_size):
        chunk = starts[b:b + batch_size]
        probs = np.asarray(model.predict(np.stack([clip(s) for s in chunk])), dtype=np.float64)
        for s, p in zip(chunk, probs):
            results.append(StreamWindowResult(s, int(np.argmax(p)), tuple(float(v) for v in p)))
    return results
