"""Per-channel feature-map images from the per-frame CNN."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..data.preprocess import normalize, resize_bilinear
from ..errors import ShapeError, UsageError
from ..layers.base import EVAL
from ..layers.conv import Conv2D


def to_uint8_map(fmap: np.ndarray) -> np.ndarray:
    """Min-max scale a 2-D map to 0..255; constant maps become all zeros."""
    fmap = np.asarray(fmap, dtype=np.float64)
    lo, hi = fmap.min(), fmap.max()
    if not hi > lo:
        return np.zeros(fmap.shape, dtype=np.uint8)
    return np.rint((fmap - lo) / (hi - lo) * 255.0).astype(np.uint8)


def _resolve(extractor, layers):
    out = []
    for ref in layers:
        if isinstance(ref, str):
            if ref not in extractor.names:
                raise UsageError(f"no layer named {ref!r}; available: {', '.join(extractor.names)}")
            i = extractor.names.index(ref)
        else:
            i = int(ref)
            if not 0 <= i < len(extractor.layers):
                raise UsageError(f"layer index {i} out of range 0..{len(extractor.layers) - 1}")
        if not isinstance(extractor.layers[i], Conv2D):
            raise UsageError(f"layer {i} ({extractor.names[i]}) is {extractor.layers[i].describe()}, not a convolution")
        out.append(i)
    return out


def dump_feature_maps(model, frame: np.ndarray, layers) -> dict[str, list[np.ndarray]]:
    """Run one frame through the per-frame CNN and return its conv outputs.

    ``layers`` holds extractor positions (0-based) or layer names. The result
    maps each layer name to one uint8 (h, w) image per output channel. A
    uint8 frame is resized and normalized first; a float frame is used as is.
    """
    extractor = model.feature_extractor()
    if extractor is None:
        raise UsageError(f"{model.config.variant} has no per-frame CNN to inspect")
    wanted = _resolve(extractor, layers)
    frame = np.asarray(frame)
    size = (model.config.height, model.config.width)
    if frame.dtype == np.uint8:
        frame = normalize(resize_bilinear(frame, size)) if frame.shape[:2] != size else normalize(frame)
    if frame.shape != (*size, model.config.channels):
        raise ShapeError(f"frame shape {frame.shape} does not match {(*size, model.config.channels)}")
    x = frame.astype(model.dtype)[None]
    maps = {}
    for i, layer in enumerate(extractor.layers[: max(wanted) + 1]):
        x, _ = layer.forward(x, EVAL)
        if i in wanted:
            maps[extractor.names[i]] = [to_uint8_map(x[0, ..., ch]) for ch in range(x.shape[-1])]
    return maps


def write_pgm(path, image: np.ndarray) -> None:
    """Binary (P5) 8-bit grayscale image."""
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(image, dtype=np.uint8).tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h = int(parts[1]), int(parts[2])
    return np.frombuffer(parts[4][: w * h], dtype=np.uint8).reshape(h, w)


def save_feature_maps(maps: dict, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, images in maps.items():
        for ch, img in enumerate(images):
            p = out / f"{name}_ch{ch:03d}.pgm"
            write_pgm(p, img)
            written.append(p)
    return written
