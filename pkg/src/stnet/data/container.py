"""Raw frame container (``STNETFRM``) and the frame-sequence record.

Layout (little-endian)::

    magic    8 bytes  b"STNETFRM"
    version  u32      (currently 1)
    T, H, W, C        4 x u32
    label    i32      0 nonviolent, 1 violent, -1 unlabeled
    fps      f64
    clip id  u32 length + UTF-8
    frames   T*H*W*C bytes, uint8, time-major then row-major (RGB24 per pixel)

This is also the hand-off format for external decoders: any tool that emits
raw RGB24 frames can be wrapped with :func:`frames_from_raw` and written here.
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from ..errors import FormatError, IntegrityError, LabelError, ShapeError

MAGIC = b"STNETFRM"
VERSION = 1
_HEADER = struct.Struct("<8sI4IidI")


@dataclass
class FrameSequence:
    frames: np.ndarray
    label: int | None = None
    clip_id: str = ""
    fps: float = 30.0

    def __post_init__(self):
        if self.frames.ndim != 4 or self.frames.shape[0] < 1:
            raise ShapeError(f"frames must be (T >= 1, H, W, C), got {self.frames.shape}")
        if self.label is not None and self.label not in (0, 1):
            raise LabelError(f"label must be 0 (nonviolent) or 1 (violent), got {self.label}")

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]


def write_frame_container(seq: FrameSequence, path) -> None:
    frames = np.ascontiguousarray(seq.frames)
    if frames.dtype != np.uint8:
        raise FormatError(f"container stores uint8 frames, got {frames.dtype}")
    t, h, w, c = frames.shape
    cid = seq.clip_id.encode("utf-8")
    label = -1 if seq.label is None else int(seq.label)
    header = _HEADER.pack(MAGIC, VERSION, t, h, w, c, label, float(seq.fps), len(cid))
    path = os.fspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)), suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header + cid + frames.tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_frame_container(path) -> FrameSequence:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:8] != MAGIC:
        raise FormatError(f"{path}: not an STNETFRM container")
    version = struct.unpack_from("<I", data, 8)[0]
    if version != VERSION:
        raise FormatError(f"{path}: container version {version} is not supported (reader version {VERSION})")
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    _, _, t, h, w, c, label, fps, n_id = _HEADER.unpack_from(data, 0)
    start = _HEADER.size + n_id
    if len(data) < start:
        raise FormatError(f"{path}: truncated clip id")
    try:
        clip_id = data[_HEADER.size:start].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: corrupt clip id") from exc
    expected = t * h * w * c
    got = len(data) - start
    if min(t, h, w, c) < 1 or got != expected:
        raise IntegrityError(
            f"{path}: header declares {t}x{h}x{w}x{c} = {expected} frame bytes, file holds {got}"
        )
    frames = np.frombuffer(data, dtype=np.uint8, offset=start).reshape(t, h, w, c).copy()
    return FrameSequence(frames, None if label == -1 else label, clip_id, fps)


def frames_from_raw(raw: bytes, height: int, width: int, channels: int = 3) -> np.ndarray:
    """Split a raw RGB24 byte stream (time-major) into (T, H, W, C) frames."""
    size = height * width * channels
    if size == 0 or len(raw) % size:
        raise IntegrityError(f"raw stream of {len(raw)} bytes is not a whole number of {height}x{width}x{channels} frames")
    return np.frombuffer(raw, dtype=np.uint8).reshape(-1, height, width, channels).copy()
