"""Binary checkpoint container (``STNETCKP``) and external VGG weight import.

Layout, all integers little-endian u32::

    magic      8 bytes  b"STNETCKP"
    version    u32      (currently 1)
    tag        u32 length + UTF-8 variant name
    metadata   u32 length + UTF-8 JSON (model config, epoch, seed, ...)
    count      u32      number of tensors
    tensor     u32 name length + UTF-8 name, u32 rank, rank x u32 dims,
               prod(dims) float32 values in row-major order

Nothing may follow the last tensor.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass, field

import numpy as np

from ..errors import FormatError, IntegrityError, WeightImportError
from .config import ModelConfig
from .model import VGG_BLOCKS, Model, build_model

MAGIC = b"STNETCKP"
VERSION = 1
VGG_TAG = "VGG16-conv"


def write_container(path, tag: str, metadata: dict, tensors) -> None:
    """Write (name, array) pairs atomically (temp file + rename)."""
    chunks = [MAGIC, struct.pack("<I", VERSION)]
    for text in (tag, json.dumps(metadata, sort_keys=True)):
        raw = text.encode("utf-8")
        chunks += [struct.pack("<I", len(raw)), raw]
    items = list(tensors)
    chunks.append(struct.pack("<I", len(items)))
    for name, arr in items:
        raw = name.encode("utf-8")
        arr = np.asarray(arr)
        chunks += [struct.pack("<I", len(raw)), raw, struct.pack("<I", arr.ndim)]
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    path = os.fspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)), suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(b"".join(chunks))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Reader:
    def __init__(self, data: bytes, path):
        self.data, self.pos, self.path = data, 0, path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(f"{self.path}: truncated at byte {self.pos} (needed {n} more)")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def text(self) -> str:
        try:
            return self.take(self.u32()).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{self.path}: corrupt string at byte {self.pos}") from exc


def read_container(path):
    """Parse a container fully; returns (tag, metadata, [(name, float32 array)])."""
    with open(path, "rb") as fh:
        data = fh.read()
    r = _Reader(data, path)
    magic = r.take(8)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    version = r.u32()
    if version != VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version} (reader supports {VERSION})")
    tag = r.text()
    try:
        metadata = json.loads(r.text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: corrupt metadata") from exc
    tensors = []
    for _ in range(r.u32()):
        name = r.text()
        rank = r.u32()
        shape = struct.unpack(f"<{rank}I", r.take(4 * rank))
        count = int(np.prod(shape)) if rank else 1
        arr = np.frombuffer(r.take(4 * count), dtype="<f4").reshape(shape).astype(np.float32)
        tensors.append((name, arr))
    if r.pos != len(data):
        raise FormatError(f"{path}: {len(data) - r.pos} unexpected trailing bytes")
    return tag, metadata, tensors


def save_checkpoint(model: Model, path, epoch: int = 0, seed: int | None = None, extra: dict | None = None):
    metadata = {
        "config": model.config.to_dict(),
        "epoch": int(epoch),
        "seed": int(model.seed if seed is None else seed),
        **(extra or {}),
    }
    write_container(path, model.config.variant, metadata, model.parameters().items())


def _verify(model: Model, tensors, tag: str):
    expected = model.parameters()
    found = dict(tensors)
    for name, arr in expected.items():
        if name not in found:
            raise IntegrityError(f"checkpoint ({tag}) lacks parameter {name!r} required by {model.config.variant}")
        if found[name].shape != arr.shape:
            raise IntegrityError(
                f"parameter {name!r}: checkpoint ({tag}) shape {found[name].shape} != "
                f"{model.config.variant} blueprint shape {arr.shape}"
            )
    extra = [n for n, _ in tensors if n not in expected]
    if extra:
        raise IntegrityError(f"checkpoint ({tag}) has parameter {extra[0]!r} unknown to {model.config.variant}")


def load_checkpoint(path, config: ModelConfig | None = None):
    """Rebuild the stored model; with ``config``, load into that blueprint instead.

    Returns (model, metadata). Every check runs before any parameter is
    written, so failures never yield a partial model.
    """
    tag, metadata, tensors = read_container(path)
    try:
        stored = ModelConfig.from_dict(metadata["config"])
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{path}: metadata has no usable model config") from exc
    if stored.variant != tag:
        raise IntegrityError(f"{path}: tag {tag!r} disagrees with stored config {stored.variant!r}")
    target = config or stored
    model = build_model(target, int(metadata.get("seed", 0)))
    _verify(model, tensors, tag)
    if target.variant != tag:
        raise IntegrityError(f"{path}: checkpoint variant {tag!r} loaded as {target.variant!r}")
    params = model.parameters()
    for name, arr in tensors:
        params[name][...] = arr
    return model.eval(), metadata


# --- external VGG weights --------------------------------------------------

def vgg_weight_table(config: ModelConfig) -> dict[str, tuple]:
    """Import-file name -> expected shape for the 13 backbone convolutions.

    Kernels are K x K x C_in x C_out in cross-correlation orientation (as
    exported by common frameworks); they are flipped on import to match
    this package's true-convolution layers.
    """
    table = {}
    c = config.channels
    for b, (n_conv, width) in enumerate(zip(VGG_BLOCKS, config.vgg_widths), 1):
        for k in range(1, n_conv + 1):
            table[f"block{b}_conv{k}/kernel"] = (3, 3, c, width)
            table[f"block{b}_conv{k}/bias"] = (width,)
            c = width
    return table


@dataclass
class ImportReport:
    loaded: list = field(default_factory=list)
    skipped: list = field(default_factory=list)


def import_external_weights(model: Model, path) -> ImportReport:
    """Replace VGG backbone convolutions from an ``STNETCKP`` weight file.

    A zero-byte file is an empty import. Head parameters are never touched.
    """
    if model.config.variant != "LRCN_VGG":
        raise WeightImportError(f"external VGG weights apply to LRCN_VGG, not {model.config.variant}")
    if os.path.getsize(path) == 0:
        return ImportReport()
    _, _, tensors = read_container(path)
    table = vgg_weight_table(model.config)
    params = model.parameters()
    report = ImportReport()
    staged = []
    for name, arr in tensors:
        if name not in table:
            report.skipped.append(name)
            continue
        if arr.shape != table[name]:
            raise WeightImportError(f"{name}: file shape {arr.shape} != backbone shape {table[name]}")
        layer, part = name.split("/")
        key = f"backbone.inner.{layer}.{'W' if part == 'kernel' else 'b'}"
        staged.append((key, arr[::-1, ::-1] if part == "kernel" else arr, layer))
    for key, arr, layer in staged:
        params[key][...] = arr
        if layer not in report.loaded:
            report.loaded.append(layer)
    return report
