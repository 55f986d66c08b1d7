"""Dataset manifests and train/validation/test splitting.

A manifest is a JSON-lines file. The first line is a header
``{"format": "stnet-manifest", "version": 1}``; every further line is one
clip ``{"clip_id", "path", "label", "frames", "height", "width"}`` with
``path`` relative to the manifest's directory.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DataError, FormatError, StratificationError
from ..tensor import rng_stream
from .container import read_frame_container
from .preprocess import preprocess_clip

MANIFEST_FORMAT = "stnet-manifest"
MANIFEST_VERSION = 1


@dataclass(frozen=True)
class ManifestEntry:
    clip_id: str
    path: str
    label: int
    frames: int
    height: int
    width: int


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry] = field(default_factory=list)
    root: Path = Path(".")
    version: int = MANIFEST_VERSION

    def __post_init__(self):
        paths = [e.path for e in self.entries]
        if len(set(paths)) != len(paths):
            raise DataError("manifest paths must be unique")

    def __len__(self):
        return len(self.entries)

    @property
    def counts(self) -> dict[int, int]:
        out = {0: 0, 1: 0}
        for e in self.entries:
            out[e.label] = out.get(e.label, 0) + 1
        return out

    @property
    def labels(self) -> np.ndarray:
        return np.array([e.label for e in self.entries], dtype=np.int64)

    def subset(self, indices) -> "DatasetManifest":
        return DatasetManifest([self.entries[i] for i in indices], self.root)

    def write(self, path) -> None:
        path = Path(path)
        lines = [json.dumps({"format": MANIFEST_FORMAT, "version": self.version})]
        target = path.parent.resolve()
        for e in self.entries:
            rel = Path(os.path.relpath(self.root.resolve() / e.path, target))
            lines.append(json.dumps({**asdict(e), "path": rel.as_posix()}))
        path.write_text("\n".join(lines) + "\n")

    @classmethod
    def read(cls, path) -> "DatasetManifest":
        path = Path(path)
        lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
        if not lines:
            raise FormatError(f"{path}: empty manifest")
        try:
            header = json.loads(lines[0])
            if header.get("format") != MANIFEST_FORMAT:
                raise FormatError(f"{path}: not an stnet manifest")
            if header.get("version") != MANIFEST_VERSION:
                raise FormatError(
                    f"{path}: manifest version {header.get('version')} unsupported (reader {MANIFEST_VERSION})"
                )
            entries = [ManifestEntry(**json.loads(ln)) for ln in lines[1:]]
        except (json.JSONDecodeError, TypeError) as exc:
            raise FormatError(f"{path}: malformed manifest line ({exc})") from exc
        return cls(entries, path.parent.resolve())

    def clip_path(self, entry: ManifestEntry) -> Path:
        return self.root / entry.path

    def load(self, frames: int, size, entries=None):
        """Read and preprocess every clip: (N, frames, *size, 3) float32 and labels."""
        entries = self.entries if entries is None else entries
        if not entries:
            raise DataError("manifest has no clips")
        xs = [preprocess_clip(read_frame_container(self.clip_path(e)).frames, frames, size) for e in entries]
        return np.stack(xs), np.array([e.label for e in entries], dtype=np.int64)


@dataclass(frozen=True)
class SplitSpec:
    ratios: tuple = (0.8, 0.1, 0.1)
    seed: int = 0
    stratified: bool = True

    def validate(self):
        if len(self.ratios) != 3 or any(r <= 0 for r in self.ratios):
            raise ConfigError(f"split ratios must be three positive numbers, got {self.ratios}")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ConfigError(f"split ratios must sum to 1, got {sum(self.ratios)}")
        return self


def _allocate(n: int, ratios) -> tuple[int, int, int]:
    # floor allocation for validation/test; the remainder goes to train
    n_val = math.floor(n * ratios[1] + 1e-9)
    n_test = math.floor(n * ratios[2] + 1e-9)
    return n - n_val - n_test, n_val, n_test


def _stratified_sizes(class_sizes, ratios):
    """Per-class (train, val, test) counts whose subset totals follow :func:`_allocate`.

    Candidates give each class within one clip of the floor/ceiling of its
    exact validation and test share, with at least one clip everywhere. The
    winner minimizes the worst per-class deviation from the exact share over
    all three subsets (then the summed deviation; first in order on ties).
    Returns None when no candidate puts a clip of every class in every subset.
    """
    _, n_val, n_test = _allocate(sum(class_sizes), ratios)

    def options(n, r):
        lo = math.floor(n * r + 1e-9)
        return range(max(1, lo - 1), min(n, lo + 2) + 1)

    best, best_key = None, None
    for vals in itertools.product(*(options(n, ratios[1]) for n in class_sizes)):
        if sum(vals) != n_val:
            continue
        for tests in itertools.product(*(options(n, ratios[2]) for n in class_sizes)):
            if sum(tests) != n_test:
                continue
            sizes = [(n - v - t, v, t) for n, v, t in zip(class_sizes, vals, tests)]
            if min(min(sz) for sz in sizes) < 1:
                continue
            devs = [abs(k - n * r) for n, sz in zip(class_sizes, sizes) for k, r in zip(sz, ratios)]
            key = (round(max(devs), 9), round(sum(devs), 9))
            if best_key is None or key < best_key:
                best, best_key = sizes, key
    return best


def split_indices(labels, spec: SplitSpec):
    """Seeded three-way partition of positions 0..N-1 -> (train, val, test)."""
    spec.validate()
    labels = np.asarray(labels)
    if labels.size == 0:
        raise DataError("cannot split an empty dataset")
    rng = rng_stream(spec.seed, "split")
    parts = ([], [], [])
    if spec.stratified:
        groups = [np.flatnonzero(labels == c) for c in np.unique(labels)]
        sizes = _stratified_sizes([g.size for g in groups], spec.ratios)
        if sizes is None:
            counts = ", ".join(f"class {labels[g[0]]}: {g.size}" for g in groups)
            raise StratificationError(
                f"cannot place a clip of every class in every subset at ratios {spec.ratios} ({counts})"
            )
    else:
        groups = [np.arange(labels.size)]
        sizes = [_allocate(labels.size, spec.ratios)]
    for group, size in zip(groups, sizes):
        order = group[rng.permutation(group.size)]
        a, b = size[0], size[0] + size[1]
        for part, chunk in zip(parts, (order[:a], order[a:b], order[b:])):
            part.extend(int(i) for i in chunk)
    return tuple(sorted(p) for p in parts)


def split_dataset(manifest: DatasetManifest, spec: SplitSpec):
    """Disjoint, exhaustive train/validation/test manifests."""
    if not len(manifest):
        raise DataError("cannot split an empty manifest")
    return tuple(manifest.subset(ix) for ix in split_indices(manifest.labels, spec))
