"""Synthetic two-class motion clips for laptop-scale training.

Class 0 ("calm"): bright blobs glide on straight lines at low speed,
bouncing off the borders. Class 1 ("agitated"): blobs jump by large steps in
a fresh random direction every frame and are pulled towards each other, so
they keep colliding. Backgrounds are a static smooth texture plus light
per-frame sensor noise, identical in distribution for both classes; the
classes differ only in how the blobs move.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..tensor import rng_stream
from .container import FrameSequence, write_frame_container
from .manifest import DatasetManifest, ManifestEntry


@dataclass(frozen=True)
class SyntheticConfig:
    clips_per_class: int = 100
    frames: int = 16
    size: int = 24
    blobs: int = 2
    blob_radius: float = 2.5
    calm_speed: tuple = (0.2, 0.6)
    agitated_speed: tuple = (2.5, 4.5)
    contact_pull: float = 0.25
    noise: float = 3.0
    fps: float = 30.0
    seed: int = 0

    def validate(self):
        if self.clips_per_class < 1 or self.frames < 1 or self.blobs < 1:
            raise ConfigError("clips_per_class, frames and blobs must be >= 1")
        if self.blob_radius <= 0 or 2 * self.blob_radius >= self.size:
            raise ConfigError(f"blob radius {self.blob_radius} does not fit a {self.size}px frame")
        for lo, hi in (self.calm_speed, self.agitated_speed):
            if not 0 <= lo <= hi:
                raise ConfigError("speed ranges must satisfy 0 <= low <= high")
        return self


def _background(rng, size):
    coarse = rng.uniform(15, 60, size=(4, 4, 3))
    lo = np.linspace(0, 3, size)
    i0 = np.floor(lo).astype(int).clip(0, 2)
    w = (lo - i0)[:, None, None]
    rows = coarse[i0] * (1 - w) + coarse[i0 + 1] * w
    w = (lo - i0)[None, :, None]
    return rows[:, i0] * (1 - w) + rows[:, i0 + 1] * w


def _reflect(pos, lo, hi):
    pos = np.where(pos < lo, 2 * lo - pos, pos)
    pos = np.where(pos > hi, 2 * hi - pos, pos)
    return np.clip(pos, lo, hi)


def _trajectory(rng, cfg: SyntheticConfig, label: int):
    r, s, n = cfg.blob_radius, cfg.size, cfg.blobs
    lo, hi = r, s - 1 - r
    pos = rng.uniform(lo, hi, size=(n, 2))
    out = np.empty((cfg.frames, n, 2))
    if label == 0:
        angle = rng.uniform(0, 2 * np.pi, size=n)
        speed = rng.uniform(*cfg.calm_speed, size=n)
        vel = np.stack([np.cos(angle), np.sin(angle)], axis=1) * speed[:, None]
        for t in range(cfg.frames):
            out[t] = pos
            nxt = pos + vel
            bounce = (nxt < lo) | (nxt > hi)
            vel = np.where(bounce, -vel, vel)
            pos = _reflect(nxt, lo, hi)
    else:
        for t in range(cfg.frames):
            out[t] = pos
            angle = rng.uniform(0, 2 * np.pi, size=n)
            speed = rng.uniform(*cfg.agitated_speed, size=n)
            step = np.stack([np.cos(angle), np.sin(angle)], axis=1) * speed[:, None]
            pull = (pos.mean(axis=0, keepdims=True) - pos) * cfg.contact_pull
            pos = _reflect(pos + step + pull, lo, hi)
    return out


def render_clip(cfg: SyntheticConfig, label: int, index: int) -> np.ndarray:
    """Deterministic (T, S, S, 3) uint8 clip for (label, index) under cfg.seed."""
    rng = rng_stream(cfg.seed, f"synthetic/{label}/{index}")
    s = cfg.size
    bg = _background(rng, s)
    colors = rng.uniform(150, 230, size=(cfg.blobs, 3))
    traj = _trajectory(rng, cfg, label)
    yy, xx = np.mgrid[0:s, 0:s].astype(np.float64)
    frames = np.empty((cfg.frames, s, s, 3), dtype=np.uint8)
    two_r2 = 2 * cfg.blob_radius ** 2
    for t in range(cfg.frames):
        img = bg.copy()
        for b in range(cfg.blobs):
            y, x = traj[t, b]
            mask = np.exp(-((yy - y) ** 2 + (xx - x) ** 2) / two_r2)[..., None]
            img = img * (1 - mask) + colors[b] * mask
        img += rng.normal(0, cfg.noise, size=img.shape)
        frames[t] = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    return frames


def generate_synthetic_dataset(cfg: SyntheticConfig, out_dir=None):
    """Render ``clips_per_class`` clips of each label.

    Returns (manifest, clips). With ``out_dir`` every clip is written as an
    STNETFRM container under ``out_dir/clips`` and the manifest to
    ``out_dir/manifest.jsonl``.
    """
    cfg.validate()
    root = Path(out_dir) if out_dir is not None else Path(".")
    if out_dir is not None:
        (root / "clips").mkdir(parents=True, exist_ok=True)
    clips, entries = [], []
    for label in (0, 1):
        for i in range(cfg.clips_per_class):
            clip_id = f"synth_{label}_{i:04d}"
            seq = FrameSequence(render_clip(cfg, label, i), label, clip_id, cfg.fps)
            rel = f"clips/{clip_id}.stf"
            if out_dir is not None:
                write_frame_container(seq, root / rel)
            clips.append(seq)
            entries.append(ManifestEntry(clip_id, rel, label, cfg.frames, cfg.size, cfg.size))
    manifest = DatasetManifest(entries, root.resolve())
    if out_dir is not None:
        manifest.write(root / "manifest.jsonl")
    return manifest, clips


def mean_frame_difference(frames: np.ndarray) -> float:
    """Mean absolute difference between consecutive frames."""
    f = frames.astype(np.float64)
    if len(f) < 2:
        return 0.0
    return float(np.abs(np.diff(f, axis=0)).mean())
