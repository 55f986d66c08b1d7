from .container import FrameSequence, frames_from_raw, read_frame_container, write_frame_container
from .manifest import DatasetManifest, ManifestEntry, SplitSpec, split_dataset, split_indices
from .preprocess import (
    CLASS_NAMES,
    normalize,
    one_hot,
    preprocess_clip,
    preprocess_frames,
    resize_bilinear,
    sample_frame_indices,
)
from .synthetic import SyntheticConfig, generate_synthetic_dataset, mean_frame_difference, render_clip

__all__ = [
    "CLASS_NAMES", "DatasetManifest", "FrameSequence", "ManifestEntry", "SplitSpec", "SyntheticConfig",
    "frames_from_raw", "generate_synthetic_dataset", "mean_frame_difference", "normalize", "one_hot",
    "preprocess_clip", "preprocess_frames", "read_frame_container", "render_clip", "resize_bilinear",
    "sample_frame_indices", "split_dataset", "split_indices", "write_frame_container",
]
