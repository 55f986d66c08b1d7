"""Training, evaluation, streaming inference and feature-map inspection."""

from .features import dump_feature_maps, read_pgm, save_feature_maps, to_uint8_map, write_pgm
from .metrics import (
    HistoryRecord,
    Metrics,
    compute_metrics,
    confusion_matrix,
    f1_score,
    metrics_from_confusion,
    predict_labels,
    write_history_csv,
)
from .optim import (
    DESK_LR,
    TRAIN_PRESETS,
    OptimizerState,
    TrainConfig,
    clip_gradients,
    cross_entropy_grad,
    cross_entropy_loss,
    desk_train_config,
    optimizer_step,
)
from .stream import StreamWindowResult, sliding_window_classify, window_starts
from .trainer import evaluate, one_hot_batch, predict_probs, train, train_step

__all__ = [
    "DESK_LR", "TRAIN_PRESETS", "desk_train_config",
    "HistoryRecord", "Metrics", "OptimizerState", "StreamWindowResult", "TrainConfig", "clip_gradients",
    "compute_metrics", "confusion_matrix", "cross_entropy_grad", "cross_entropy_loss", "dump_feature_maps",
    "evaluate", "f1_score", "metrics_from_confusion", "one_hot_batch", "optimizer_step", "predict_labels",
    "predict_probs", "read_pgm", "save_feature_maps", "sliding_window_classify", "to_uint8_map", "train",
    "train_step", "window_starts", "write_history_csv", "write_pgm",
]
