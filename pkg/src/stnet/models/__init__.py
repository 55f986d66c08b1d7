from .checkpoint import (
    ImportReport,
    import_external_weights,
    load_checkpoint,
    read_container,
    save_checkpoint,
    vgg_weight_table,
    write_container,
)
from .config import PRESETS, VARIANTS, ModelConfig, desk_config, full_config
from .model import Model, build_model, count_parameters, model_forward

__all__ = [
    "ImportReport", "Model", "ModelConfig", "PRESETS", "VARIANTS", "build_model", "count_parameters",
    "desk_config", "import_external_weights", "load_checkpoint", "model_forward", "full_config",
    "read_container", "save_checkpoint", "vgg_weight_table", "write_container",
]
