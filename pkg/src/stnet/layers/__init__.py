from .attention import (
    EncoderBlock,
    LayerNorm,
    MultiHeadAttention,
    PositionalEncoding,
    feed_forward,
    multi_head_attention,
    positional_encoding,
    scaled_dot_attention,
    transformer_encoder_block,
)
from .base import EVAL, Context, Layer, Sequential, TimeDistributed, time_distributed
from .conv import Conv2D, Conv3D, conv2d_forward, conv3d_forward
from .core import (
    Activation,
    Dense,
    Dropout,
    Flatten,
    TemporalMeanPool,
    activation_forward,
    dense_forward,
    dropout_forward,
    flatten,
)
from .pooling import MaxPool, maxpool_forward
from .recurrent import (
    LSTM,
    BiLSTM,
    ConvLSTM,
    ConvLSTMCell,
    bilstm_forward,
    convlstm_cell_step,
    lstm_forward,
)

__all__ = [
    "Activation", "BiLSTM", "Context", "Conv2D", "Conv3D", "ConvLSTM", "ConvLSTMCell", "Dense",
    "Dropout", "EVAL", "EncoderBlock", "Flatten", "LSTM", "Layer", "LayerNorm", "MaxPool",
    "MultiHeadAttention", "PositionalEncoding", "Sequential", "TemporalMeanPool", "TimeDistributed",
    "activation_forward", "bilstm_forward", "conv2d_forward", "conv3d_forward", "convlstm_cell_step",
    "dense_forward", "dropout_forward", "feed_forward", "flatten", "lstm_forward", "maxpool_forward",
    "multi_head_attention", "positional_encoding", "scaled_dot_attention", "time_distributed",
    "transformer_encoder_block",
]
