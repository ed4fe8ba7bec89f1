"""From-scratch recurrent sequence classifier (numpy)."""
from .adam import AdamState, adam_step, clip_global_norm
from .checkpoint import BadMagic, CheckpointError, EncoderHashMismatch, load_model, save_model
from .rnn import (
    PARAM_NAMES,
    DenseParams,
    DimensionMismatch,
    ForwardCache,
    RnnLayerParams,
    RnnModel,
    backward,
    forward,
    loss,
    loss_and_grads,
    predict_arrays,
    softmax,
)
from .train import EmptySplit, History, TrainConfig, fit, predict, train

__all__ = [
    "PARAM_NAMES",
    "AdamState",
    "BadMagic",
    "CheckpointError",
    "DenseParams",
    "DimensionMismatch",
    "EmptySplit",
    "EncoderHashMismatch",
    "ForwardCache",
    "History",
    "RnnLayerParams",
    "RnnModel",
    "TrainConfig",
    "adam_step",
    "backward",
    "clip_global_norm",
    "fit",
    "forward",
    "load_model",
    "loss",
    "loss_and_grads",
    "predict",
    "predict_arrays",
    "save_model",
    "softmax",
    "train",
]
