"""Minimal numpy building blocks for the 3-D convolutional classifier."""

from .layers import (
    Conv3d,
    MaxPool3d,
    ReLU,
    BatchNorm3d,
    Flatten,
    Dense,
    Dropout,
    Softmax,
    conv3d_forward,
    conv3d_backward,
    maxpool3d_forward,
    maxpool3d_backward,
    glorot_init,
    mae_loss,
    one_hot,
)
from .model import DROPOUT_RATE, Model, ModelConfig, count_parameters, spatial_chain
from .optim import SGD, sgd_step
from .train import TrainConfig, EpochStats, train, predict_scores
from .checkpoint import save_checkpoint, load_checkpoint, CheckpointBundle

__all__ = [
    "Conv3d",
    "MaxPool3d",
    "ReLU",
    "BatchNorm3d",
    "Flatten",
    "Dense",
    "Dropout",
    "Softmax",
    "conv3d_forward",
    "conv3d_backward",
    "maxpool3d_forward",
    "maxpool3d_backward",
    "glorot_init",
    "mae_loss",
    "one_hot",
    "DROPOUT_RATE",
    "Model",
    "ModelConfig",
    "count_parameters",
    "spatial_chain",
    "SGD",
    "sgd_step",
    "TrainConfig",
    "EpochStats",
    "train",
    "predict_scores",
    "save_checkpoint",
    "load_checkpoint",
    "CheckpointBundle",
]
