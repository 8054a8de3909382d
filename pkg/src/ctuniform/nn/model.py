"""Network assembly: conv/pool/relu/norm stages feeding a two-layer head.

Each stage shrinks every spatial extent by 2 (valid 3x3x3 convolution) and
then halves it (2x2x2 max pooling, floor). The head is a single hidden dense
layer followed by two dropout layers and the classification layer; the hidden
layer feeds dropout directly, without an activation in between.

The two dropout layers share one rate chosen so that the joint keep
probability of a unit is 0.4: rate = 1 - sqrt(0.4).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from .layers import (
    BatchNorm3d,
    Conv3d,
    Dense,
    Dropout,
    Flatten,
    MaxPool3d,
    ReLU,
    Softmax,
)

DROPOUT_RATE = 1.0 - math.sqrt(0.4)

_DTYPES = {"float32": np.float32, "float64": np.float64}


@dataclass(frozen=True)
class ModelConfig:
    input_shape: tuple = (128, 128, 64)
    conv_filters: tuple = (64, 64, 128, 256)
    fc_width: int = 512
    classes: int = 2
    dropout_rates: tuple = (DROPOUT_RATE, DROPOUT_RATE)
    bn_momentum: float = 0.9
    bn_eps: float = 1e-5
    in_channels: int = 1
    dtype: str = "float32"

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(e) for e in self.input_shape))
        object.__setattr__(self, "conv_filters", tuple(int(f) for f in self.conv_filters))
        object.__setattr__(self, "dropout_rates", tuple(float(r) for r in self.dropout_rates))
        if len(self.input_shape) != 3 or any(e < 1 for e in self.input_shape):
            raise ConfigError(f"input_shape must be three extents >= 1, got {self.input_shape}")
        if not self.conv_filters or any(f < 1 for f in self.conv_filters):
            raise ConfigError(f"conv_filters must be positive, got {self.conv_filters}")
        if self.fc_width < 1:
            raise ConfigError(f"fc_width must be >= 1, got {self.fc_width}")
        if self.classes < 2:
            raise ConfigError(f"classes must be >= 2, got {self.classes}")
        if len(self.dropout_rates) != 2 or any(not 0.0 <= r < 1.0 for r in self.dropout_rates):
            raise ConfigError(f"dropout_rates must be two rates in [0, 1), got {self.dropout_rates}")
        if self.in_channels < 1:
            raise ConfigError(f"in_channels must be >= 1, got {self.in_channels}")
        if self.dtype not in _DTYPES:
            raise ConfigError(f"dtype must be one of {sorted(_DTYPES)}, got {self.dtype}")

    @property
    def np_dtype(self):
        return _DTYPES[self.dtype]


def spatial_chain(config: ModelConfig):
    """Spatial extents after every conv+pool stage; raises if a stage collapses."""
    shape = config.input_shape
    chain = []
    for i, _ in enumerate(config.conv_filters):
        conv = tuple(e - 2 for e in shape)
        if min(conv) < 1:
            raise ConfigError(f"stage {i}: extents {shape} too small for a 3x3x3 convolution")
        pooled = tuple(e // 2 for e in conv)
        if min(pooled) < 1:
            raise ConfigError(f"stage {i}: extents {conv} too small for 2x2x2 pooling")
        chain.append(pooled)
        shape = pooled
    return chain


def count_parameters(config: ModelConfig) -> int:
    """Exact number of trainable scalars (conv, batch-norm, dense)."""
    total = 0
    cin = config.in_channels
    for f in config.conv_filters:
        total += f * cin * 27 + f  # kernel + bias
        total += 2 * f  # gamma + beta
        cin = f
    final = spatial_chain(config)[-1]
    flat = config.conv_filters[-1] * final[0] * final[1] * final[2]
    total += flat * config.fc_width + config.fc_width
    total += config.fc_width * config.classes + config.classes
    return total


class Model:
    """The full classifier: stages, flatten, dense head, softmax."""

    def __init__(self, config: ModelConfig):
        self.config = config
        dtype = config.np_dtype
        final = spatial_chain(config)[-1]
        flat = config.conv_filters[-1] * final[0] * final[1] * final[2]
        self.layers = []
        cin = config.in_channels
        for i, f in enumerate(config.conv_filters):
            self.layers.append(Conv3d(cin, f, f"conv{i}", dtype))
            self.layers.append(MaxPool3d())
            self.layers.append(ReLU())
            self.layers.append(
                BatchNorm3d(f, f"bn{i}", config.bn_momentum, config.bn_eps, dtype)
            )
            cin = f
        self.layers.append(Flatten())
        self.layers.append(Dense(flat, config.fc_width, "fc0", dtype))
        self.layers.append(Dropout(config.dropout_rates[0]))
        self.layers.append(Dropout(config.dropout_rates[1]))
        self.layers.append(Dense(config.fc_width, config.classes, "fc1", dtype))
        self.layers.append(Softmax())

    def init_params(self, rng):
        for layer in self.layers:
            if hasattr(layer, "init_params"):
                layer.init_params(rng)

    def forward(self, x, train=False, rng=None):
        for layer in self.layers:
            x = layer.forward(x, train=train, rng=rng)
        return x

    def backward(self, grad):
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def params(self):
        out = []
        for layer in self.layers:
            out.extend(layer.params())
        return out

    def buffers(self):
        out = []
        for layer in self.layers:
            if hasattr(layer, "buffers"):
                out.extend(layer.buffers())
        return out

    def state_arrays(self):
        """Ordered (name, array) pairs of every parameter and buffer."""
        out = [(p.name, p.value) for p in self.params()]
        out.extend(self.buffers())
        return out

    def load_state(self, arrays: dict):
        for p in self.params():
            value = arrays[p.name]
            if value.shape != p.value.shape:
                raise ConfigError(
                    f"{p.name}: stored shape {value.shape} != expected {p.value.shape}"
                )
            p.value = value.astype(p.value.dtype, copy=True)
        for name, buf in self.buffers():
            value = arrays[name]
            if value.shape != buf.shape:
                raise ConfigError(f"{name}: stored shape {value.shape} != expected {buf.shape}")
            buf[:] = value
