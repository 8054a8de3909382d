"""Fixed-shape uniformization of variable-depth volumes.

Three depth strategies produce a [W, H, N] tensor from a [W, H, D] volume:

* SSS (subset slice selection) keeps three index blocks: the first ceil(N/3)
  planes, floor(N/3) planes starting at the middle, and the last remaining
  planes. Blocks may overlap on shallow volumes; duplicates are kept so the
  output depth is always exactly N.
* ESS (even slice selection) keeps every floor(i*D/N)-th plane when D >= N,
  and otherwise keeps all D planes and repeats the last one N-D times.
* SIZ (spline interpolation zoom) resamples the depth axis with a cubic
  spline so every input plane influences the output.

In-plane resizing to the target plane happens before the depth step; for the
two selection strategies only the selected planes are resized, which yields
bit-identical results because the in-plane resample treats each plane
independently.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError
from .spline import zoom_array_axis
from .volume import Volume


class Method(enum.Enum):
    SSS = "sss"
    ESS = "ess"
    SIZ = "siz"


@dataclass(frozen=True)
class UniformizeSpec:
    """Target geometry and strategy for uniformization."""

    method: Method
    target_depth: int = 64
    target_plane: tuple = (128, 128)

    def __post_init__(self):
        if not isinstance(self.method, Method):
            raise ConfigError(f"method must be a Method, got {self.method!r}")
        if self.target_depth < 1:
            raise ConfigError(f"target_depth must be >= 1, got {self.target_depth}")
        if len(self.target_plane) != 2 or any(int(e) < 1 for e in self.target_plane):
            raise ConfigError(f"target_plane must be two extents >= 1, got {self.target_plane}")


@dataclass
class UniformizedTensor:
    """Fixed-shape tensor plus the provenance needed to interpret it."""

    tensor: np.ndarray  # [W, H, N]
    method: Method
    original_depth: int


def ess_indices(depth: int, target: int) -> np.ndarray:
    """Evenly spaced plane indices; shallow volumes repeat the last plane."""
    if depth < 1 or target < 1:
        raise DomainError(f"extents must be >= 1, got depth={depth} target={target}")
    if depth >= target:
        return (np.arange(target, dtype=np.int64) * depth) // target
    pad = np.full(target - depth, depth - 1, dtype=np.int64)
    return np.concatenate([np.arange(depth, dtype=np.int64), pad])


def sss_indices(depth: int, target: int) -> np.ndarray:
    """First/middle/last index blocks, clamped into range; duplicates kept."""
    if depth < 1 or target < 1:
        raise DomainError(f"extents must be >= 1, got depth={depth} target={target}")
    n_first = -(-target // 3)
    n_middle = target // 3
    n_last = target - n_first - n_middle
    first = np.arange(n_first, dtype=np.int64)
    middle = depth // 2 + np.arange(n_middle, dtype=np.int64)
    last = depth - n_last + np.arange(n_last, dtype=np.int64)
    idx = np.concatenate([first, middle, last])
    return np.clip(idx, 0, depth - 1)


def _resize_plane(planes: np.ndarray, target_plane) -> np.ndarray:
    """Resize the first two axes of a [W, H, ...] array, one axis at a time."""
    out = planes
    if out.shape[0] != target_plane[0]:
        out = zoom_array_axis(out, 0, int(target_plane[0]))
    if out.shape[1] != target_plane[1]:
        out = zoom_array_axis(out, 1, int(target_plane[1]))
    return out


def uniformize(vol: Volume, spec: UniformizeSpec) -> UniformizedTensor:
    """Produce the fixed-shape tensor for one volume."""
    depth = vol.depth
    target = spec.target_depth
    if spec.method is Method.SIZ:
        data = _resize_plane(vol.data, spec.target_plane)
        if depth != target:
            data = zoom_array_axis(data, 2, target)
    else:
        if spec.method is Method.SSS:
            idx = sss_indices(depth, target)
        else:
            idx = ess_indices(depth, target)
        data = _resize_plane(vol.data[:, :, idx], spec.target_plane)
    return UniformizedTensor(np.ascontiguousarray(data), spec.method, depth)
