"""Core volume type and slice-level primitives.

Arrays are dense, row-major (C-order) numpy buffers. Pipeline data is kept
in 32-bit floats; 64-bit mode exists for finite-difference checks.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInputError, ShapeError

PIPELINE_DTYPE = np.float32
CHECK_DTYPE = np.float64


class VoxelUnits(enum.Enum):
    HOUNSFIELD = "hounsfield"
    NORMALIZED = "normalized"
    ARBITRARY = "arbitrary"


def row_major_strides(shape):
    """Element strides (not byte strides) of a row-major layout."""
    strides = [1] * len(shape)
    for axis in range(len(shape) - 2, -1, -1):
        strides[axis] = strides[axis + 1] * shape[axis + 1]
    return tuple(strides)


def offset_of(shape, index):
    """Flat buffer offset of a multi-index under row-major layout."""
    if len(index) != len(shape):
        raise ShapeError(f"index rank {len(index)} != shape rank {len(shape)}")
    offset = 0
    for extent, stride, i in zip(shape, row_major_strides(shape), index):
        if not 0 <= i < extent:
            raise IndexError(f"index {index} out of bounds for shape {shape}")
        offset += i * stride
    return offset


def index_of(shape, offset):
    """Inverse of :func:`offset_of`."""
    total = int(np.prod(shape))
    if not 0 <= offset < total:
        raise IndexError(f"offset {offset} out of bounds for shape {shape}")
    index = []
    for stride in row_major_strides(shape):
        index.append(offset // stride)
        offset %= stride
    return tuple(index)


@dataclass
class Volume:
    """A [W, H, D] scalar grid with voxel-unit metadata.

    ``data`` is always a C-contiguous numpy array; the depth axis is the
    last one, so a z-line through the volume is a contiguous run.
    """

    data: np.ndarray
    voxel_units: VoxelUnits = VoxelUnits.HOUNSFIELD
    source_id: str = ""

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data)
        if self.data.ndim != 3:
            raise ShapeError(f"volume must be rank 3, got rank {self.data.ndim}")
        if min(self.data.shape) < 1:
            raise ShapeError(f"volume extents must be >= 1, got {self.data.shape}")

    @property
    def shape(self):
        return self.data.shape

    @property
    def depth(self):
        return self.data.shape[2]

    def converted(self, units: VoxelUnits) -> "Volume":
        """Return a copy tagged with new units.

        Only the Hounsfield -> normalized transition (and the identity)
        is allowed; normalization is not invertible in this pipeline.
        """
        if units != self.voxel_units and not (
            self.voxel_units is VoxelUnits.HOUNSFIELD and units is VoxelUnits.NORMALIZED
        ):
            raise ShapeError(
                f"illegal unit transition {self.voxel_units.value} -> {units.value}"
            )
        return Volume(self.data.copy(), units, self.source_id)


def tensor_slice_z(vol: Volume, z: int) -> np.ndarray:
    """Copy of the [W, H] plane at depth ``z``."""
    d = vol.data.shape[2]
    if not 0 <= z < d:
        raise IndexError(f"z={z} out of range for depth {d}")
    return vol.data[:, :, z].copy()


def stack_z(planes, voxel_units: VoxelUnits = VoxelUnits.ARBITRARY, source_id: str = "") -> Volume:
    """Stack [W, H] planes along a new depth axis into a Volume."""
    if len(planes) == 0:
        raise EmptyInputError("cannot stack an empty list of planes")
    first = planes[0].shape
    for k, p in enumerate(planes):
        if p.ndim != 2:
            raise ShapeError(f"plane {k} is rank {p.ndim}, expected 2")
        if p.shape != first:
            raise ShapeError(f"plane {k} has shape {p.shape}, expected {first}")
    data = np.stack(planes, axis=2)
    return Volume(data, voxel_units, source_id)
