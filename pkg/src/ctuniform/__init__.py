"""Depth uniformization and classification toolkit for 3-D CT volumes."""

__version__ = "0.1.0"

from .volume import Volume, VoxelUnits
from .uniformize import Method, UniformizeSpec, UniformizedTensor, uniformize

__all__ = [
    "Volume",
    "VoxelUnits",
    "Method",
    "UniformizeSpec",
    "UniformizedTensor",
    "uniformize",
    "__version__",
]
