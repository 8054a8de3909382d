"""Order-3 B-spline interpolation: prefilter, kernel evaluation, axis zoom.

The prefilter converts samples into B-spline coefficients with the standard
causal/anticausal recursive filter (single pole sqrt(3)-2, overall gain 6)
under mirror-reflect boundary handling of period 2*(L-1). Evaluating the
resulting spline at integer positions reproduces the input samples; the zoom
maps output index o to input coordinate o*(L-1)/(target-1), so both endpoints
stay aligned and an equal-size zoom is an identity up to filter precision.

Filtering always runs in 64-bit floats (the recursive filter's pole
accumulates error in 32-bit) and results are narrowed back to the caller's
dtype afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .volume import Volume

POLE = math.sqrt(3.0) - 2.0
GAIN = 6.0


def bspline3(x):
    """Centered cubic B-spline kernel, support (-2, 2)."""
    ax = np.abs(np.asarray(x, dtype=np.float64))
    inner = 2.0 / 3.0 - ax * ax * (1.0 - ax / 2.0)
    outer = (2.0 - ax) ** 3 / 6.0
    return np.where(ax < 1.0, inner, np.where(ax < 2.0, outer, 0.0))


def _mirror_fold(k, length):
    """Fold integer indices into [0, length-1] by reflection about the ends."""
    period = 2 * length - 2
    m = np.mod(k, period)
    return np.where(m > length - 1, period - m, m)


def _prefilter_last_axis(samples: np.ndarray) -> np.ndarray:
    """Cubic-spline coefficients of every line along the last axis (float64)."""
    length = samples.shape[-1]
    if length == 1:
        return samples.copy()
    z = POLE
    c = samples * GAIN

    # exact causal start: geometric sum over one mirror period
    period = 2 * length - 2
    powers = z ** np.arange(period)
    w = np.zeros(length)
    w[0] = powers[0]
    w[length - 1] += powers[length - 1]
    for n in range(1, length - 1):
        w[n] += powers[n] + powers[period - n]
    w /= 1.0 - z ** period

    out = np.empty_like(c)
    out[..., 0] = c @ w
    for n in range(1, length):
        out[..., n] = c[..., n] + z * out[..., n - 1]
    out[..., length - 1] = (z / (z * z - 1.0)) * (out[..., length - 1] + z * out[..., length - 2])
    for n in range(length - 2, -1, -1):
        out[..., n] = z * (out[..., n + 1] - out[..., n])
    return out


def _eval_last_axis(coef: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """Evaluate splines (coefficient lines along the last axis) at positions."""
    length = coef.shape[-1]
    if length == 1:
        reps = (1,) * (coef.ndim - 1) + (positions.size,)
        return np.tile(coef[..., :1], reps)
    i = np.floor(positions).astype(np.int64)
    taps = i[None, :] + np.arange(-1, 3)[:, None]  # (4, T)
    weights = bspline3(positions[None, :] - taps)
    folded = _mirror_fold(taps, length)
    gathered = coef[..., folded]  # (..., 4, T)
    return np.einsum("...kt,kt->...t", gathered, weights)


@dataclass
class SplineLine:
    """Interpolation coefficients of one 1-D signal under mirror boundary."""

    coefficients: np.ndarray  # float64
    filtered: bool = True  # False for length-1 lines that bypass filtering

    def __len__(self):
        return self.coefficients.shape[0]


def prefilter_cubic(line) -> SplineLine:
    """Convert 1-D samples into cubic B-spline interpolation coefficients."""
    line = np.asarray(line, dtype=np.float64)
    if line.ndim != 1:
        raise DomainError(f"expected a 1-D line, got rank {line.ndim}")
    if line.shape[0] < 2:
        return SplineLine(line.copy(), filtered=False)
    return SplineLine(_prefilter_last_axis(line))


def eval_cubic(sl: SplineLine, x: float) -> float:
    """Evaluate the spline at coordinate x in [0, L-1]."""
    length = len(sl)
    if not 0.0 <= x <= length - 1:
        raise DomainError(f"x={x} outside [0, {length - 1}]")
    return float(_eval_last_axis(sl.coefficients, np.array([float(x)]))[0])


def zoom_array_axis(arr: np.ndarray, axis: int, target: int) -> np.ndarray:
    """Resample one axis of an array to ``target`` samples via cubic splines.

    Output index o samples input coordinate o*(L-1)/(target-1); target == 1
    samples the midpoint (L-1)/2, and a length-1 axis broadcasts its single
    plane. The result keeps the input dtype.
    """
    if target < 1:
        raise DomainError(f"target extent must be >= 1, got {target}")
    arr = np.asarray(arr)
    length = arr.shape[axis]
    lines = np.ascontiguousarray(np.moveaxis(arr, axis, -1), dtype=np.float64)
    if length == 1:
        out = np.repeat(lines, target, axis=-1)
    else:
        if target == 1:
            positions = np.array([(length - 1) / 2.0])
        else:
            # o*(L-1) is an exact float64 integer, so the last position is exactly L-1
            positions = np.arange(target, dtype=np.float64) * (length - 1) / (target - 1)
        coef = _prefilter_last_axis(lines)
        out = _eval_last_axis(coef, positions)
    return np.moveaxis(out, -1, axis).astype(arr.dtype, copy=False)


def zoom_axis_cubic(vol: Volume, target: int) -> Volume:
    """Resample a volume's depth axis to ``target`` planes."""
    data = zoom_array_axis(vol.data, 2, target)
    return Volume(data, vol.voxel_units, vol.source_id)
