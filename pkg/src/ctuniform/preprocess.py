"""Intensity preprocessing: HU windowing to [0, 1] and mean centering.

The default window clamps the usual chest-CT range (-1000 air to +400 soft
tissue / bone margin) before rescaling. A per-volume min-max mode exists for
ablations where no global window is appropriate.

Statistics are fit once on the training set and applied everywhere else.
Accumulation is order-deterministic: one 64-bit sum per volume, combined with
``math.fsum`` so the result never depends on chunking or thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EmptyInputError, IoError, PhaseError

DEFAULT_HU_WINDOW = (-1000.0, 400.0)

PHASE_RAW = "raw"
PHASE_NORMALIZED = "normalized"


@dataclass(frozen=True)
class DatasetStats:
    """Training-set statistics captured after normalization."""

    hu_window: tuple  # (lo, hi) the tensors were normalized with
    dataset_mean: float
    computed_over: int  # number of training volumes
    phase: str = PHASE_NORMALIZED


def normalize(tensor: np.ndarray, window=DEFAULT_HU_WINDOW) -> np.ndarray:
    """Clamp to the window and rescale to [0, 1], keeping the input dtype."""
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise ConfigError(f"window must satisfy lo < hi, got ({lo}, {hi})")
    tensor = np.asarray(tensor)
    scale = tensor.dtype.type(1.0 / (hi - lo))
    shifted = (tensor - tensor.dtype.type(lo)) * scale
    return np.clip(shifted, 0.0, 1.0).astype(tensor.dtype, copy=False)


def per_volume_window(tensor: np.ndarray) -> tuple:
    """Min-max window of one volume, widened when the volume is constant."""
    lo = float(np.min(tensor))
    hi = float(np.max(tensor))
    if lo == hi:
        hi = lo + 1.0
    return (lo, hi)


def fit_stats(tensors, hu_window=DEFAULT_HU_WINDOW, phase=PHASE_NORMALIZED) -> DatasetStats:
    """Mean over a set of equally weighted voxels, one compensated sum per volume."""
    sums = []
    counts = []
    for t in tensors:
        t = np.asarray(t)
        if t.size == 0:
            raise EmptyInputError("cannot fit statistics on an empty tensor")
        sums.append(float(np.sum(t, dtype=np.float64)))
        counts.append(t.size)
    if not sums:
        raise EmptyInputError("cannot fit statistics on an empty training set")
    mean = math.fsum(sums) / float(sum(counts))
    return DatasetStats(
        hu_window=(float(hu_window[0]), float(hu_window[1])),
        dataset_mean=mean,
        computed_over=len(sums),
        phase=phase,
    )


def zero_center(tensor: np.ndarray, stats: DatasetStats) -> np.ndarray:
    """Subtract the training mean; only valid after normalization."""
    if stats.phase != PHASE_NORMALIZED:
        raise PhaseError(
            f"zero-centering requires statistics fit on normalized data, got phase={stats.phase!r}"
        )
    tensor = np.asarray(tensor)
    return tensor - tensor.dtype.type(stats.dataset_mean)


def save_stats(stats: DatasetStats, path) -> None:
    """Persist statistics as sorted key=value lines (no timestamps)."""
    lines = [
        f"computed_over={stats.computed_over}",
        f"dataset_mean={stats.dataset_mean!r}",
        f"hu_hi={stats.hu_window[1]!r}",
        f"hu_lo={stats.hu_window[0]!r}",
        f"phase={stats.phase}",
    ]
    try:
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write stats file {path}: {exc}") from exc


def load_stats(path) -> DatasetStats:
    try:
        with open(path, "r", encoding="ascii") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read stats file {path}: {exc}") from exc
    fields = {}
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        fields[key] = value
    try:
        return DatasetStats(
            hu_window=(float(fields["hu_lo"]), float(fields["hu_hi"])),
            dataset_mean=float(fields["dataset_mean"]),
            computed_over=int(fields["computed_over"]),
            phase=fields["phase"],
        )
    except KeyError as exc:
        raise IoError(f"stats file {path} is missing field {exc}") from exc
