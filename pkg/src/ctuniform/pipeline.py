"""Dataset plumbing shared by the CLI and the test suite.

A dataset on disk is a manifest CSV (``id,path,label``) next to its files.
Raw volumes are NIfTI; uniformized tensors are VOL1 blobs. Relative manifest
paths resolve against the manifest's directory, so a dataset directory can be
moved as a unit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, EmptyInputError, FormatError, IoError, ShapeError
from .fileio import read_nifti, read_vol1, write_vol1
from .parallel import parallel_map
from .preprocess import (
    DEFAULT_HU_WINDOW,
    DatasetStats,
    fit_stats,
    normalize,
    per_volume_window,
    zero_center,
)
from .uniformize import UniformizeSpec, uniformize
from .volume import Volume, VoxelUnits

MANIFEST_HEADER = ("id", "path", "label")

WINDOW_FIXED = "fixed"
WINDOW_MINMAX = "minmax"


@dataclass(frozen=True)
class ManifestRow:
    id: str
    path: Path
    label: int


def load_manifest(path) -> list:
    path = Path(path)
    try:
        with open(path, "r", encoding="ascii", newline="") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
    except OSError as exc:
        raise IoError(f"cannot read manifest {path}: {exc}") from exc
    if not rows or tuple(rows[0]) != MANIFEST_HEADER:
        raise FormatError(f"manifest {path} must start with header id,path,label")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise FormatError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
        sample_id, rel, label_text = row
        try:
            label = int(label_text)
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: label {label_text!r} is not an integer") from exc
        if label not in (0, 1):
            raise FormatError(f"{path}:{lineno}: label must be 0 or 1, got {label}")
        resolved = Path(rel)
        if not resolved.is_absolute():
            resolved = path.parent / resolved
        out.append(ManifestRow(sample_id, resolved, label))
    if not out:
        raise EmptyInputError(f"manifest {path} lists no samples")
    return out


def write_manifest(entries, path) -> None:
    """entries: (id, relative_or_absolute_path_string, label) triples."""
    path = Path(path)
    try:
        with open(path, "w", encoding="ascii", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(MANIFEST_HEADER)
            for sample_id, rel, label in entries:
                writer.writerow([sample_id, rel, int(label)])
    except OSError as exc:
        raise IoError(f"cannot write manifest {path}: {exc}") from exc


def load_volume(path) -> Volume:
    path = Path(path)
    if path.suffix == ".vol1":
        data = read_vol1(path)
        if data.ndim != 3:
            raise ShapeError(f"{path}: expected a rank-3 tensor, got rank {data.ndim}")
        return Volume(data, VoxelUnits.HOUNSFIELD, path.stem)
    return read_nifti(path)


def load_tensor(path) -> np.ndarray:
    return load_volume(path).data


def uniformize_files(rows, spec: UniformizeSpec, out_dir, threads=1) -> Path:
    """Uniformize every manifest row into out_dir; returns the new manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def one(row: ManifestRow):
        tensor = uniformize(load_volume(row.path), spec).tensor
        name = row.id + ".vol1"
        write_vol1(tensor, out_dir / name)
        return (row.id, name, row.label)

    entries = parallel_map(one, rows, threads)
    manifest_path = out_dir / "manifest.csv"
    write_manifest(entries, manifest_path)
    return manifest_path


def load_dataset(rows, threads=1):
    """Read tensors for every row; returns (ids, stack, labels)."""
    tensors = parallel_map(lambda r: load_tensor(r.path), rows, threads)
    first = tensors[0].shape
    for row, t in zip(rows, tensors):
        if t.shape != first:
            raise ShapeError(f"{row.path}: shape {t.shape} differs from {first}")
    ids = [r.id for r in rows]
    labels = np.array([r.label for r in rows], dtype=np.int64)
    return ids, np.stack(tensors), labels


@dataclass(frozen=True)
class PreprocessPlan:
    """What intensity preprocessing a run applies, in order."""

    normalize: bool = False
    zero_center: bool = False
    window_mode: str = WINDOW_FIXED
    window: tuple = DEFAULT_HU_WINDOW

    def __post_init__(self):
        if self.zero_center and not self.normalize:
            raise ConfigError("zero-centering requires normalization first")
        if self.window_mode not in (WINDOW_FIXED, WINDOW_MINMAX):
            raise ConfigError(f"window_mode must be fixed or minmax, got {self.window_mode!r}")
        lo, hi = self.window
        if not float(lo) < float(hi):
            raise ConfigError(f"window must satisfy lo < hi, got {self.window}")


def normalize_stack(stack: np.ndarray, plan: PreprocessPlan) -> np.ndarray:
    if not plan.normalize:
        return stack
    if plan.window_mode == WINDOW_MINMAX:
        return np.stack([normalize(t, per_volume_window(t)) for t in stack])
    return normalize(stack, plan.window)


def fit_plan_stats(normalized_stack: np.ndarray, plan: PreprocessPlan):
    """Dataset statistics for the plan; None when nothing downstream needs them."""
    if not plan.zero_center:
        return None
    window = plan.window if plan.window_mode == WINDOW_FIXED else (0.0, 1.0)
    return fit_stats(list(normalized_stack), hu_window=window)


def apply_plan(stack: np.ndarray, plan: PreprocessPlan, stats: DatasetStats = None) -> np.ndarray:
    out = normalize_stack(stack, plan)
    if plan.zero_center:
        if stats is None:
            raise ConfigError("zero-centering needs dataset statistics")
        out = zero_center(out, stats)
    return out


def plan_to_extra(plan: PreprocessPlan, stats) -> dict:
    """Checkpoint manifest fields that let evaluation replay the preprocessing."""
    extra = {
        "normalize": "1" if plan.normalize else "0",
        "zero_center": "1" if plan.zero_center else "0",
        "window_mode": plan.window_mode,
        "hu_lo": repr(float(plan.window[0])),
        "hu_hi": repr(float(plan.window[1])),
    }
    if stats is not None:
        extra["dataset_mean"] = repr(stats.dataset_mean)
        extra["stats_over"] = str(stats.computed_over)
    return extra


def plan_from_extra(extra: dict):
    """Inverse of plan_to_extra; returns (plan, stats or None)."""
    try:
        plan = PreprocessPlan(
            normalize=extra["normalize"] == "1",
            zero_center=extra["zero_center"] == "1",
            window_mode=extra["window_mode"],
            window=(float(extra["hu_lo"]), float(extra["hu_hi"])),
        )
    except KeyError as exc:
        raise FormatError(f"checkpoint is missing preprocessing field {exc}") from exc
    stats = None
    if plan.zero_center:
        if "dataset_mean" not in extra:
            raise FormatError("checkpoint is missing the dataset mean for zero-centering")
        window = plan.window if plan.window_mode == WINDOW_FIXED else (0.0, 1.0)
        stats = DatasetStats(
            hu_window=window,
            dataset_mean=float(extra["dataset_mean"]),
            computed_over=int(extra.get("stats_over", "0")),
        )
    return plan, stats
