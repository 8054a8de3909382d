"""Synthetic chest phantoms with voxel-countable ground truth.

Each volume is piecewise constant in HU: air background, a soft-tissue
elliptic cylinder (the body), an ellipsoidal lung region, and for positive
cases lesion spheres at exactly +50 HU inside the lung. Because no noise is
added, the lesion fraction is a literal voxel count and the label rule
``label = 1 iff lesion fraction > tau`` can be checked after the fact.

Every volume is generated from ``default_rng([seed, index])``, so sample i is
reproducible in isolation and generation parallelizes over indices without
changing results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, GenerationError
from .volume import Volume, VoxelUnits

HU_AIR = -1000.0
HU_LUNG = -800.0
HU_TISSUE = 40.0
HU_LESION = 50.0

_MAX_ATTEMPTS = 1000


@dataclass(frozen=True)
class SynthSpec:
    count: int = 16
    plane: tuple = (64, 64)
    depth_range: tuple = (50, 400)
    lesion_count_range: tuple = (1, 3)
    lesion_radius_range: tuple = (4.0, 9.0)
    tau: float = 1e-4
    positive_fraction: float = 0.5
    lesion_band: tuple = None  # (z0, z1) depth fractions confining class-1 lesions
    seed: int = 0

    def __post_init__(self):
        if self.count < 0:
            raise ConfigError(f"count must be >= 0, got {self.count}")
        if len(self.plane) != 2 or any(int(e) < 16 for e in self.plane):
            raise ConfigError(f"plane extents must be >= 16, got {self.plane}")
        lo, hi = self.depth_range
        if not 1 <= lo <= hi <= 500:
            raise ConfigError(f"depth_range must satisfy 1 <= lo <= hi <= 500, got {self.depth_range}")
        clo, chi = self.lesion_count_range
        if not 1 <= clo <= chi:
            raise ConfigError(f"lesion_count_range must satisfy 1 <= lo <= hi, got {self.lesion_count_range}")
        rlo, rhi = self.lesion_radius_range
        if not 0 < rlo <= rhi:
            raise ConfigError(f"lesion_radius_range must satisfy 0 < lo <= hi, got {self.lesion_radius_range}")
        if not 0.0 < self.tau < 1.0:
            raise ConfigError(f"tau must be in (0, 1), got {self.tau}")
        if not 0.0 <= self.positive_fraction <= 1.0:
            raise ConfigError(f"positive_fraction must be in [0, 1], got {self.positive_fraction}")
        if self.lesion_band is not None:
            b0, b1 = self.lesion_band
            if not 0.0 <= b0 < b1 <= 1.0:
                raise ConfigError(f"lesion_band must satisfy 0 <= z0 < z1 <= 1, got {self.lesion_band}")


@dataclass(frozen=True)
class SynthSample:
    volume: Volume
    label: int


def lesion_fraction(data) -> float:
    """Fraction of voxels at the lesion value (exact: the phantom is noiseless)."""
    if isinstance(data, Volume):
        data = data.data
    return float(np.count_nonzero(data == HU_LESION)) / data.size


def _phantom_base(w, h, d):
    """Air background, soft-tissue body cylinder, ellipsoidal lung."""
    cx, cy, cz = (w - 1) / 2.0, (h - 1) / 2.0, (d - 1) / 2.0
    xs = np.arange(w).reshape(-1, 1, 1)
    ys = np.arange(h).reshape(1, -1, 1)
    zs = np.arange(d).reshape(1, 1, -1)
    vol = np.full((w, h, d), HU_AIR, dtype=np.float32)
    body = ((xs - cx) / (0.45 * w)) ** 2 + ((ys - cy) / (0.45 * h)) ** 2 <= 1.0
    vol[np.broadcast_to(body, vol.shape)] = HU_TISSUE
    lung = (
        ((xs - cx) / (0.32 * w)) ** 2
        + ((ys - cy) / (0.32 * h)) ** 2
        + ((zs - cz) / (0.46 * d)) ** 2
    ) <= 1.0
    vol[lung] = HU_LUNG
    return vol


def _paint_lesion(vol, rng, radius_range, z_limits):
    """Try to place one sphere whose voxels are all currently lung; True on success."""
    w, h, d = vol.shape
    cx, cy, cz = (w - 1) / 2.0, (h - 1) / 2.0, (d - 1) / 2.0
    ax, ay, az = 0.32 * w, 0.32 * h, 0.46 * d
    r_lo = float(radius_range[0])
    if ax - r_lo <= 0 or ay - r_lo <= 0:
        raise GenerationError(
            f"plane {(w, h)} is too small for radius-{r_lo} lesions inside the lung"
        )
    if z_limits is not None and (z_limits[1] - z_limits[0]) * d <= 2 * r_lo:
        raise GenerationError(
            f"band {z_limits} at depth {d} cannot hold a radius-{r_lo} lesion"
        )
    elif z_limits is None and az - r_lo <= 0:
        raise GenerationError(f"depth {d} is too small for radius-{r_lo} lesions")
    for _ in range(_MAX_ATTEMPTS):
        r = float(rng.uniform(radius_range[0], radius_range[1]))
        sx = ax - r
        sy = ay - r
        sz = az - r
        if sx <= 0 or sy <= 0:
            continue
        px = float(rng.uniform(cx - sx, cx + sx))
        py = float(rng.uniform(cy - sy, cy + sy))
        if z_limits is not None:
            z_lo = z_limits[0] * d + r
            z_hi = z_limits[1] * d - r
            if z_hi <= z_lo:
                continue
            pz = float(rng.uniform(z_lo, z_hi))
        else:
            if sz <= 0:
                continue
            pz = float(rng.uniform(cz - sz, cz + sz))
        x0, x1 = max(int(math.ceil(px - r)), 0), min(int(math.floor(px + r)), w - 1)
        y0, y1 = max(int(math.ceil(py - r)), 0), min(int(math.floor(py + r)), h - 1)
        z0, z1 = max(int(math.ceil(pz - r)), 0), min(int(math.floor(pz + r)), d - 1)
        if x0 > x1 or y0 > y1 or z0 > z1:
            continue
        box = vol[x0:x1 + 1, y0:y1 + 1, z0:z1 + 1]
        gx = (np.arange(x0, x1 + 1).reshape(-1, 1, 1) - px) ** 2
        gy = (np.arange(y0, y1 + 1).reshape(1, -1, 1) - py) ** 2
        gz = (np.arange(z0, z1 + 1).reshape(1, 1, -1) - pz) ** 2
        sphere = gx + gy + gz <= r * r
        if not sphere.any():
            continue
        if not np.all(box[sphere] == HU_LUNG):
            continue
        box[sphere] = HU_LESION
        return True
    return False


def generate_one(spec: SynthSpec, index: int) -> SynthSample:
    """Deterministically generate sample ``index`` of the dataset."""
    rng = np.random.default_rng([int(spec.seed), int(index)])
    w, h = (int(e) for e in spec.plane)
    depth = int(rng.integers(spec.depth_range[0], spec.depth_range[1] + 1))
    positive = bool(rng.random() < spec.positive_fraction)
    base = _phantom_base(w, h, depth)
    source_id = f"synth-{spec.seed}-{index:04d}"
    if not positive:
        return SynthSample(Volume(base, VoxelUnits.HOUNSFIELD, source_id), 0)
    for _ in range(_MAX_ATTEMPTS):
        vol = base.copy()
        k = int(rng.integers(spec.lesion_count_range[0], spec.lesion_count_range[1] + 1))
        placed = all(
            _paint_lesion(vol, rng, spec.lesion_radius_range, spec.lesion_band)
            for _ in range(k)
        )
        if placed and lesion_fraction(vol) > spec.tau:
            return SynthSample(Volume(vol, VoxelUnits.HOUNSFIELD, source_id), 1)
    raise GenerationError(
        f"sample {index}: could not reach a lesion fraction above {spec.tau} "
        f"in {_MAX_ATTEMPTS} attempts"
    )


def generate(spec: SynthSpec) -> list:
    return [generate_one(spec, i) for i in range(spec.count)]


def depth_localized_variant(spec: SynthSpec, band=(0.35, 0.45)) -> SynthSpec:
    """Spec whose positive lesions sit entirely inside a narrow depth band."""
    return replace(spec, lesion_band=(float(band[0]), float(band[1])))
