"""Reading CT volumes from single-file NIfTI-1 and a small VOL1 tensor format.

The NIfTI support is deliberately narrow: single-file ("n+1") images of rank
3 in one of five voxel datatypes, optionally gzipped, with slope/intercept
scaling. Orientation metadata is ignored. VOL1 is this package's own fixture
format for tensors of any rank: a fixed little-endian header followed by a
row-major float32 payload.
"""

from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np

from .errors import (
    FormatError,
    IoError,
    ShapeError,
    TruncationError,
    UnsupportedDatatype,
    UnsupportedRank,
)
from .volume import PIPELINE_DTYPE, Volume, VoxelUnits

NIFTI_HEADER_SIZE = 348
NIFTI_MAGIC = b"n+1\x00"
# sizeof_hdr == 348 read with the wrong byte order
NIFTI_SWAPPED_HDR = 1543569408

# NIfTI datatype code -> numpy type
NIFTI_DTYPES = {
    2: np.uint8,
    4: np.int16,
    8: np.int32,
    16: np.float32,
    64: np.float64,
}
NIFTI_CODES = {np.dtype(t).name: code for code, t in NIFTI_DTYPES.items()}

VOL1_MAGIC = b"VOL1"
VOL1_VERSION = 1
VOL1_ENDIAN_MARK = 0x0102


def _read_bytes(path) -> bytes:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(str(exc)) from exc
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def read_nifti(path) -> Volume:
    """Parse a single-file NIfTI-1 image into a Hounsfield-unit Volume."""
    raw = _read_bytes(path)
    if len(raw) < NIFTI_HEADER_SIZE:
        raise TruncationError(f"{path}: {len(raw)} bytes is shorter than a header")

    (sizeof_hdr,) = struct.unpack_from("<i", raw, 0)
    if sizeof_hdr == NIFTI_HEADER_SIZE:
        bo = "<"
    elif sizeof_hdr == NIFTI_SWAPPED_HDR:
        bo = ">"
    else:
        raise FormatError(f"{path}: sizeof_hdr {sizeof_hdr} is not a NIfTI-1 header")

    magic = raw[344:348]
    if magic != NIFTI_MAGIC:
        raise FormatError(f"{path}: magic {magic!r} is not single-file NIfTI-1")

    dim = struct.unpack_from(bo + "8h", raw, 40)
    (datatype,) = struct.unpack_from(bo + "h", raw, 70)
    (vox_offset,) = struct.unpack_from(bo + "f", raw, 108)
    scl_slope, scl_inter = struct.unpack_from(bo + "2f", raw, 112)

    if dim[0] != 3:
        raise UnsupportedRank(f"{path}: dim[0]={dim[0]}, only rank-3 volumes supported")
    if datatype not in NIFTI_DTYPES:
        raise UnsupportedDatatype(f"{path}: datatype code {datatype} unsupported")

    w, h, d = (int(x) for x in dim[1:4])
    if min(w, h, d) < 1:
        raise FormatError(f"{path}: non-positive extents {(w, h, d)}")
    count = w * h * d
    dt = np.dtype(NIFTI_DTYPES[datatype]).newbyteorder(bo)
    start = int(vox_offset)
    end = start + count * dt.itemsize
    if end > len(raw):
        raise TruncationError(f"{path}: payload needs {end} bytes, file has {len(raw)}")

    flat = np.frombuffer(raw[start:end], dtype=dt).astype(PIPELINE_DTYPE)
    if scl_slope != 0.0:
        flat = flat * PIPELINE_DTYPE(scl_slope) + PIPELINE_DTYPE(scl_inter)
    # on disk the first dimension varies fastest
    data = np.ascontiguousarray(flat.reshape(d, h, w).transpose(2, 1, 0))
    return Volume(data, VoxelUnits.HOUNSFIELD, source_id=Path(path).stem)


def write_nifti_fixture(vol: Volume, path, datatype="float32", scl_slope=1.0, scl_inter=0.0):
    """Write a minimal single-file NIfTI-1 fixture.

    This is a test-fixture generator, not a general writer: it emits only the
    fields read_nifti consumes. Raw values are stored as (v - inter) / slope
    so the file reads back to ``vol`` for any slope/intercept pair.
    """
    name = np.dtype(datatype).name
    if name not in NIFTI_CODES:
        raise UnsupportedDatatype(f"datatype {datatype!r} not in supported set")
    code = NIFTI_CODES[name]
    dt = np.dtype(NIFTI_DTYPES[code]).newbyteorder("<")

    values = vol.data.astype(np.float64)
    if scl_slope != 0.0:
        values = (values - scl_inter) / scl_slope
    if np.issubdtype(dt, np.integer):
        values = np.rint(values)
    payload = values.transpose(2, 1, 0).astype(dt).tobytes()

    w, h, d = vol.shape
    header = bytearray(NIFTI_HEADER_SIZE)
    struct.pack_into("<i", header, 0, NIFTI_HEADER_SIZE)
    struct.pack_into("<8h", header, 40, 3, w, h, d, 1, 1, 1, 1)
    struct.pack_into("<h", header, 70, code)
    struct.pack_into("<h", header, 72, dt.itemsize * 8)
    struct.pack_into("<f", header, 108, float(NIFTI_HEADER_SIZE + 4))
    struct.pack_into("<2f", header, 112, scl_slope, scl_inter)
    header[344:348] = NIFTI_MAGIC

    try:
        with open(path, "wb") as fh:
            fh.write(bytes(header))
            fh.write(b"\x00\x00\x00\x00")  # empty extension indicator, pads vox_offset to 352
            fh.write(payload)
    except OSError as exc:
        raise IoError(str(exc)) from exc


def vol1_encode(arr: np.ndarray) -> bytes:
    """Serialize a tensor to VOL1 bytes (header + row-major float32 payload)."""
    arr = np.asarray(arr)
    if arr.ndim < 1 or arr.ndim > 255:
        raise ShapeError(f"VOL1 supports rank 1..255, got {arr.ndim}")
    if min(arr.shape) < 1:
        raise ShapeError(f"VOL1 extents must be positive, got {arr.shape}")
    head = VOL1_MAGIC + struct.pack("<BHB", VOL1_VERSION, VOL1_ENDIAN_MARK, arr.ndim)
    head += struct.pack(f"<{arr.ndim}I", *arr.shape)
    return head + np.ascontiguousarray(arr, dtype="<f4").tobytes()


def vol1_decode(raw: bytes) -> np.ndarray:
    """Inverse of :func:`vol1_encode`."""
    if len(raw) < 8 or raw[:4] != VOL1_MAGIC:
        raise FormatError(f"bad VOL1 magic {raw[:4]!r}")
    version, mark, ndim = struct.unpack_from("<BHB", raw, 4)
    if version != VOL1_VERSION:
        raise FormatError(f"unsupported VOL1 version {version}")
    if mark != VOL1_ENDIAN_MARK:
        raise FormatError(f"VOL1 endianness marker {mark:#06x} != {VOL1_ENDIAN_MARK:#06x}")
    if len(raw) < 8 + 4 * ndim:
        raise TruncationError("VOL1 header truncated")
    shape = struct.unpack_from(f"<{ndim}I", raw, 8)
    if ndim == 0 or min(shape) < 1:
        raise FormatError(f"VOL1 extents must be positive, got {shape}")
    start = 8 + 4 * ndim
    count = int(np.prod(shape))
    end = start + 4 * count
    if len(raw) < end:
        raise TruncationError(f"VOL1 payload needs {end - start} bytes, file has {len(raw) - start}")
    if len(raw) > end:
        raise FormatError(f"{len(raw) - end} trailing bytes after VOL1 payload")
    return np.frombuffer(raw[start:end], dtype="<f4").reshape(shape).copy()


def write_vol1(arr: np.ndarray, path):
    encoded = vol1_encode(arr)
    try:
        Path(path).write_bytes(encoded)
    except OSError as exc:
        raise IoError(str(exc)) from exc


def read_vol1(path) -> np.ndarray:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(str(exc)) from exc
    return vol1_decode(raw)
