"""Single-file checkpoints: a text manifest plus one array blob per tensor.

Layout: magic ``VOLC``, a version byte, a little-endian u32 entry count, then
entries of (u16 name length, name, u64 payload length, payload). The first
entry is always ``manifest``, holding sorted key=value lines (configuration,
seed, epochs run, and caller extras under an ``x.`` prefix). Every other
entry is a float32 array blob covering model parameters, batch-norm running
statistics, and optimizer velocities, so loading reproduces training state
bit for bit. Nothing time- or host-dependent is written.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from ..errors import ConfigError, FormatError, IoError, TruncationError
from ..fileio import vol1_decode, vol1_encode
from .model import Model, ModelConfig
from .optim import SGD
from .train import TrainConfig

MAGIC = b"VOLC"
VERSION = 1


@dataclass
class CheckpointBundle:
    model: Model
    optimizer: SGD
    model_config: ModelConfig
    train_config: TrainConfig
    extra: dict


def _format_manifest(model_config: ModelConfig, train_config: TrainConfig, extra: dict) -> str:
    items = {
        "input_shape": ",".join(str(e) for e in model_config.input_shape),
        "conv_filters": ",".join(str(f) for f in model_config.conv_filters),
        "fc_width": str(model_config.fc_width),
        "classes": str(model_config.classes),
        "dropout_rates": ",".join(repr(r) for r in model_config.dropout_rates),
        "bn_momentum": repr(model_config.bn_momentum),
        "bn_eps": repr(model_config.bn_eps),
        "in_channels": str(model_config.in_channels),
        "dtype": model_config.dtype,
        "lr": repr(train_config.lr),
        "momentum": repr(train_config.momentum),
        "batch_size": str(train_config.batch_size),
        "epochs": str(train_config.epochs),
        "seed": str(train_config.seed),
    }
    for key, value in extra.items():
        text = str(value)
        if "\n" in text or "=" in key:
            raise ConfigError(f"extra field {key!r} must be a single line without '='")
        items["x." + key] = text
    return "\n".join(f"{k}={items[k]}" for k in sorted(items)) + "\n"


def _parse_manifest(text: str):
    fields = {}
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        fields[key] = value

    def ints(key):
        return tuple(int(v) for v in fields[key].split(","))

    def floats(key):
        return tuple(float(v) for v in fields[key].split(","))

    try:
        model_config = ModelConfig(
            input_shape=ints("input_shape"),
            conv_filters=ints("conv_filters"),
            fc_width=int(fields["fc_width"]),
            classes=int(fields["classes"]),
            dropout_rates=floats("dropout_rates"),
            bn_momentum=float(fields["bn_momentum"]),
            bn_eps=float(fields["bn_eps"]),
            in_channels=int(fields["in_channels"]),
            dtype=fields["dtype"],
        )
        train_config = TrainConfig(
            lr=float(fields["lr"]),
            momentum=float(fields["momentum"]),
            batch_size=int(fields["batch_size"]),
            epochs=int(fields["epochs"]),
            seed=int(fields["seed"]),
        )
    except KeyError as exc:
        raise FormatError(f"checkpoint manifest is missing field {exc}") from exc
    extra = {k[2:]: v for k, v in fields.items() if k.startswith("x.")}
    return model_config, train_config, extra


def checkpoint_bytes(model: Model, optimizer: SGD, train_config: TrainConfig, extra=None) -> bytes:
    if model.config.dtype != "float32":
        raise ConfigError("checkpoints store 32-bit floats; train in float32 to save")
    manifest = _format_manifest(model.config, train_config, extra or {})
    entries = [("manifest", manifest.encode("ascii"))]
    for name, arr in model.state_arrays():
        entries.append((name, vol1_encode(arr)))
    for name, arr in optimizer.state_arrays():
        entries.append((name, vol1_encode(arr)))
    parts = [MAGIC, bytes([VERSION]), struct.pack("<I", len(entries))]
    for name, payload in entries:
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<Q", len(payload)))
        parts.append(payload)
    return b"".join(parts)


def save_checkpoint(path, model: Model, optimizer: SGD, train_config: TrainConfig, extra=None):
    blob = checkpoint_bytes(model, optimizer, train_config, extra)
    try:
        with open(path, "wb") as fh:
            fh.write(blob)
    except OSError as exc:
        raise IoError(f"cannot write checkpoint {path}: {exc}") from exc


def load_checkpoint(path) -> CheckpointBundle:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read checkpoint {path}: {exc}") from exc
    if len(raw) < 9:
        raise TruncationError(f"checkpoint is {len(raw)} bytes, header needs 9")
    if raw[:4] != MAGIC:
        raise FormatError(f"bad checkpoint magic {raw[:4]!r}")
    if raw[4] != VERSION:
        raise FormatError(f"unsupported checkpoint version {raw[4]}")
    (count,) = struct.unpack_from("<I", raw, 5)
    offset = 9
    entries = {}
    order = []
    for _ in range(count):
        if offset + 2 > len(raw):
            raise TruncationError("checkpoint ends inside an entry header")
        (name_len,) = struct.unpack_from("<H", raw, offset)
        offset += 2
        if offset + name_len + 8 > len(raw):
            raise TruncationError("checkpoint ends inside an entry header")
        name = raw[offset:offset + name_len].decode("utf-8")
        offset += name_len
        (payload_len,) = struct.unpack_from("<Q", raw, offset)
        offset += 8
        if offset + payload_len > len(raw):
            raise TruncationError(f"entry {name!r} payload is truncated")
        entries[name] = raw[offset:offset + payload_len]
        order.append(name)
        offset += payload_len
    if offset != len(raw):
        raise FormatError(f"{len(raw) - offset} trailing bytes after the last entry")
    if "manifest" not in entries:
        raise FormatError("checkpoint has no manifest entry")
    model_config, train_config, extra = _parse_manifest(entries["manifest"].decode("ascii"))
    arrays = {name: vol1_decode(entries[name]) for name in order if name != "manifest"}
    model = Model(model_config)
    try:
        model.load_state(arrays)
        optimizer = SGD(model.params(), train_config.lr, train_config.momentum)
        optimizer.load_state(arrays)
    except KeyError as exc:
        raise FormatError(f"checkpoint is missing array {exc}") from exc
    return CheckpointBundle(model, optimizer, model_config, train_config, extra)
