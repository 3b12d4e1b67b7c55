"""Flat binary container for model weights.

Layout (all integers little-endian u32, all floats little-endian f64):

    magic   4 bytes  b"SEVM"
    version u32      currently 1
    layers  u32      number of layers in the spec
    then per layer:
        tensors u32          0 for parameter-free layers, else 2
        per tensor (weight then bias):
            ndim u32
            dims u32 * ndim
            data f64 * prod(dims), row-major

The spec itself is not serialized; loading validates the tensors against a
caller-supplied NetworkSpec.
"""

from __future__ import annotations

import struct

import numpy as np

from .network import TrainedModel
from .spec import NetworkSpec

MAGIC = b"SEVM"
VERSION = 1


class ModelFormatError(ValueError):
    pass


def _tensors(layer_weights):
    return [layer_weights[key] for key in ("weight", "bias")
            if key in layer_weights]


def dump_model(model: TrainedModel) -> bytes:
    parts = [MAGIC, struct.pack("<II", VERSION, len(model.weights))]
    for layer in model.weights:
        tensors = _tensors(layer)
        parts.append(struct.pack("<I", len(tensors)))
        for tensor in tensors:
            parts.append(struct.pack("<I", tensor.ndim))
            parts.append(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
            parts.append(np.ascontiguousarray(tensor, dtype="<f8").tobytes())
    return b"".join(parts)


def save_model(model: TrainedModel, path):
    with open(path, "wb") as fh:
        fh.write(dump_model(model))


def _read(buf, offset, fmt):
    size = struct.calcsize(fmt)
    if offset + size > len(buf):
        raise ModelFormatError(f"truncated container at byte {len(buf)}")
    return struct.unpack_from(fmt, buf, offset), offset + size


def parse_model(buf: bytes, spec: NetworkSpec) -> TrainedModel:
    if buf[:4] != MAGIC:
        raise ModelFormatError(f"bad magic {buf[:4]!r}, expected {MAGIC!r}")
    (version, layer_count), offset = _read(buf, 4, "<II")
    if version != VERSION:
        raise ModelFormatError(f"unsupported version {version}")
    weights = []
    for _ in range(layer_count):
        (tensor_count,), offset = _read(buf, offset, "<I")
        tensors = []
        for _ in range(tensor_count):
            (ndim,), offset = _read(buf, offset, "<I")
            dims, offset = _read(buf, offset, f"<{ndim}I")
            count = int(np.prod(dims, dtype=np.int64)) if ndim else 1
            end = offset + 8 * count
            if end > len(buf):
                raise ModelFormatError(f"truncated tensor data at byte {len(buf)}")
            data = np.frombuffer(buf, dtype="<f8", count=count, offset=offset)
            tensors.append(data.reshape(dims).astype(np.float64))
            offset = end
        if tensor_count == 0:
            weights.append({})
        elif tensor_count == 2:
            weights.append({"weight": tensors[0], "bias": tensors[1]})
        else:
            raise ModelFormatError(f"unexpected tensor count {tensor_count}")
    if offset != len(buf):
        raise ModelFormatError(f"{len(buf) - offset} trailing bytes")
    return TrainedModel(spec, weights)


def load_model(path, spec: NetworkSpec) -> TrainedModel:
    with open(path, "rb") as fh:
        return parse_model(fh.read(), spec)
