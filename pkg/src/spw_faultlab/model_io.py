"""File formats crossed by the trainer/engine boundary.

Weights container (extension .spww, all multi-byte header fields and values
little-endian):

    magic "SPWW" | version u16 | q-format integer-bits u8, fraction-bits u8
    | layer count u16 | per layer: kind u8 (1 conv, 2 dense), extents u16
    each (conv: filters, in_channels, kh, kw; dense: out, in), weights as
    int16 raw values then biases | crc32 u32 of every preceding byte

Dataset fixtures use the standard IDX encoding (big-endian headers, magic
0x00000803 for u8 image cubes and 0x00000801 for u8 label vectors), with a
JSON manifest carrying the true-label class balance, the fixture model's
golden fault-free predictions, and the float reference accuracy recorded
when the fixture was created.
"""

import json
import struct
import zlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import nn_engine

MAGIC = b"SPWW"
FORMAT_VERSION = 1
Q_INTEGER_BITS = 4
Q_FRACTION_BITS = 11
KIND_CONV = 1
KIND_DENSE = 2

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


def _layer_blob(kind, extents, weights, bias):
    parts = [struct.pack("<B", kind)]
    parts.append(struct.pack(f"<{len(extents)}H", *extents))
    parts.append(np.ascontiguousarray(weights, dtype="<i2").tobytes())
    parts.append(np.ascontiguousarray(bias, dtype="<i2").tobytes())
    return b"".join(parts)


def model_bytes(model):
    """Serialized container for a Model, CRC trailer included."""
    parts = [
        MAGIC,
        struct.pack("<H", FORMAT_VERSION),
        struct.pack("<BB", Q_INTEGER_BITS, Q_FRACTION_BITS),
        struct.pack("<H", 5),
    ]
    for name, layer in model.layer_items():
        if name.startswith("conv"):
            parts.append(_layer_blob(
                KIND_CONV, layer.weights.shape, layer.weights, layer.bias))
        else:
            parts.append(_layer_blob(
                KIND_DENSE, layer.weights.shape, layer.weights, layer.bias))
    payload = b"".join(parts)
    return payload + struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)


def write_model(model, path):
    with open(path, "wb") as f:
        f.write(model_bytes(model))


class _Reader:
    def __init__(self, blob):
        self.blob = blob
        self.pos = 0

    def take(self, n, what):
        if self.pos + n > len(self.blob):
            raise ValueError(f"weights file truncated while reading {what}")
        chunk = self.blob[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def u8(self, what):
        return self.take(1, what)[0]

    def u16(self, what):
        return struct.unpack("<H", self.take(2, what))[0]


def _parse_model(blob):
    if len(blob) < 4 + 2 + 2 + 2 + 4:
        raise ValueError("weights file too short to be a model container")
    payload, crc_bytes = blob[:-4], blob[-4:]
    crc_stored = struct.unpack("<I", crc_bytes)[0]
    crc_actual = zlib.crc32(payload) & 0xFFFFFFFF
    if crc_stored != crc_actual:
        raise ValueError(
            f"weights file CRC mismatch: stored {crc_stored:#010x}, "
            f"computed {crc_actual:#010x}")

    r = _Reader(payload)
    if r.take(4, "magic") != MAGIC:
        raise ValueError("bad magic bytes, not a weights container")
    version = r.u16("version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported container version {version}")
    qint, qfrac = r.u8("q-format"), r.u8("q-format")
    if (qint, qfrac) != (Q_INTEGER_BITS, Q_FRACTION_BITS):
        raise ValueError(f"unsupported q-format Q{qint}.{qfrac}")
    n_layers = r.u16("layer count")
    if n_layers != 5:
        raise ValueError(f"expected 5 layers, file declares {n_layers}")

    tensors = []
    for i in range(n_layers):
        kind = r.u8(f"layer {i} kind")
        if kind == KIND_CONV:
            extents = tuple(r.u16(f"layer {i} extent") for _ in range(4))
            n_out = extents[0]
        elif kind == KIND_DENSE:
            extents = tuple(r.u16(f"layer {i} extent") for _ in range(2))
            n_out = extents[0]
        else:
            raise ValueError(f"layer {i} has unknown kind tag {kind}")
        n_weights = int(np.prod(extents))
        w = np.frombuffer(
            r.take(2 * n_weights, f"layer {i} weights"), dtype="<i2")
        b = np.frombuffer(r.take(2 * n_out, f"layer {i} bias"), dtype="<i2")
        tensors.append(w.astype(np.int16).reshape(extents))
        tensors.append(b.astype(np.int16))
    if r.pos != len(payload):
        raise ValueError(f"{len(payload) - r.pos} trailing bytes after last layer")
    return nn_engine.build_model(tensors)


def read_model(path):
    """Load and fully verify a weights container."""
    with open(path, "rb") as f:
        return _parse_model(f.read())


@dataclass(frozen=True)
class ModelValidation:
    valid: bool
    problems: list
    info: dict


def validate_model(path):
    """Non-throwing check used by the validate-model command."""
    try:
        with open(path, "rb") as f:
            blob = f.read()
    except OSError as e:
        return ModelValidation(False, [str(e)], {})
    try:
        model = _parse_model(blob)
    except ValueError as e:
        return ModelValidation(False, [str(e)], {"file_bytes": len(blob)})
    weight_counts = tuple(
        int(layer.weights.size) for _, layer in model.layer_items())
    info = {
        "file_bytes": len(blob),
        "format_version": FORMAT_VERSION,
        "q_format": f"Q{Q_INTEGER_BITS}.{Q_FRACTION_BITS}",
        "weight_counts": weight_counts,
        "total_weights": sum(weight_counts),
        "total_biases": sum(
            int(layer.bias.size) for _, layer in model.layer_items()),
        "crc32": f"{zlib.crc32(blob[:-4]) & 0xFFFFFFFF:#010x}",
    }
    return ModelValidation(True, [], info)


# ---------------------------------------------------------------- IDX files

def write_idx_images(images, path):
    images = np.asarray(images, dtype=np.uint8)
    if images.ndim != 3:
        raise ValueError("image cube must be (count, rows, cols)")
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, *images.shape))
        f.write(images.tobytes())


def read_idx_images(path):
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < 16:
        raise ValueError("IDX image file truncated")
    magic, n, rows, cols = struct.unpack(">IIII", blob[:16])
    if magic != IDX_IMAGES_MAGIC:
        raise ValueError(f"bad IDX image magic {magic:#010x}")
    data = np.frombuffer(blob, dtype=np.uint8, offset=16)
    if data.size != n * rows * cols:
        raise ValueError("IDX image payload does not match header counts")
    return data.reshape(n, rows, cols).copy()


def write_idx_labels(labels, path):
    labels = np.asarray(labels, dtype=np.uint8)
    if labels.ndim != 1:
        raise ValueError("label vector must be 1-d")
    with open(path, "wb") as f:
        f.write(struct.pack(">II", IDX_LABELS_MAGIC, labels.size))
        f.write(labels.tobytes())


def read_idx_labels(path):
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < 8:
        raise ValueError("IDX label file truncated")
    magic, n = struct.unpack(">II", blob[:8])
    if magic != IDX_LABELS_MAGIC:
        raise ValueError(f"bad IDX label magic {magic:#010x}")
    data = np.frombuffer(blob, dtype=np.uint8, offset=8)
    if data.size != n:
        raise ValueError("IDX label payload does not match header count")
    return data.copy()


# ----------------------------------------------------------------- dataset

@dataclass(frozen=True)
class Dataset:
    images: np.ndarray                       # (N, 28, 28) uint8
    labels: np.ndarray                       # (N,) int64
    golden_predictions: Optional[np.ndarray] = None
    float_reference_accuracy: Optional[float] = None

    def __len__(self):
        return len(self.images)

    def class_counts(self):
        counts = np.bincount(self.labels, minlength=nn_engine.N_CLASSES)
        return {str(d): int(c) for d, c in enumerate(counts)}


def write_manifest(path, labels, golden_predictions, float_reference_accuracy):
    labels = np.asarray(labels)
    counts = np.bincount(labels, minlength=nn_engine.N_CLASSES)
    doc = {
        "count": int(labels.size),
        "class_counts": {str(d): int(c) for d, c in enumerate(counts)},
        "golden_predictions": [int(v) for v in golden_predictions],
        "float_reference_accuracy": float(float_reference_accuracy),
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


def load_dataset(images_path, labels_path, manifest_path=None):
    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path).astype(np.int64)
    if images.shape[0] != labels.size:
        raise ValueError(
            f"{images.shape[0]} images but {labels.size} labels")
    golden = None
    float_acc = None
    if manifest_path is not None:
        with open(manifest_path) as f:
            doc = json.load(f)
        if doc.get("count") != labels.size:
            raise ValueError("manifest count does not match label file")
        golden = np.asarray(doc["golden_predictions"], dtype=np.int64)
        if golden.size != labels.size:
            raise ValueError("manifest golden predictions length mismatch")
        float_acc = float(doc["float_reference_accuracy"])
    return Dataset(images, labels, golden, float_acc)
