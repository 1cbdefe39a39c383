"""Writers for the artifacts the lab consumes, plus a read-back parser.

The weights container, the IDX fixture pair, and the JSON manifest are the
whole contract between trainer and lab, so this module implements them from
the documented layout rather than reusing lab code. The parser exists to
close the loop: golden predictions are always computed from a re-parsed
copy of the exported bytes, never from in-memory tensors.
"""

import json
import struct
import zlib

import numpy as np

MAGIC = b"SPWW"
FORMAT_VERSION = 1
Q_INTEGER_BITS = 4
Q_FRACTION_BITS = 11
KIND_CONV = 1
KIND_DENSE = 2

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

LAYER_KINDS = (KIND_CONV, KIND_CONV, KIND_DENSE, KIND_DENSE, KIND_DENSE)
LAYER_NAMES = ("conv1", "conv2", "fc1", "fc2", "fc3")


def model_bytes(layers):
    """Container bytes for [(name, weights int16, bias int16)] layers."""
    parts = [
        MAGIC,
        struct.pack("<HBBH", FORMAT_VERSION, Q_INTEGER_BITS,
                    Q_FRACTION_BITS, len(layers)),
    ]
    for name, weights, bias in layers:
        kind = KIND_CONV if weights.ndim == 4 else KIND_DENSE
        if weights.ndim not in (2, 4):
            raise ValueError(f"{name}: unsupported rank {weights.ndim}")
        parts.append(struct.pack("<B", kind))
        parts.append(struct.pack(f"<{weights.ndim}H", *weights.shape))
        parts.append(np.ascontiguousarray(weights, "<i2").tobytes())
        parts.append(np.ascontiguousarray(bias, "<i2").tobytes())
    payload = b"".join(parts)
    return payload + struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)


def write_model(layers, path):
    with open(path, "wb") as f:
        f.write(model_bytes(layers))


def parse_model(blob):
    """[(name, weights, bias)] back out of container bytes, checks intact."""
    if len(blob) < 14:
        raise ValueError("container too short")
    stored = struct.unpack("<I", blob[-4:])[0]
    if zlib.crc32(blob[:-4]) & 0xFFFFFFFF != stored:
        raise ValueError("container CRC mismatch")
    if blob[:4] != MAGIC:
        raise ValueError("bad container magic")
    version, qint, qfrac, n_layers = struct.unpack_from("<HBBH", blob, 4)
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported container version {version}")
    if (qint, qfrac) != (Q_INTEGER_BITS, Q_FRACTION_BITS):
        raise ValueError(f"unsupported q-format Q{qint}.{qfrac}")
    if n_layers != len(LAYER_KINDS):
        raise ValueError(f"expected {len(LAYER_KINDS)} layers, got {n_layers}")

    pos = 10
    layers = []
    for name, want_kind in zip(LAYER_NAMES, LAYER_KINDS):
        kind = blob[pos]
        pos += 1
        if kind != want_kind:
            raise ValueError(f"{name}: unexpected layer kind {kind}")
        rank = 4 if kind == KIND_CONV else 2
        extents = struct.unpack_from(f"<{rank}H", blob, pos)
        pos += 2 * rank
        n = int(np.prod(extents))
        weights = np.frombuffer(blob, "<i2", n, pos).reshape(extents)
        pos += 2 * n
        bias = np.frombuffer(blob, "<i2", extents[0], pos)
        pos += 2 * extents[0]
        layers.append((name, weights.astype(np.int16),
                       bias.astype(np.int16)))
    if pos != len(blob) - 4:
        raise ValueError("trailing bytes after final layer")
    return layers


def read_model(path):
    with open(path, "rb") as f:
        return parse_model(f.read())


def write_idx_images(images, path):
    images = np.ascontiguousarray(images, np.uint8)
    n, h, w = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, n, h, w))
        f.write(images.tobytes())


def write_idx_labels(labels, path):
    labels = np.ascontiguousarray(labels, np.uint8)
    with open(path, "wb") as f:
        f.write(struct.pack(">II", IDX_LABELS_MAGIC, labels.size))
        f.write(labels.tobytes())


def read_idx_images(path):
    with open(path, "rb") as f:
        blob = f.read()
    magic, n, h, w = struct.unpack_from(">IIII", blob, 0)
    if magic != IDX_IMAGES_MAGIC:
        raise ValueError(f"bad image magic {magic:#x}")
    return np.frombuffer(blob, np.uint8, n * h * w, 16).reshape(n, h, w)


def read_idx_labels(path):
    with open(path, "rb") as f:
        blob = f.read()
    magic, n = struct.unpack_from(">II", blob, 0)
    if magic != IDX_LABELS_MAGIC:
        raise ValueError(f"bad label magic {magic:#x}")
    return np.frombuffer(blob, np.uint8, n, 8)


def write_manifest(path, labels, golden_predictions,
                   float_reference_accuracy, extras=None):
    labels = np.asarray(labels)
    counts = np.bincount(labels, minlength=10)
    doc = {
        "count": int(labels.size),
        "class_counts": {str(d): int(c) for d, c in enumerate(counts)},
        "golden_predictions": [int(v) for v in golden_predictions],
        "float_reference_accuracy": float(float_reference_accuracy),
    }
    doc.update(extras or {})
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")
