import json
import struct
import zlib

import numpy as np
import pytest

from spw_faultlab import model_io, nn_engine


def test_model_round_trip(small_model, tmp_path):
    path = tmp_path / "m.spww"
    model_io.write_model(small_model, path)
    back = model_io.read_model(path)
    for (_, a), (_, b) in zip(back.tensor_items(), small_model.tensor_items()):
        assert np.array_equal(a, b)


def test_model_bytes_layout(small_model):
    blob = model_io.model_bytes(small_model)
    assert blob[:4] == b"SPWW"
    version, = struct.unpack("<H", blob[4:6])
    assert version == 1
    assert blob[6] == 4 and blob[7] == 11          # Q4.11 tag
    layers, = struct.unpack("<H", blob[8:10])
    assert layers == 5
    assert blob[10] == model_io.KIND_CONV
    assert struct.unpack("<4H", blob[11:19]) == (8, 1, 4, 4)
    crc, = struct.unpack("<I", blob[-4:])
    assert crc == zlib.crc32(blob[:-4]) & 0xFFFFFFFF


def test_corrupt_byte_fails_crc(small_model, tmp_path):
    blob = bytearray(model_io.model_bytes(small_model))
    blob[100] ^= 0x40
    path = tmp_path / "bad.spww"
    path.write_bytes(bytes(blob))
    with pytest.raises(ValueError, match="CRC"):
        model_io.read_model(path)
    v = model_io.validate_model(path)
    assert not v.valid and any("CRC" in p for p in v.problems)


def test_truncated_file_rejected(small_model, tmp_path):
    blob = model_io.model_bytes(small_model)
    path = tmp_path / "short.spww"
    path.write_bytes(blob[:1000])
    with pytest.raises(ValueError):
        model_io.read_model(path)


def test_bad_magic_rejected(small_model, tmp_path):
    blob = bytearray(model_io.model_bytes(small_model))
    blob[:4] = b"WWPS"
    payload = bytes(blob[:-4])
    path = tmp_path / "magic.spww"
    path.write_bytes(payload + struct.pack("<I", zlib.crc32(payload)))
    with pytest.raises(ValueError, match="magic"):
        model_io.read_model(path)


def test_trailing_bytes_rejected(small_model, tmp_path):
    payload = model_io.model_bytes(small_model)[:-4] + b"\x00\x00"
    path = tmp_path / "trail.spww"
    path.write_bytes(payload + struct.pack("<I", zlib.crc32(payload)))
    with pytest.raises(ValueError, match="trailing"):
        model_io.read_model(path)


def test_validate_model_info(small_model, tmp_path):
    path = tmp_path / "m.spww"
    model_io.write_model(small_model, path)
    v = model_io.validate_model(path)
    assert v.valid and not v.problems
    assert v.info["weight_counts"] == (128, 512, 69120, 10080, 840)
    assert v.info["total_weights"] == 80680
    assert v.info["total_biases"] == 238
    assert v.info["q_format"] == "Q4.11"


def test_validate_model_missing_file(tmp_path):
    v = model_io.validate_model(tmp_path / "absent.spww")
    assert not v.valid


def test_idx_images_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    images = rng.integers(0, 256, size=(7, 28, 28), dtype=np.uint8)
    path = tmp_path / "imgs"
    model_io.write_idx_images(images, path)
    blob = path.read_bytes()
    assert struct.unpack(">IIII", blob[:16]) == (0x803, 7, 28, 28)
    assert np.array_equal(model_io.read_idx_images(path), images)


def test_idx_labels_round_trip(tmp_path):
    labels = np.array([0, 1, 9, 4, 4], dtype=np.uint8)
    path = tmp_path / "lbls"
    model_io.write_idx_labels(labels, path)
    blob = path.read_bytes()
    assert struct.unpack(">II", blob[:8]) == (0x801, 5)
    assert np.array_equal(model_io.read_idx_labels(path), labels)


def test_idx_bad_magic(tmp_path):
    path = tmp_path / "x"
    path.write_bytes(struct.pack(">IIII", 0x9999, 1, 28, 28) + b"\x00" * 784)
    with pytest.raises(ValueError, match="magic"):
        model_io.read_idx_images(path)
    with pytest.raises(ValueError, match="magic"):
        model_io.read_idx_labels(path)


def test_idx_payload_mismatch(tmp_path):
    path = tmp_path / "x"
    path.write_bytes(struct.pack(">IIII", 0x803, 2, 28, 28) + b"\x00" * 784)
    with pytest.raises(ValueError):
        model_io.read_idx_images(path)


def test_dataset_load_with_manifest(small_model, tmp_path):
    rng = np.random.default_rng(2)
    images = rng.integers(0, 256, size=(30, 28, 28), dtype=np.uint8)
    labels = np.repeat(np.arange(10, dtype=np.uint8), 3)
    golden = nn_engine.predict(small_model, images)
    model_io.write_idx_images(images, tmp_path / "i")
    model_io.write_idx_labels(labels, tmp_path / "l")
    model_io.write_manifest(tmp_path / "m.json", labels, golden, 0.987)

    ds = model_io.load_dataset(tmp_path / "i", tmp_path / "l", tmp_path / "m.json")
    assert len(ds) == 30
    assert np.array_equal(ds.images, images)
    assert np.array_equal(ds.labels, labels)
    assert np.array_equal(ds.golden_predictions, golden)
    assert ds.float_reference_accuracy == 0.987
    assert ds.class_counts() == {str(d): 3 for d in range(10)}

    doc = json.loads((tmp_path / "m.json").read_text())
    assert doc["count"] == 30
    assert doc["class_counts"]["4"] == 3


def test_dataset_count_mismatches(tmp_path):
    images = np.zeros((4, 28, 28), np.uint8)
    labels = np.zeros(3, np.uint8)
    model_io.write_idx_images(images, tmp_path / "i")
    model_io.write_idx_labels(labels, tmp_path / "l")
    with pytest.raises(ValueError):
        model_io.load_dataset(tmp_path / "i", tmp_path / "l")

    model_io.write_idx_labels(np.zeros(4, np.uint8), tmp_path / "l4")
    model_io.write_manifest(tmp_path / "m.json", np.zeros(5, np.uint8),
                            [0] * 5, 0.5)
    with pytest.raises(ValueError, match="count"):
        model_io.load_dataset(tmp_path / "i", tmp_path / "l4", tmp_path / "m.json")
