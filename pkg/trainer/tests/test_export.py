import json

import numpy as np
import pytest

pytest.importorskip("spw_trainer")

from spw_trainer import export

LAYER_SHAPES = (
    ("conv1", (8, 1, 4, 4)),
    ("conv2", (16, 8, 2, 2)),
    ("fc1", (120, 576)),
    ("fc2", (84, 120)),
    ("fc3", (10, 84)),
)


def random_layers(seed=0):
    rng = np.random.default_rng(seed)
    layers = []
    for name, shape in LAYER_SHAPES:
        w = rng.integers(-2048, 2048, shape).astype(np.int16)
        b = rng.integers(-2048, 2048, shape[0]).astype(np.int16)
        layers.append((name, w, b))
    return layers


def test_model_round_trip(tmp_path):
    layers = random_layers()
    path = tmp_path / "m.spww"
    export.write_model(layers, path)
    parsed = export.read_model(path)
    assert [name for name, _, _ in parsed] == [n for n, _ in LAYER_SHAPES]
    for (_, w, b), (_, pw, pb) in zip(layers, parsed):
        assert np.array_equal(w, pw)
        assert np.array_equal(b, pb)


def test_model_header_layout():
    blob = export.model_bytes(random_layers())
    assert blob[:4] == b"SPWW"
    assert blob[4:6] == b"\x01\x00"
    assert blob[6:8] == bytes([4, 11])
    assert blob[8:10] == b"\x05\x00"


def test_corruption_detected(tmp_path):
    blob = bytearray(export.model_bytes(random_layers()))
    blob[100] ^= 0x40
    with pytest.raises(ValueError, match="CRC"):
        export.parse_model(bytes(blob))


def test_truncation_detected():
    blob = export.model_bytes(random_layers())
    with pytest.raises(ValueError):
        export.parse_model(blob[:-8])


def test_idx_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    images = rng.integers(0, 256, (12, 28, 28)).astype(np.uint8)
    labels = rng.integers(0, 10, 12).astype(np.uint8)
    export.write_idx_images(images, tmp_path / "i.idx3-ubyte")
    export.write_idx_labels(labels, tmp_path / "l.idx1-ubyte")
    assert np.array_equal(export.read_idx_images(tmp_path / "i.idx3-ubyte"),
                          images)
    assert np.array_equal(export.read_idx_labels(tmp_path / "l.idx1-ubyte"),
                          labels)


def test_idx_headers_big_endian(tmp_path):
    export.write_idx_images(np.zeros((2, 28, 28), np.uint8),
                            tmp_path / "i.idx3-ubyte")
    head = (tmp_path / "i.idx3-ubyte").read_bytes()[:16]
    assert head == bytes.fromhex("00000803" "00000002" "0000001c" "0000001c")


def test_manifest_contents(tmp_path):
    labels = np.array([0, 0, 1, 2, 9])
    golden = np.array([0, 1, 1, 2, 9])
    export.write_manifest(tmp_path / "m.json", labels, golden, 0.8,
                          extras={"float_test_accuracy": 0.99})
    doc = json.loads((tmp_path / "m.json").read_text())
    assert doc["count"] == 5
    assert doc["class_counts"]["0"] == 2
    assert doc["class_counts"]["5"] == 0
    assert doc["golden_predictions"] == [0, 1, 1, 2, 9]
    assert doc["float_reference_accuracy"] == 0.8
    assert doc["float_test_accuracy"] == 0.99
