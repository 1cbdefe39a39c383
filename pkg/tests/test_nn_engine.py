import numpy as np
import pytest

from spw_faultlab import fixedpoint as fx
from spw_faultlab import model_io, nn_engine as ne


def zero_model():
    return ne.build_model([
        np.zeros((8, 1, 4, 4), np.int16), np.zeros(8, np.int16),
        np.zeros((16, 8, 2, 2), np.int16), np.zeros(16, np.int16),
        np.zeros((120, 576), np.int16), np.zeros(120, np.int16),
        np.zeros((84, 120), np.int16), np.zeros(84, np.int16),
        np.zeros((10, 84), np.int16), np.zeros(10, np.int16),
    ])


def test_parameter_count_invariants():
    model = zero_model()
    weights = [t for n, t in model.tensor_items() if n.endswith("weights")]
    assert tuple(w.size for w in weights) == ne.WEIGHT_COUNTS
    assert sum(w.size for w in weights) == 80680
    biases = [t for n, t in model.tensor_items() if n.endswith("bias")]
    assert tuple(b.size for b in biases) == ne.BIAS_COUNTS
    assert ne.TOTAL_PARAMETERS == 80680 + 238


def test_build_model_rejects_wrong_shapes():
    tensors = [t for _, t in zero_model().tensor_items()]
    bad = list(tensors)
    bad[0] = np.zeros((8, 1, 5, 5), np.int16)
    with pytest.raises(ValueError):
        ne.build_model(bad)
    with pytest.raises(ValueError):
        ne.build_model(tensors[:4])


def test_conv2d_zero_weights_give_constant_bias():
    layer = ne.ConvLayer(np.zeros((3, 1, 4, 4), np.int16),
                         np.array([5, -7, 0], np.int16), (1, 1, 2, 2))
    x = np.arange(28 * 28, dtype=np.int16).reshape(1, 28, 28) % 100
    out = ne.conv2d(x, layer)
    assert out.shape == (3, 28, 28)
    assert np.all(out[0] == 5) and np.all(out[1] == -7) and np.all(out[2] == 0)


def test_conv2d_identity_kernel_shifts_input():
    w = np.zeros((1, 1, 2, 2), np.int16)
    w[0, 0, 0, 0] = fx.quantize(1.0)
    layer = ne.ConvLayer(w, np.zeros(1, np.int16), (0, 0, 0, 0))
    x = np.arange(25, dtype=np.int16).reshape(1, 5, 5)
    out = ne.conv2d(x, layer)
    assert out.shape == (1, 4, 4)
    assert np.array_equal(out[0], x[0, :4, :4])


def test_conv2d_against_float_oracle():
    rng = np.random.default_rng(11)
    x = fx.quantize_array(rng.uniform(-2, 2, size=(2, 5, 5)))
    w = fx.quantize_array(rng.uniform(-1, 1, size=(3, 2, 2, 2)))
    b = fx.quantize_array(rng.uniform(-1, 1, size=3))
    layer = ne.ConvLayer(w, b, (0, 0, 0, 0))
    out = fx.dequantize_array(ne.conv2d(x, layer))

    xf = fx.dequantize_array(x)
    wf = fx.dequantize_array(w)
    bf = fx.dequantize_array(b)
    for f in range(3):
        for i in range(4):
            for j in range(4):
                ref = bf[f] + float(
                    (xf[:, i:i + 2, j:j + 2] * wf[f]).sum())
                assert abs(out[f, i, j] - ref) <= 2 ** -10


def test_conv2d_shape_errors():
    layer = ne.ConvLayer(np.zeros((3, 2, 2, 2), np.int16),
                         np.zeros(3, np.int16), (0, 0, 0, 0))
    with pytest.raises(ValueError):
        ne.conv2d(np.zeros((1, 5, 5), np.int16), layer)   # wrong channels
    with pytest.raises(ValueError):
        ne.conv2d(np.zeros((2, 1, 1), np.int16), layer)   # smaller than kernel


def test_maxpool_basics():
    const = np.full((3, 13, 13), 42, np.int16)
    out = ne.maxpool(const)
    assert out.shape == (3, 6, 6) and np.all(out == 42)

    x = np.zeros((1, 4, 4), np.int16)
    peaks = {(0, 1): 9, (0, 3): 8, (2, 0): 7, (3, 3): 6}
    for (i, j), v in peaks.items():
        x[0, i, j] = v
    assert np.array_equal(ne.maxpool(x)[0], [[9, 8], [7, 6]])

    with pytest.raises(ValueError):
        ne.maxpool(np.zeros((1, 1, 5), np.int16))


def test_dense_basics():
    eye = ne.DenseLayer(
        (np.eye(4) * fx.quantize(1.0)).astype(np.int16), np.zeros(4, np.int16))
    v = np.array([3, -5, 0, 2047], np.int16)
    assert np.array_equal(ne.dense(v, eye), v)

    bias = ne.DenseLayer(np.zeros((3, 4), np.int16),
                         np.array([1, -2, 3], np.int16))
    assert np.array_equal(ne.dense(v, bias), [1, -2, 3])

    with pytest.raises(ValueError):
        ne.dense(np.zeros(5, np.int16), eye)


def test_dense_against_float_oracle():
    rng = np.random.default_rng(12)
    x = fx.quantize_array(rng.uniform(-2, 2, size=8))
    w = fx.quantize_array(rng.uniform(-1, 1, size=(4, 8)))
    b = fx.quantize_array(rng.uniform(-1, 1, size=4))
    out = fx.dequantize_array(ne.dense(x, ne.DenseLayer(w, b)))
    ref = fx.dequantize_array(w) @ fx.dequantize_array(x) + fx.dequantize_array(b)
    assert np.max(np.abs(out - ref)) <= 2 ** -10


def test_relu():
    x = np.array([-5, -1, 0, 1, 5], np.int16)
    assert np.array_equal(ne.relu(x), [0, 0, 0, 1, 5])
    assert np.all(ne.relu(np.full(4, -3, np.int16)) == 0)
    pos = np.array([2, 4], np.int16)
    assert np.array_equal(ne.relu(pos), pos)


def test_pixel_mapping_uses_quantize():
    img = np.arange(256, dtype=np.uint8).repeat(4)[:784].reshape(28, 28)
    q = ne.quantize_images(img)
    assert q.shape == (1, 1, 28, 28)
    flat = q.reshape(-1)
    expect = [fx.quantize(p / 255) for p in img.reshape(-1)]
    assert np.array_equal(flat, expect)


def test_infer_zero_model_ties_to_class_zero():
    model = zero_model()
    img = np.zeros((28, 28), np.uint8)
    assert ne.infer(model, img) == 0


def test_infer_is_deterministic(small_model):
    rng = np.random.default_rng(9)
    img = rng.integers(0, 256, size=(28, 28), dtype=np.uint8)
    first = ne.infer(small_model, img)
    assert all(ne.infer(small_model, img) == first for _ in range(3))


def test_infer_rejects_malformed_images(small_model):
    with pytest.raises(ValueError):
        ne.infer(small_model, np.zeros((27, 28), np.uint8))
    with pytest.raises(ValueError):
        ne.infer(small_model, np.zeros((28, 28), np.float32))


def test_matches_scalar_mac_reference(small_model):
    # fold fx.mac/acc_to_fx by hand over two images; the vectorized engine
    # must agree bit for bit
    rng = np.random.default_rng(21)
    images = rng.integers(0, 256, size=(2, 28, 28), dtype=np.uint8)

    def conv_ref(x, layer):
        f, c, kh, kw = layer.weights.shape
        top, left, bottom, right = layer.padding
        xp = np.pad(x, ((0, 0), (top, bottom), (left, right)))
        oh, ow = xp.shape[1] - kh + 1, xp.shape[2] - kw + 1
        out = np.zeros((f, oh, ow), np.int16)
        for fo in range(f):
            for i in range(oh):
                for j in range(ow):
                    acc = int(layer.bias[fo]) * fx.SCALE
                    for cc in range(c):
                        for a in range(kh):
                            for b in range(kw):
                                acc = fx.mac(acc, int(xp[cc, i + a, j + b]),
                                             int(layer.weights[fo, cc, a, b]))
                    out[fo, i, j] = fx.acc_to_fx(acc)
        return out

    def dense_ref(v, layer):
        out = np.zeros(layer.weights.shape[0], np.int16)
        for o in range(layer.weights.shape[0]):
            acc = int(layer.bias[o]) * fx.SCALE
            for i in range(layer.weights.shape[1]):
                acc = fx.mac(acc, int(v[i]), int(layer.weights[o, i]))
            out[o] = fx.acc_to_fx(acc)
        return out

    for img in images:
        x = ne.quantize_images(img[np.newaxis])[0]
        x = ne.maxpool(ne.relu(conv_ref(x, small_model.conv1)))
        x = ne.maxpool(ne.relu(conv_ref(x, small_model.conv2)))
        x = x.reshape(-1)
        x = ne.relu(dense_ref(x, small_model.fc1))
        x = ne.relu(dense_ref(x, small_model.fc2))
        logits_ref = dense_ref(x, small_model.fc3)
        assert np.array_equal(logits_ref, ne.logits(small_model, img[np.newaxis])[0])


def test_evaluate_modes(small_model, small_dataset):
    assert ne.evaluate(small_model, small_dataset, mode="golden") == 1.0
    acc = ne.evaluate(small_model, small_dataset, mode="truth")
    assert 0.0 <= acc <= 1.0
    with pytest.raises(ValueError):
        ne.evaluate(small_model, small_dataset, mode="bogus")


def test_evaluate_constant_model_on_balanced_labels():
    model = zero_model()          # predicts class 0 for every image
    rng = np.random.default_rng(4)
    images = rng.integers(0, 256, size=(200, 28, 28), dtype=np.uint8)
    labels = np.repeat(np.arange(10), 20)
    ds = model_io.Dataset(images, labels)
    assert ne.evaluate(model, ds, mode="truth") == pytest.approx(0.1, abs=1e-9)


def test_evaluate_rejects_empty_dataset(small_model):
    empty = model_io.Dataset(np.zeros((0, 28, 28), np.uint8),
                             np.zeros(0, np.int64))
    with pytest.raises(ValueError):
        ne.evaluate(small_model, empty)
    no_golden = model_io.Dataset(np.zeros((1, 28, 28), np.uint8),
                                 np.zeros(1, np.int64))
    with pytest.raises(ValueError):
        ne.evaluate(small_model, no_golden, mode="golden")


def test_evaluate_pure_function_of_inputs(small_model, small_dataset):
    a = ne.evaluate(small_model, small_dataset)
    b = ne.evaluate(small_model, small_dataset)
    assert a == b


def test_model_stats():
    model = zero_model()
    stats = ne.model_stats(model)
    assert set(stats) == {n for n, _ in model.tensor_items()}
    assert stats["conv1.weights"] == (0.0, 0.0)

    t = [np.zeros_like(x) for _, x in model.tensor_items()]
    t[8] = np.array([[fx.quantize(1.0)] * 42 + [fx.quantize(-1.0)] * 42] * 10,
                    np.int16)
    stats = ne.model_stats(ne.build_model(t))
    assert stats["fc3.weights"].mean == pytest.approx(0.0)
    assert stats["fc3.weights"].stddev == pytest.approx(1.0)   # population
