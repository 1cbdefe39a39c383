"""Deterministic fixed-point inference for the fixed LeNet-style topology.

The network is hard-shaped: 1x28x28 input -> Conv 8@4x4 (pad top 1, left 1,
bottom 2, right 2; output 28x28) -> ReLU -> MaxPool 2x2 -> Conv 16@2x2 valid
-> ReLU -> MaxPool (floor) -> flatten 576 -> Dense 576->120 -> ReLU ->
Dense 120->84 -> ReLU -> Dense 84->10.  Per-layer weight counts are
(128, 512, 69120, 10080, 840), 80680 in total, plus 238 biases.

All tensors are raw Q4.11 int16 in channel-major row-major (C, H, W) layout;
the flatten step keeps that order, so FC1 input index = c*36 + y*6 + x.
Dot products accumulate exactly (the widest possible sum, 577 products plus
a shifted bias, stays below 2**41, far inside float64's exact-integer range),
are clamped once to the Q8.22 accumulator bounds, then rounded to Q4.11.
Because every partial sum is exact, results are independent of summation
order and therefore of BLAS blocking or worker count.

Images enter as 8-bit grayscale; pixels map to Q4.11 by quantize(pixel/255).
Predictions are argmax over the 10 logits, ties broken toward the smaller
class index.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import fixedpoint as fx

INPUT_SHAPE = (1, 28, 28)
N_CLASSES = 10
WEIGHT_COUNTS = (128, 512, 69120, 10080, 840)
BIAS_COUNTS = (8, 16, 120, 84, 10)
TOTAL_WEIGHTS = sum(WEIGHT_COUNTS)     # 80680
TOTAL_PARAMETERS = TOTAL_WEIGHTS + sum(BIAS_COUNTS)

_PIXEL_LUT = np.array([fx.quantize(p / 255) for p in range(256)], dtype=np.int16)


@dataclass(frozen=True)
class ConvLayer:
    """Cross-correlation layer: weights (filters, in_ch, kh, kw), bias (filters,)."""
    weights: np.ndarray
    bias: np.ndarray
    padding: tuple    # (top, left, bottom, right) zero padding

    def __post_init__(self):
        _check_raw(self.weights, 4)
        _check_raw(self.bias, 1)
        if self.bias.shape[0] != self.weights.shape[0]:
            raise ValueError("bias length must equal filter count")


@dataclass(frozen=True)
class DenseLayer:
    """Fully connected layer: weights (out, in), bias (out,)."""
    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        _check_raw(self.weights, 2)
        _check_raw(self.bias, 1)
        if self.bias.shape[0] != self.weights.shape[0]:
            raise ValueError("bias length must equal output count")


@dataclass(frozen=True)
class Model:
    """The five parameterized layers, in forward order."""
    conv1: ConvLayer
    conv2: ConvLayer
    fc1: DenseLayer
    fc2: DenseLayer
    fc3: DenseLayer

    def __post_init__(self):
        expect = (
            ("conv1", (8, 1, 4, 4)),
            ("conv2", (16, 8, 2, 2)),
            ("fc1", (120, 576)),
            ("fc2", (84, 120)),
            ("fc3", (10, 84)),
        )
        for name, shape in expect:
            got = getattr(self, name).weights.shape
            if got != shape:
                raise ValueError(f"{name} weights must have shape {shape}, got {got}")
        if self.conv1.padding != (1, 1, 2, 2):
            raise ValueError("conv1 padding must be (1, 1, 2, 2)")
        if self.conv2.padding != (0, 0, 0, 0):
            raise ValueError("conv2 must be unpadded")

    def layer_items(self):
        """(name, layer) pairs in forward order."""
        return (
            ("conv1", self.conv1), ("conv2", self.conv2),
            ("fc1", self.fc1), ("fc2", self.fc2), ("fc3", self.fc3),
        )

    def tensor_items(self):
        """(name, int16 array) per parameter tensor, weights before bias."""
        out = []
        for name, layer in self.layer_items():
            out.append((f"{name}.weights", layer.weights))
            out.append((f"{name}.bias", layer.bias))
        return out


class LayerStats(NamedTuple):
    mean: float
    stddev: float


def _check_raw(a, ndim):
    if not isinstance(a, np.ndarray) or a.dtype != np.int16:
        raise ValueError("parameter tensors must be int16 arrays")
    if a.ndim != ndim:
        raise ValueError(f"expected {ndim}-d tensor, got {a.ndim}-d")


def build_model(tensors):
    """Assemble a Model from the ten parameter tensors in tensor_items() order."""
    if len(tensors) != 10:
        raise ValueError(f"expected 10 parameter tensors, got {len(tensors)}")
    t = [np.ascontiguousarray(a, dtype=np.int16) for a in tensors]
    return Model(
        conv1=ConvLayer(t[0], t[1], padding=(1, 1, 2, 2)),
        conv2=ConvLayer(t[2], t[3], padding=(0, 0, 0, 0)),
        fc1=DenseLayer(t[4], t[5]),
        fc2=DenseLayer(t[6], t[7]),
        fc3=DenseLayer(t[8], t[9]),
    )


# ---------------------------------------------------------------- layer ops

def _accumulate(products_matrix, bias):
    """Exact product sums + 2**11-scaled bias, clamped to Acc32, then Q4.11.

    products_matrix: float64 (..., out) of exact integer dot products.
    """
    acc = products_matrix + bias.astype(np.float64) * fx.SCALE
    return fx.acc_to_fx_array(acc)


def conv2d(x, layer):
    """Cross-correlation of int16 input (C,H,W) or (N,C,H,W) with a ConvLayer."""
    x = np.asarray(x)
    single = x.ndim == 3
    if single:
        x = x[np.newaxis]
    if x.ndim != 4:
        raise ValueError(f"conv2d input must be 3-d or 4-d, got {x.ndim}-d")
    f, c, kh, kw = layer.weights.shape
    if x.shape[1] != c:
        raise ValueError(f"conv2d expects {c} input channels, got {x.shape[1]}")
    top, left, bottom, right = layer.padding
    if x.shape[2] + top + bottom < kh or x.shape[3] + left + right < kw:
        raise ValueError("conv2d input smaller than kernel")

    xp = np.pad(x, ((0, 0), (0, 0), (top, bottom), (left, right)))
    xp = xp.astype(np.float64)
    win = np.lib.stride_tricks.sliding_window_view(xp, (kh, kw), axis=(2, 3))
    # win: (N, C, OH, OW, KH, KW) -> patches (N, OH, OW, C*KH*KW)
    patches = win.transpose(0, 2, 3, 1, 4, 5).reshape(
        x.shape[0], win.shape[2], win.shape[3], c * kh * kw)
    w2 = layer.weights.reshape(f, c * kh * kw).astype(np.float64)
    out = _accumulate(patches @ w2.T, layer.bias)
    out = out.transpose(0, 3, 1, 2)
    return out[0] if single else out


def maxpool(x):
    """2x2 max pooling, stride 2, trailing odd row/column dropped."""
    x = np.asarray(x)
    single = x.ndim == 3
    if single:
        x = x[np.newaxis]
    if x.ndim != 4:
        raise ValueError(f"maxpool input must be 3-d or 4-d, got {x.ndim}-d")
    n, c, h, w = x.shape
    if h < 2 or w < 2:
        raise ValueError("maxpool needs spatial extents of at least 2")
    hh, ww = h // 2, w // 2
    x = x[:, :, :hh * 2, :ww * 2].reshape(n, c, hh, 2, ww, 2)
    out = x.max(axis=(3, 5))
    return out[0] if single else out


def dense(x, layer):
    """Matrix-vector product of int16 input (IN,) or (N,IN) with a DenseLayer."""
    x = np.asarray(x)
    single = x.ndim == 1
    if single:
        x = x[np.newaxis]
    out_n, in_n = layer.weights.shape
    if x.ndim != 2 or x.shape[1] != in_n:
        raise ValueError(f"dense expects {in_n} inputs, got shape {x.shape}")
    out = _accumulate(
        x.astype(np.float64) @ layer.weights.astype(np.float64).T, layer.bias)
    return out[0] if single else out


def relu(x):
    """Elementwise max(0, x) on raw values."""
    return np.maximum(np.asarray(x), 0)


# ---------------------------------------------------------------- inference

def quantize_images(images):
    """uint8 images (28,28), (N,28,28) or (N,1,28,28) -> int16 (N,1,28,28)."""
    images = np.asarray(images)
    if images.dtype != np.uint8:
        raise ValueError("images must be uint8 grayscale")
    if images.shape[-2:] != (28, 28):
        raise ValueError(f"images must be 28x28, got {images.shape}")
    if images.ndim == 2:
        images = images[np.newaxis]
    if images.ndim == 3:
        images = images[:, np.newaxis]
    if images.ndim != 4 or images.shape[1] != 1:
        raise ValueError(f"bad image array shape {images.shape}")
    return _PIXEL_LUT[images]


def logits(model, images):
    """Raw Q4.11 logits, shape (N, 10), for a uint8 image batch."""
    x = quantize_images(images)
    x = maxpool(relu(conv2d(x, model.conv1)))
    x = maxpool(relu(conv2d(x, model.conv2)))
    x = x.reshape(x.shape[0], -1)
    x = relu(dense(x, model.fc1))
    x = relu(dense(x, model.fc2))
    return dense(x, model.fc3)


def predict(model, images):
    """Predicted class indices (N,); argmax ties go to the smaller index."""
    return np.argmax(logits(model, images), axis=1)


def infer(model, image):
    """Predicted class for one uint8 image (28,28) or (1,28,28)."""
    image = np.asarray(image)
    if image.ndim == 3 and image.shape[0] == 1:
        image = image[0]
    if image.ndim != 2:
        raise ValueError(f"infer expects one image, got shape {image.shape}")
    return int(predict(model, image[np.newaxis])[0])


def evaluate(model, dataset, mode="truth"):
    """Fraction of dataset images whose prediction matches the reference.

    mode "truth" scores against the dataset labels, mode "golden" against
    the stored fault-free predictions.
    """
    if mode == "truth":
        refs = dataset.labels
    elif mode == "golden":
        refs = dataset.golden_predictions
        if refs is None:
            raise ValueError("dataset has no golden predictions")
    else:
        raise ValueError(f"unknown evaluate mode {mode!r}")
    images = dataset.images
    if len(images) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    preds = predict(model, images)
    return float(np.mean(preds == np.asarray(refs)))


def model_stats(model):
    """Per-tensor (mean, population stddev) of dequantized values."""
    stats = {}
    for name, tensor in model.tensor_items():
        values = fx.dequantize_array(tensor)
        stats[name] = LayerStats(float(values.mean()), float(values.std()))
    return stats
