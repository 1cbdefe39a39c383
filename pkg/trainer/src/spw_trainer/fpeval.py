"""Independent Q4.11 reference evaluator for exported models.

This reimplements the deployed integer inference path from the format
documentation alone, without importing the lab package: pixels quantize to
Q4.11, every layer accumulates exact integer products (held in float64,
which is lossless below 2^53), the accumulator clamps to the signed 32-bit
Q8.22 range, and results round half to even back to Q4.11. Agreement of
golden predictions across the two implementations is the boundary check.
"""

import numpy as np
import torch
import torch.nn.functional as F

from .quantize import FRACTION_BITS, FX_MAX, FX_MIN, SCALE

ACC_MIN = -(1 << 31)
ACC_MAX = (1 << 31) - 1

LAYER_NAMES = ("conv1", "conv2", "fc1", "fc2", "fc3")
CONV1_PADDING = (1, 1, 2, 2)     # top, left, bottom, right


def quantize_images(images):
    """uint8 (N, 28, 28) to Q4.11 int16 (N, 1, 28, 28)."""
    v = np.rint(np.asarray(images, np.float64) / 255.0 * SCALE)
    return np.clip(v, FX_MIN, FX_MAX).astype(np.int16)[:, None]


def _acc_round(acc):
    """Clamp an integer accumulator array to Q8.22 and round into Q4.11."""
    acc = np.clip(acc, ACC_MIN, ACC_MAX)
    q, r = np.divmod(acc, SCALE)
    half = SCALE // 2
    q = q + ((r > half) | ((r == half) & (q % 2 != 0)))
    return np.clip(q, FX_MIN, FX_MAX).astype(np.int16)


def _conv(x, weights, bias, padding):
    top, left, bottom, right = padding
    xt = torch.from_numpy(x.astype(np.float64))
    xt = F.pad(xt, (left, right, top, bottom))
    wt = torch.from_numpy(weights.astype(np.float64))
    acc = F.conv2d(xt, wt).numpy()
    acc = acc + bias.astype(np.float64)[None, :, None, None] * SCALE
    return _acc_round(np.rint(acc).astype(np.int64))


def _pool(x):
    n, c, h, w = x.shape
    h2, w2 = h // 2, w // 2
    x = x[:, :, :h2 * 2, :w2 * 2]
    return x.reshape(n, c, h2, 2, w2, 2).max(axis=(3, 5))


def _dense(x, weights, bias):
    acc = x.astype(np.float64) @ weights.astype(np.float64).T
    acc = acc + bias.astype(np.float64) * SCALE
    return _acc_round(np.rint(acc).astype(np.int64))


def logits(layers, images):
    """Q4.11 logits (N, 10) for uint8 images under int16 layer tensors.

    layers is [(name, weights, bias)] in conv1..fc3 order, raw int16.
    """
    by_name = {name: (w, b) for name, w, b in layers}
    x = quantize_images(images)
    x = np.maximum(_conv(x, *by_name["conv1"], CONV1_PADDING), 0)
    x = _pool(x)
    x = np.maximum(_conv(x, *by_name["conv2"], (0, 0, 0, 0)), 0)
    x = _pool(x)
    x = x.reshape(x.shape[0], -1)
    x = np.maximum(_dense(x, *by_name["fc1"]), 0)
    x = np.maximum(_dense(x, *by_name["fc2"]), 0)
    return _dense(x, *by_name["fc3"])


def predict(layers, images):
    """Predicted classes; ties resolve to the lowest class index."""
    return np.argmax(logits(layers, images), axis=1)


def accuracy(layers, images, labels):
    return float(np.mean(predict(layers, images) == np.asarray(labels)))
