"""Synthetic handwritten-digit corpus rendered from bundled vector fonts.

When no MNIST files are available (this sandbox has no network), training
data is generated locally: each sample picks a digit glyph from one of the
TrueType fonts shipped with matplotlib, applies a random affine warp, fits
the ink box MNIST-style into a 20-pixel box centered by center of mass on a
28x28 canvas, then adds a mild elastic wobble, blur, and contrast jitter.
Everything is drawn from one seeded Generator, so a (seed, count) pair
always produces the identical corpus.
"""

from pathlib import Path

import matplotlib
import numpy as np
from PIL import Image, ImageDraw, ImageFont
from scipy import ndimage

GLYPH_CANVAS = 160
FONT_SIZE = 110
TARGET_BOX = 20          # MNIST normalizes glyphs into a 20-px box
_MIN_INK = 200           # pixels of ink a rendered digit must have


def candidate_font_paths():
    root = Path(matplotlib.get_data_path()) / "fonts" / "ttf"
    return sorted(str(p) for p in root.glob("*.ttf"))


def _render_glyph(font, digit):
    img = Image.new("L", (GLYPH_CANVAS, GLYPH_CANVAS), 0)
    draw = ImageDraw.Draw(img)
    draw.text((GLYPH_CANVAS // 2, GLYPH_CANVAS // 2), str(digit),
              fill=255, font=font, anchor="mm")
    return np.asarray(img)


def usable_fonts():
    """Font paths whose ten digits all render as real, pairwise-distinct ink.

    Symbol and math-alphabet fonts fail here (missing digits render empty or
    as one identical fallback box) and are dropped.
    """
    fonts = []
    for path in candidate_font_paths():
        try:
            font = ImageFont.truetype(path, FONT_SIZE)
        except OSError:
            continue
        renders = []
        for digit in range(10):
            a = _render_glyph(font, digit)
            ys, xs = np.nonzero(a > 32)
            if ys.size < _MIN_INK:
                break
            if np.ptp(ys) + 1 < 40 or np.ptp(xs) + 1 < 6:
                break
            renders.append(a.tobytes())
        if len(renders) == 10 and len(set(renders)) == 10:
            fonts.append(path)
    return fonts


class GlyphBank:
    """All (font, digit) base renders, cached once."""

    def __init__(self, font_paths=None):
        self.font_paths = list(font_paths or usable_fonts())
        if not self.font_paths:
            raise RuntimeError("no usable digit fonts found")
        self.glyphs = []
        for path in self.font_paths:
            font = ImageFont.truetype(path, FONT_SIZE)
            self.glyphs.append(
                [_render_glyph(font, d).astype(np.float64) for d in range(10)])

    def __len__(self):
        return len(self.font_paths)


def _affine_warp(a, rng):
    theta = rng.uniform(-0.21, 0.21)
    shear = rng.uniform(-0.25, 0.25)
    sx = rng.uniform(0.85, 1.15)
    sy = rng.uniform(0.85, 1.15)
    rot = np.array([[np.cos(theta), -np.sin(theta)],
                    [np.sin(theta), np.cos(theta)]])
    shr = np.array([[1.0, shear], [0.0, 1.0]])
    m = rot @ shr @ np.diag([sy, sx])
    center = np.array([GLYPH_CANVAS / 2, GLYPH_CANVAS / 2])
    minv = np.linalg.inv(m)
    return ndimage.affine_transform(
        a, minv, offset=center - minv @ center, order=1, mode="constant")


def _fit_box(a):
    """Crop to ink and scale the longest side into the MNIST-style box."""
    ys, xs = np.nonzero(a > 16)
    if ys.size == 0:
        return np.zeros((1, 1))
    a = a[ys.min():ys.max() + 1, xs.min():xs.max() + 1]
    h, w = a.shape
    scale = TARGET_BOX / max(h, w)
    nh, nw = max(1, round(h * scale)), max(1, round(w * scale))
    img = Image.fromarray(np.clip(a, 0, 255).astype(np.uint8))
    return np.asarray(img.resize((nw, nh), Image.LANCZOS)).astype(np.float64)


def _paste_centered(glyph, rng):
    out = np.zeros((28, 28))
    total = glyph.sum()
    if total <= 0:
        return out
    ys, xs = np.mgrid[0:glyph.shape[0], 0:glyph.shape[1]]
    cy = (ys * glyph).sum() / total
    cx = (xs * glyph).sum() / total
    dy = rng.uniform(-1.5, 1.5)
    dx = rng.uniform(-1.5, 1.5)
    top = int(round(13.5 - cy + dy))
    left = int(round(13.5 - cx + dx))
    y0, x0 = max(top, 0), max(left, 0)
    y1 = min(top + glyph.shape[0], 28)
    x1 = min(left + glyph.shape[1], 28)
    if y1 > y0 and x1 > x0:
        out[y0:y1, x0:x1] = glyph[y0 - top:y1 - top, x0 - left:x1 - left]
    return out


def _elastic(a, rng):
    alpha = rng.uniform(0.0, 3.0)
    sigma = rng.uniform(4.0, 6.0)
    dy = ndimage.gaussian_filter(rng.uniform(-1, 1, (28, 28)), sigma) * alpha * 8
    dx = ndimage.gaussian_filter(rng.uniform(-1, 1, (28, 28)), sigma) * alpha * 8
    ys, xs = np.mgrid[0:28, 0:28]
    return ndimage.map_coordinates(a, [ys + dy, xs + dx], order=1,
                                   mode="constant")


def render_digit(bank, font_index, digit, rng):
    a = _affine_warp(bank.glyphs[font_index][digit], rng)
    a = _paste_centered(_fit_box(a), rng)
    a = _elastic(a, rng)
    a = ndimage.gaussian_filter(a, rng.uniform(0.4, 0.8))
    peak = a.max()
    if peak > 0:
        a = a / peak * 255.0 * rng.uniform(0.82, 1.0)
    return np.clip(np.rint(a), 0, 255).astype(np.uint8)


def make_corpus(count, seed, bank=None):
    """(images uint8 (count,28,28), labels uint8 (count,)), seed-determined."""
    bank = bank or GlyphBank()
    rng = np.random.default_rng(seed)
    images = np.zeros((count, 28, 28), np.uint8)
    labels = np.zeros(count, np.uint8)
    for i in range(count):
        digit = int(rng.integers(10))
        font_index = int(rng.integers(len(bank)))
        labels[i] = digit
        images[i] = render_digit(bank, font_index, digit, rng)
    return images, labels
