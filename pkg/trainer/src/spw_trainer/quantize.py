"""Q4.11 quantization of trained float parameters.

Independent of the lab's implementation on purpose: round half to even,
then clamp to the int16 range. Values outside [-16, 16) saturate.
"""

import numpy as np

FRACTION_BITS = 11
SCALE = 1 << FRACTION_BITS
FX_MIN = -(1 << 15)
FX_MAX = (1 << 15) - 1


def quantize_array(values):
    values = np.asarray(values, np.float64)
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite value in parameter tensor")
    return np.clip(np.rint(values * SCALE), FX_MIN, FX_MAX).astype(np.int16)


def dequantize_array(raw):
    return np.asarray(raw, np.int16).astype(np.float64) / SCALE


def quantize_model(model):
    """[(name, weights int16, bias int16)] from a trained DigitNet."""
    return [(name, quantize_array(w), quantize_array(b))
            for name, w, b in model.layer_tensors()]
