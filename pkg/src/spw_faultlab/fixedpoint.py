"""Q4.11 signed fixed-point arithmetic (1 sign + 4 integer + 11 fraction bits).

Every network parameter and activation is a raw int16 with value = raw / 2**11,
representable range [-16.0, 16.0 - 2**-11].  Dot products accumulate in a
signed 32-bit register scaled by 2**22 (the natural product scale of two
Q4.11 operands).  All rounding is round-half-to-even; all overflow saturates,
never wraps.

Raw values are plain Python ints (scalar API) or numpy int16/int64 arrays
(bulk API); there is no wrapper class.  The bit pattern of a raw value is
exactly what the protected store encodes and the fault injector flips.
"""

import math

import numpy as np

FRACTION_BITS = 11
SCALE = 1 << FRACTION_BITS            # 2048
FX_MIN = -(1 << 15)                   # -32768  -> -16.0
FX_MAX = (1 << 15) - 1                # 32767   ->  16.0 - 2**-11

ACC_FRACTION_BITS = 2 * FRACTION_BITS  # products of two Q4.11 raws are Q[8].22
ACC_MIN = -(1 << 31)
ACC_MAX = (1 << 31) - 1


def quantize(x):
    """Nearest Q4.11 raw value for a finite real, ties to even, saturating."""
    if not math.isfinite(x):
        raise ValueError(f"cannot quantize non-finite value {x!r}")
    raw = int(np.rint(x * SCALE))     # np.rint rounds half to even
    return min(max(raw, FX_MIN), FX_MAX)


def dequantize(raw):
    """Exact real value of a Q4.11 raw (raw / 2**11)."""
    return raw / SCALE


def mac(acc, a_raw, b_raw):
    """acc + a*b with the product kept at scale 2**22, saturating at int32."""
    acc = acc + a_raw * b_raw
    return min(max(acc, ACC_MIN), ACC_MAX)


def acc_to_fx(acc):
    """Round a 2**22-scaled accumulator to Q4.11, ties to even, saturating."""
    q, r = divmod(acc, SCALE)         # nonnegative remainder for any sign
    if r > SCALE // 2 or (r == SCALE // 2 and q & 1):
        q += 1
    return min(max(q, FX_MIN), FX_MAX)


# ---------------------------------------------------------------- bulk API

def quantize_array(x):
    """Vectorized quantize: float array -> int16 raw array."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("cannot quantize non-finite values")
    raw = np.rint(x * SCALE)
    return np.clip(raw, FX_MIN, FX_MAX).astype(np.int16)


def dequantize_array(raw):
    """Vectorized dequantize: int16 raw array -> float64 array."""
    return np.asarray(raw, dtype=np.float64) / SCALE


def acc_to_fx_array(acc):
    """Vectorized acc_to_fx on an int64 accumulator array."""
    acc = np.clip(np.asarray(acc, dtype=np.int64), ACC_MIN, ACC_MAX)
    q = acc >> FRACTION_BITS          # arithmetic shift == floor division
    r = acc & (SCALE - 1)
    half = SCALE // 2
    q = q + ((r > half) | ((r == half) & (q & 1 == 1)))
    return np.clip(q, FX_MIN, FX_MAX).astype(np.int16)


def raw_to_bits(raw):
    """Two's-complement uint16 bit pattern of int16 raw values (scalar or array)."""
    if isinstance(raw, np.ndarray):
        return raw.astype(np.int16).view(np.uint16)
    return raw & 0xFFFF


def bits_to_raw(bits):
    """Inverse of raw_to_bits."""
    if isinstance(bits, np.ndarray):
        return bits.astype(np.uint16).view(np.int16)
    bits &= 0xFFFF
    return bits - 0x10000 if bits & 0x8000 else bits
