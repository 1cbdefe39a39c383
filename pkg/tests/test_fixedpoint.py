import math

import numpy as np
import pytest

from spw_faultlab import fixedpoint as fx


def test_quantize_known_values():
    assert fx.quantize(0.0) == 0
    assert fx.quantize(1.0) == 2048
    assert fx.quantize(-1.0) == -2048
    assert fx.quantize(0.25) == 512
    assert fx.quantize(2 ** -11) == 1


def test_quantize_saturates():
    assert fx.quantize(100.0) == 32767
    assert fx.quantize(-100.0) == -32768
    assert fx.quantize(16.0) == 32767          # 16.0 is just out of range
    assert fx.quantize(-16.0) == -32768


def test_quantize_ties_to_even():
    # 1.5/2048 and 2.5/2048 sit exactly between raw values
    assert fx.quantize(1.5 / 2048) == 2
    assert fx.quantize(2.5 / 2048) == 2
    assert fx.quantize(-1.5 / 2048) == -2
    assert fx.quantize(-2.5 / 2048) == -2


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_quantize_rejects_non_finite(bad):
    with pytest.raises(ValueError):
        fx.quantize(bad)


def test_round_trip_error_bound():
    rng = np.random.default_rng(1)
    for x in rng.uniform(-15.9, 15.9, size=1000):
        assert abs(fx.dequantize(fx.quantize(x)) - x) <= 2 ** -12


def test_mac_known_values():
    one = fx.quantize(1.0)
    half = fx.quantize(0.5)
    assert fx.mac(0, one, one) == 1 << 22          # 1.0 at scale 2**22
    assert fx.mac(0, half, half) == 1 << 20        # 0.25
    assert fx.mac(100, 0, 12345) == 100


def test_mac_is_exact_product():
    rng = np.random.default_rng(2)
    for _ in range(500):
        a = int(rng.integers(fx.FX_MIN, fx.FX_MAX + 1))
        b = int(rng.integers(fx.FX_MIN, fx.FX_MAX + 1))
        acc = fx.mac(0, a, b)
        assert abs(acc / 2 ** 22 - fx.dequantize(a) * fx.dequantize(b)) <= 2 ** -21


def test_mac_saturates_never_wraps():
    big = fx.mac(fx.ACC_MAX, fx.FX_MAX, fx.FX_MAX)
    assert big == fx.ACC_MAX
    small = fx.mac(fx.ACC_MIN, fx.FX_MAX, fx.FX_MIN)
    assert small == fx.ACC_MIN


def test_acc_to_fx_known_values():
    assert fx.acc_to_fx(0) == 0
    assert fx.acc_to_fx(1 << 22) == 2048           # 1.0
    assert fx.acc_to_fx(int(20.0 * 2 ** 22)) == 32767
    assert fx.acc_to_fx(int(-20.0 * 2 ** 22)) == -32768


def test_acc_to_fx_ties_to_even():
    # remainder exactly SCALE/2 rounds toward the even quotient
    assert fx.acc_to_fx(1024) == 0                 # 0.5 ulp above 0
    assert fx.acc_to_fx(2048 + 1024) == 2          # 1.5 ulp -> 2
    assert fx.acc_to_fx(-1024) == 0
    assert fx.acc_to_fx(-2048 - 1024) == -2
    assert fx.acc_to_fx(1025) == 1
    assert fx.acc_to_fx(1023) == 0


def test_bulk_matches_scalar():
    rng = np.random.default_rng(3)
    xs = rng.uniform(-20, 20, size=2000)
    raw = fx.quantize_array(xs)
    assert raw.dtype == np.int16
    assert all(int(r) == fx.quantize(x) for r, x in zip(raw, xs))
    assert np.array_equal(fx.dequantize_array(raw),
                          np.array([fx.dequantize(int(r)) for r in raw]))

    accs = np.concatenate([
        rng.integers(fx.ACC_MIN, fx.ACC_MAX, size=2000, dtype=np.int64),
        np.array([fx.ACC_MIN, fx.ACC_MAX, 0, 1024, -1024, 3072, -3072]),
    ])
    out = fx.acc_to_fx_array(accs)
    assert out.dtype == np.int16
    assert all(int(v) == fx.acc_to_fx(int(a)) for v, a in zip(out, accs))


def test_bits_round_trip():
    assert fx.raw_to_bits(-1) == 0xFFFF
    assert fx.raw_to_bits(-32768) == 0x8000
    assert fx.bits_to_raw(0x8000) == -32768
    for raw in (-32768, -1, 0, 1, 32767, -12345):
        assert fx.bits_to_raw(fx.raw_to_bits(raw)) == raw
    arr = np.array([-32768, -1, 0, 1, 32767], dtype=np.int16)
    bits = fx.raw_to_bits(arr)
    assert bits.dtype == np.uint16
    assert np.array_equal(fx.bits_to_raw(bits), arr)
