"""SECDED(22,16): Hamming code over positions 1..21 plus an overall parity bit.

Codeword layout (packed into one unsigned 22-bit integer, bit index == position):

* bit 0                 : overall parity P, makes the XOR of all 22 bits zero
* bits 1,2,4,8,16       : Hamming parity bits
* remaining bits 3..21  : the 16 data bits, placed in increasing position
                          order (data bit 0 -> position 3, ... bit 15 -> 21)

Position k is covered by parity 2**j exactly when bit j of k is set, so a
single flipped position reappears literally as the 5-bit syndrome.  Combined
with the overall parity this corrects any single flip and detects any double
flip; nothing is guaranteed for three or more flips in one word.

Scalar functions operate on plain ints; *_words functions are the vectorized
numpy equivalents used on whole parameter tensors.
"""

import enum
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

DATA_BITS = 16
HAMMING_POSITIONS = 21                 # positions 1..21
CODEWORD_BITS = 22                     # + overall parity at bit 0
PARITY_POSITIONS = (1, 2, 4, 8, 16)
DATA_POSITIONS = tuple(
    p for p in range(1, HAMMING_POSITIONS + 1) if p not in PARITY_POSITIONS
)
CODEWORD_MASK = (1 << CODEWORD_BITS) - 1

# Coverage mask per parity bit: every position 1..21 whose index has bit j set
# (the parity position 2**j itself included, so a clean word has zero syndrome).
_COVER_MASKS = tuple(
    sum(1 << p for p in range(1, HAMMING_POSITIONS + 1) if p >> j & 1)
    for j in range(len(PARITY_POSITIONS))
)


class FaultKind(enum.Enum):
    NO_FAULT = "no_fault"
    SINGLE_CORRECTED = "single_corrected"
    PARITY_BIT_FAULT = "parity_bit_fault"    # only the overall parity bit flipped
    DOUBLE_DETECTED = "double_detected"


class Syndrome(NamedTuple):
    c: int        # 5-bit Hamming syndrome; equals the flipped position if single
    p_check: int  # 1 when the overall parity check fails


@dataclass(frozen=True)
class DecodeOutcome:
    kind: FaultKind
    position: Optional[int] = None    # flipped position, SINGLE_CORRECTED only


def _parity(x):
    x ^= x >> 16
    x ^= x >> 8
    x ^= x >> 4
    x ^= x >> 2
    x ^= x >> 1
    return x & 1


def encode(data):
    """Pack a 16-bit word into its 22-bit codeword."""
    if data < 0 or data > 0xFFFF:
        raise ValueError(f"data word out of 16-bit range: {data:#x}")
    cw = 0
    for i, pos in enumerate(DATA_POSITIONS):
        cw |= (data >> i & 1) << pos
    for j, pos in enumerate(PARITY_POSITIONS):
        cw |= _parity(cw & _COVER_MASKS[j]) << pos
    cw |= _parity(cw)                 # overall parity at bit 0, even total
    return cw


def extract_data(cw):
    """The 16 data positions of a codeword, without any checking."""
    data = 0
    for i, pos in enumerate(DATA_POSITIONS):
        data |= (cw >> pos & 1) << i
    return data


def compute_syndrome(cw):
    """Stored-vs-recomputed parity mismatch of a codeword."""
    c = 0
    for j in range(len(PARITY_POSITIONS)):
        c |= _parity(cw & _COVER_MASKS[j]) << j
    return Syndrome(c=c, p_check=_parity(cw & CODEWORD_MASK))


def classify(s):
    """Map a syndrome to the fault class it indicates."""
    if s.c == 0:
        return FaultKind.PARITY_BIT_FAULT if s.p_check else FaultKind.NO_FAULT
    if s.p_check:
        # Syndromes above 21 name no real position; only >=3 flips produce them.
        if s.c <= HAMMING_POSITIONS:
            return FaultKind.SINGLE_CORRECTED
        return FaultKind.DOUBLE_DETECTED
    return FaultKind.DOUBLE_DETECTED


def decode(cw):
    """(data, outcome) for any 22-bit pattern.

    Single flips are corrected; a double flip returns the data positions as
    stored, uncorrected, with DOUBLE_DETECTED raised -- the policy layer
    decides what to do with them.
    """
    cw &= CODEWORD_MASK
    s = compute_syndrome(cw)
    kind = classify(s)
    if kind is FaultKind.SINGLE_CORRECTED:
        return extract_data(cw ^ (1 << s.c)), DecodeOutcome(kind, s.c)
    return extract_data(cw), DecodeOutcome(kind)


# ---------------------------------------------------------------- bulk API

_ENCODE_LUT = None

# kind codes used by decode_words (uint8 arrays)
KIND_NO_FAULT = 0
KIND_SINGLE = 1
KIND_PARITY_BIT = 2
KIND_DOUBLE = 3


def _build_encode_lut():
    words = np.arange(1 << DATA_BITS, dtype=np.uint32)
    cw = np.zeros_like(words)
    for i, pos in enumerate(DATA_POSITIONS):
        cw |= (words >> i & 1) << np.uint32(pos)
    for j, pos in enumerate(PARITY_POSITIONS):
        cw |= _parity_words(cw & np.uint32(_COVER_MASKS[j])) << np.uint32(pos)
    cw |= _parity_words(cw)
    return cw


def _parity_words(x):
    x = x.astype(np.uint32)
    x ^= x >> np.uint32(16)
    x ^= x >> np.uint32(8)
    x ^= x >> np.uint32(4)
    x ^= x >> np.uint32(2)
    x ^= x >> np.uint32(1)
    return x & np.uint32(1)


def encode_words(words):
    """Vectorized encode of a uint16 array via a 65536-entry table."""
    global _ENCODE_LUT
    if _ENCODE_LUT is None:
        _ENCODE_LUT = _build_encode_lut()
    return _ENCODE_LUT[np.asarray(words, dtype=np.uint16)]


def decode_words(codewords):
    """Vectorized decode: (data uint16, kind uint8) per word.

    Kind values are the KIND_* codes; data follows the scalar decode contract
    (corrected for singles, as-stored for doubles).
    """
    cw = np.asarray(codewords, dtype=np.uint32) & np.uint32(CODEWORD_MASK)
    c = np.zeros(cw.shape, dtype=np.uint32)
    for j in range(len(PARITY_POSITIONS)):
        c |= _parity_words(cw & np.uint32(_COVER_MASKS[j])) << np.uint32(j)
    p_check = _parity_words(cw)

    single = (c != 0) & (p_check == 1) & (c <= HAMMING_POSITIONS)
    kind = np.full(cw.shape, KIND_DOUBLE, dtype=np.uint8)
    kind[(c == 0) & (p_check == 0)] = KIND_NO_FAULT
    kind[(c == 0) & (p_check == 1)] = KIND_PARITY_BIT
    kind[single] = KIND_SINGLE

    corrected = np.where(single, cw ^ (np.uint32(1) << c), cw)
    data = np.zeros(cw.shape, dtype=np.uint16)
    for i, pos in enumerate(DATA_POSITIONS):
        data |= ((corrected >> np.uint32(pos)) & 1).astype(np.uint16) << np.uint16(i)
    return data, kind
