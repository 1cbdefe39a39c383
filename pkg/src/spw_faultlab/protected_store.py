"""Parameter memory behind a selectable protection policy.

A ProtectedTensor is the stored image of one parameter tensor: raw 16-bit
words under no protection, or 22-bit SECDED codewords otherwise.  Reading it
back runs the policy's data path per word:

* NONE     : bits pass straight through, faults and all
* ECC_ONLY : singles corrected; detected doubles emit the stored data
             positions uncorrected
* SPW      : singles corrected; detected doubles emit 0x0000, which is
             exactly 0.0 in Q4.11, so a known-bad parameter never
             propagates a wrong nonzero value

Every read also returns a ReadReport tallying word outcomes; the counts are
conserved (clean + singles + parity-bit faults + doubles = words read).

ModelStore bundles the ten tensors of a model, keeps the conv/fc grouping
the fault injector targets, and rebuilds a Model from a (possibly faulty)
image in one scrub.
"""

import enum
from dataclasses import dataclass

import numpy as np

from . import fixedpoint as fx
from . import nn_engine, secded

MASK_WORD = 0x0000    # what SPW emits for a detected double


class ProtectionMode(enum.Enum):
    NONE = "none"
    ECC_ONLY = "ecc"
    SPW = "spw"


def bit_width(mode):
    """Stored word width: 16 raw bits, or 22 with the SECDED check bits."""
    return 16 if mode is ProtectionMode.NONE else secded.CODEWORD_BITS


def storage_overhead(mode):
    """Check bits per data bit: 0 unprotected, 6/16 = 0.375 for both codes."""
    if mode is ProtectionMode.NONE:
        return 0.0
    return (secded.CODEWORD_BITS - secded.DATA_BITS) / secded.DATA_BITS


@dataclass(frozen=True)
class ReadReport:
    """Word-outcome tally of one read; `doubles` are masked under SPW and
    passed through under ECC_ONLY."""
    words_read: int = 0
    clean: int = 0
    singles_corrected: int = 0
    parity_bit_faults: int = 0
    doubles: int = 0

    def __add__(self, other):
        return ReadReport(
            self.words_read + other.words_read,
            self.clean + other.clean,
            self.singles_corrected + other.singles_corrected,
            self.parity_bit_faults + other.parity_bit_faults,
            self.doubles + other.doubles,
        )

    def conserved(self):
        return (self.clean + self.singles_corrected + self.parity_bit_faults
                + self.doubles) == self.words_read


@dataclass(frozen=True)
class ProtectedTensor:
    shape: tuple
    words: np.ndarray    # flat; uint16 (NONE) or uint32 codewords
    mode: ProtectionMode

    def with_words(self, words):
        return ProtectedTensor(self.shape, words, self.mode)


def protect(tensor, mode):
    """Store an int16 parameter tensor under the given policy."""
    tensor = np.asarray(tensor, dtype=np.int16)
    bits = fx.raw_to_bits(tensor.reshape(-1))
    if mode is ProtectionMode.NONE:
        words = bits.copy()
    else:
        words = secded.encode_words(bits)
    return ProtectedTensor(tensor.shape, words, mode)


def read(pt, mode):
    """(tensor, report) recovered from a stored image via the policy."""
    if mode is not pt.mode:
        raise ValueError(
            f"tensor stored under {pt.mode.value!r} cannot be read as {mode.value!r}")
    n = pt.words.size
    if mode is ProtectionMode.NONE:
        data_bits = pt.words
        report = ReadReport(words_read=n, clean=n)
    else:
        data_bits, kind = secded.decode_words(pt.words)
        counts = np.bincount(kind, minlength=4)
        doubles = int(counts[secded.KIND_DOUBLE])
        if mode is ProtectionMode.SPW and doubles:
            data_bits = np.where(
                kind == secded.KIND_DOUBLE, np.uint16(MASK_WORD), data_bits)
        report = ReadReport(
            words_read=n,
            clean=int(counts[secded.KIND_NO_FAULT]),
            singles_corrected=int(counts[secded.KIND_SINGLE]),
            parity_bit_faults=int(counts[secded.KIND_PARITY_BIT]),
            doubles=doubles,
        )
    tensor = fx.bits_to_raw(np.ascontiguousarray(data_bits)).reshape(pt.shape)
    return tensor, report


CONV_TENSORS = ("conv1.weights", "conv1.bias", "conv2.weights", "conv2.bias")
FC_TENSORS = ("fc1.weights", "fc1.bias", "fc2.weights", "fc2.bias",
              "fc3.weights", "fc3.bias")


class ModelStore:
    """All ten parameter tensors of a model under one protection policy."""

    def __init__(self, tensors, mode):
        self.mode = mode
        self.tensors = dict(tensors)    # name -> ProtectedTensor, forward order
        expected = CONV_TENSORS + FC_TENSORS
        if tuple(self.tensors) != expected:
            raise ValueError("store must hold the ten model tensors in order")

    @classmethod
    def protect_model(cls, model, mode):
        return cls(
            [(name, protect(t, mode)) for name, t in model.tensor_items()], mode)

    def with_tensors(self, tensors):
        return ModelStore(tensors, self.mode)

    def read_model(self):
        """(Model, aggregated ReadReport) from the current stored image."""
        parts = []
        report = ReadReport()
        for pt in self.tensors.values():
            tensor, r = read(pt, self.mode)
            parts.append(tensor)
            report = report + r
        return nn_engine.build_model(parts), report

    def target_names(self, target):
        """Tensor names in scope for a fault target (all / conv / fc)."""
        if target == "all":
            return CONV_TENSORS + FC_TENSORS
        if target == "conv":
            return CONV_TENSORS
        if target == "fc":
            return FC_TENSORS
        raise ValueError(f"unknown fault target {target!r}")
