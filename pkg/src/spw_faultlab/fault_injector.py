"""Statistical bit-flip injection and the accuracy-distribution chain.

Faults are transient single-event upsets in the parameter memory: every
in-scope stored bit flips independently with probability q per trial, where
q = p (standard Bernoulli) or q = 1 - (1-p)**3 (min-of-three variant, the
effective rate of taking the smallest of three uniform draws).  A mask is
XORed onto the stored words, the store is read back through its protection
policy, and the faulty model's accuracy becomes one trial sample.

The chain variant filters trials through a Metropolis-style acceptance rule:
a trial is accepted with probability min(1, acc_current / acc_previous),
otherwise the previous recorded value is recorded again.  The previous
accuracy starts at zero, so the first trial is always accepted.  The
proposal kernel is symmetric (flipping is an XOR walk on the hypercube:
the chance of any word a becoming b equals that of b becoming a), which
proposal_symmetry_check verifies empirically.

RNG discipline: one numpy Generator per chain, seeded from the config.
Per trial, draws happen in a fixed order (per-tensor mask matrices in store
order, redraw rounds for over-limit words, then one acceptance uniform), so
(seed, config) fully determines every mask and sample regardless of how
many chains run concurrently elsewhere.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats as _scipy_stats

from . import nn_engine
from .protected_store import ModelStore, ProtectionMode

TARGETS = ("all", "conv", "fc")
BIT_SCOPES = ("data", "full")
RAND_VARIANTS = ("standard", "min_of_three")
_REDRAW_ATTEMPTS = 100


@dataclass(frozen=True)
class FaultConfig:
    p: float
    limit: Optional[int] = None      # max flips per word; 2 in the studies
    target: str = "all"
    bit_scope: Optional[str] = None  # None = full under ECC/SPW, data under NONE
    rand_variant: str = "standard"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"flip probability must be in [0, 1], got {self.p}")
        if self.limit is not None and self.limit < 1:
            raise ValueError("per-word flip limit must be at least 1")
        if self.target not in TARGETS:
            raise ValueError(f"target must be one of {TARGETS}, got {self.target!r}")
        if self.bit_scope is not None and self.bit_scope not in BIT_SCOPES:
            raise ValueError(f"bit_scope must be one of {BIT_SCOPES}")
        if self.rand_variant not in RAND_VARIANTS:
            raise ValueError(f"rand_variant must be one of {RAND_VARIANTS}")

    @property
    def q(self):
        """Effective per-bit flip probability."""
        if self.rand_variant == "min_of_three":
            return 1.0 - (1.0 - self.p) ** 3
        return self.p


@dataclass(frozen=True)
class ChainConfig:
    iterations: int
    dataset: object                  # needs .images / .labels / .golden_predictions
    accuracy_mode: str = "truth"
    protection: ProtectionMode = ProtectionMode.SPW

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")


@dataclass(frozen=True)
class FaultMask:
    """Packed per-tensor bit masks over the stored words, target tensors only."""
    masks: dict    # name -> array with the store's word dtype

    def total_flips(self):
        return sum(int(np.unpackbits(m.view(np.uint8)).sum())
                   for m in self.masks.values())


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    accuracy: float       # the recorded sample (previous value if rejected)
    accepted: bool
    flips_injected: int
    singles_corrected: int
    doubles: int          # masked under SPW, passed under ECC_ONLY


@dataclass(frozen=True)
class AccuracyDistribution:
    samples: list
    trials: list
    fault_config: FaultConfig
    chain_config_desc: dict = field(default_factory=dict)

    def quartiles(self):
        """(min, Q1, median, Q3, max), linear-interpolation convention."""
        q = np.percentile(self.samples, [0, 25, 50, 75, 100], method="linear")
        return tuple(float(v) for v in q)

    def median(self):
        return self.quartiles()[2]


def scope_positions(mode, bit_scope):
    """Flippable bit positions within a stored word, ascending."""
    from . import secded
    if mode is ProtectionMode.NONE:
        return tuple(range(16))
    if bit_scope is None or bit_scope == "full":
        return tuple(range(secded.CODEWORD_BITS))
    return secded.DATA_POSITIONS


def _pack(bits_bool, positions, dtype):
    shifted = bits_bool.astype(np.uint32) << np.array(positions, dtype=np.uint32)
    return shifted.sum(axis=1, dtype=np.uint64).astype(dtype)


def gen_mask(cfg, store, rng):
    """Draw one trial's FaultMask for the store's in-scope tensors.

    Limit enforcement redraws any word holding more than `limit` set bits
    (up to 100 rounds), then truncates stragglers to the lowest-index bits;
    at the error rates studied here a single redraw round almost always
    suffices, so the conditional per-bit distribution is preserved to
    within rounding.
    """
    q = cfg.q
    masks = {}
    for name in store.target_names(cfg.target):
        pt = store.tensors[name]
        positions = scope_positions(store.mode, cfg.bit_scope)
        n = pt.words.size
        bits = rng.random((n, len(positions))) < q
        if cfg.limit is not None:
            counts = bits.sum(axis=1)
            over = np.flatnonzero(counts > cfg.limit)
            for _ in range(_REDRAW_ATTEMPTS):
                if over.size == 0:
                    break
                redraw = rng.random((over.size, len(positions))) < q
                bits[over] = redraw
                counts[over] = redraw.sum(axis=1)
                over = over[counts[over] > cfg.limit]
            for i in over:               # truncate any stragglers
                keep = np.flatnonzero(bits[i])[:cfg.limit]
                bits[i] = False
                bits[i, keep] = True
        masks[name] = _pack(bits, positions, pt.words.dtype)
    return FaultMask(masks)


def apply_mask(pt, mask_words):
    """XOR a word mask onto one ProtectedTensor, returning a fresh copy."""
    mask_words = np.asarray(mask_words)
    if mask_words.dtype != pt.words.dtype or mask_words.shape != pt.words.shape:
        raise ValueError("mask width/shape does not match the stored words")
    return pt.with_words(pt.words ^ mask_words)


def apply_mask_store(store, fault_mask):
    """Apply a FaultMask across a ModelStore; untargeted tensors unchanged."""
    tensors = []
    for name, pt in store.tensors.items():
        if name in fault_mask.masks:
            pt = apply_mask(pt, fault_mask.masks[name])
        tensors.append((name, pt))
    return store.with_tensors(tensors)


def _run_trials(model, fcfg, ccfg, chained):
    if len(ccfg.dataset.images) == 0:
        raise ValueError("dataset is empty")
    store = ModelStore.protect_model(model, ccfg.protection)
    rng = np.random.default_rng(fcfg.seed)
    samples = []
    trials = []
    acc_prev = 0.0
    for t in range(ccfg.iterations):
        mask = gen_mask(fcfg, store, rng)
        faulty_model, report = apply_mask_store(store, mask).read_model()
        acc_cur = nn_engine.evaluate(faulty_model, ccfg.dataset, ccfg.accuracy_mode)
        u = rng.random()
        if chained:
            ratio = math.inf if acc_prev == 0 else acc_cur / acc_prev
            accepted = u < min(1.0, ratio)
        else:
            accepted = True
        if accepted:
            acc_prev = acc_cur
        recorded = acc_cur if accepted else acc_prev
        samples.append(recorded)
        trials.append(TrialRecord(
            trial=t,
            accuracy=recorded,
            accepted=accepted,
            flips_injected=mask.total_flips(),
            singles_corrected=report.singles_corrected,
            doubles=report.doubles,
        ))
    desc = {
        "iterations": ccfg.iterations,
        "accuracy_mode": ccfg.accuracy_mode,
        "protection": ccfg.protection.value,
        "chained": chained,
    }
    return AccuracyDistribution(samples, trials, fcfg, desc)


def metropolis_chain(model, fcfg, ccfg):
    """Metropolis-filtered accuracy chain: M recorded samples."""
    return _run_trials(model, fcfg, ccfg, chained=True)


def iid_campaign(model, fcfg, ccfg):
    """Unfiltered baseline: every trial's accuracy recorded unconditionally."""
    return _run_trials(model, fcfg, ccfg, chained=False)


# ------------------------------------------------- proposal symmetry check

def transition_probability(a, b, word_width, p):
    """Analytic kernel probability (1-p)**n_unchanged * p**n_flipped."""
    m = bin((a ^ b) & ((1 << word_width) - 1)).count("1")
    return (1.0 - p) ** (word_width - m) * p ** m


@dataclass(frozen=True)
class SymmetryReport:
    word_width: int
    p: float
    trials: int
    counts: np.ndarray       # (2**w, 2**w) observed transition counts
    statistic: float
    dof: int
    p_value: float
    passed: bool

    def conditional(self, a, b):
        """Observed frequency of a -> b among trials that started at a."""
        row = self.counts[a].sum()
        return self.counts[a, b] / row if row else 0.0


def proposal_symmetry_check(p, word_width=4, trials=200_000, seed=0,
                            significance=0.001):
    """Empirical symmetry test of the Bernoulli flip kernel on one word.

    Starts uniform over the 2**w states, applies one mask per trial, and
    tests every unordered state pair for equal forward/backward counts
    (each direction is Binomial(total, 1/2) under symmetry; aggregate
    chi-square with one dof per observed pair).
    """
    n_states = 1 << word_width
    rng = np.random.default_rng(seed)
    start = rng.integers(0, n_states, size=trials)
    flips = rng.random((trials, word_width)) < p
    mask = _pack(flips, tuple(range(word_width)), np.uint32)
    end = start ^ mask
    counts = np.zeros((n_states, n_states), dtype=np.int64)
    np.add.at(counts, (start, end), 1)

    statistic = 0.0
    dof = 0
    for a in range(n_states):
        for b in range(a + 1, n_states):
            total = counts[a, b] + counts[b, a]
            if total == 0:
                continue
            statistic += (counts[a, b] - counts[b, a]) ** 2 / total
            dof += 1
    p_value = float(_scipy_stats.chi2.sf(statistic, dof)) if dof else 1.0
    return SymmetryReport(
        word_width=word_width, p=p, trials=trials, counts=counts,
        statistic=float(statistic), dof=dof, p_value=p_value,
        passed=p_value >= significance,
    )
