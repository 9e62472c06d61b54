"""Convolutional channel encoder and hard-decision Viterbi decoder.

The shift register holds the current input bit at position K-1 (the most
significant generator tap) and the K-1 previous bits below it. The trellis is
terminated: K-1 zero tail bits are flushed after the information bits so that
decoding starts and ends in the all-zero state.
"""
import dataclasses
import functools
from typing import Tuple

import numba
import numpy as np

from ssmark.coding.golomb import BitStream
from ssmark.util import build_logger


logger = build_logger("ssmark.convcode")

# Path metric of unreachable states; far above any Hamming distance.
UNREACHABLE = 1 << 40


class FramingError(ValueError):
    """A codeword whose length does not match its code and info length."""


@dataclasses.dataclass(frozen=True)
class ConvCodeSpec:
    name: str
    constraint_length: int
    generators: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(self.generators))
        if self.constraint_length < 2:
            raise ValueError(f"{self.name}: constraint length must be >= 2")
        if len(self.generators) < 2:
            raise ValueError(f"{self.name}: need at least 2 generators")
        for g in self.generators:
            if not 0 < g < (1 << self.constraint_length):
                raise ValueError(f"{self.name}: generator {g:o} (octal) is zero "
                                 f"or wider than {self.constraint_length} bits")

    @property
    def rate(self):
        return 1 / len(self.generators)

    @property
    def n_states(self):
        return 1 << (self.constraint_length - 1)

    @property
    def tail_length(self):
        return self.constraint_length - 1

    def coded_length(self, info_length: int):
        return len(self.generators) * (info_length + self.tail_length)

    def info_length(self, coded_length: int):
        """Inverse of `coded_length`; -1 when no info length fits."""
        n_gen = len(self.generators)
        if coded_length % n_gen or coded_length // n_gen < self.tail_length:
            return -1
        return coded_length // n_gen - self.tail_length


# Rate 1/2, K = 7, generators 171 and 133 octal.
K7_STANDARD = ConvCodeSpec("k7_standard", 7, (0o171, 0o133))
# Rate 1/2, K = 3, generators 7 and 5 octal; small enough for exhaustive checks.
K3_TEST = ConvCodeSpec("k3_test", 3, (0o7, 0o5))

CONV_CODES = {spec.name: spec for spec in (K7_STANDARD, K3_TEST)}


def get_conv_code(name: str) -> ConvCodeSpec:
    if name not in CONV_CODES:
        raise ValueError(f"Invalid convolutional code: {name}. "
                         f"Choose from {sorted(CONV_CODES)}")
    return CONV_CODES[name]


@dataclasses.dataclass(frozen=True, eq=False)
class Codeword:
    bits: BitStream
    info_length: int


@functools.lru_cache(maxsize=None)
def trellis_tables(spec: ConvCodeSpec):
    """Next-state and output tables indexed by [state, input bit]."""
    k = spec.constraint_length
    n_states = spec.n_states
    next_state = np.empty((n_states, 2), dtype=np.int64)
    outputs = np.empty((n_states, 2, len(spec.generators)), dtype=np.uint8)
    for state in range(n_states):
        for bit in range(2):
            reg = (bit << (k - 1)) | state
            next_state[state, bit] = reg >> 1
            for i, g in enumerate(spec.generators):
                outputs[state, bit, i] = bin(reg & g).count("1") & 1
    next_state.setflags(write=False)
    outputs.setflags(write=False)
    return next_state, outputs


@numba.jit(nopython=True)
def _encode_kernel(info, tail, next_state, outputs):
    n_gen = outputs.shape[2]
    steps = info.shape[0] + tail
    out = np.zeros(steps * n_gen, dtype=np.uint8)
    state = 0
    for t in range(steps):
        bit = info[t] if t < info.shape[0] else 0
        for i in range(n_gen):
            out[t * n_gen + i] = outputs[state, bit, i]
        state = next_state[state, bit]
    return out


@numba.jit(nopython=True)
def _viterbi_kernel(received, info_length, tail, k, next_state, outputs):
    n_states = next_state.shape[0]
    n_gen = outputs.shape[2]
    steps = info_length + tail
    top_shift = k - 2

    metrics = np.full(n_states, UNREACHABLE, dtype=np.int64)
    metrics[0] = 0
    new_metrics = np.empty(n_states, dtype=np.int64)
    # Low bit of the surviving predecessor of each state at each step.
    decisions = np.zeros((steps, n_states), dtype=np.uint8)

    for t in range(steps):
        base = t * n_gen
        for ns in range(n_states):
            bit = ns >> top_shift
            if t >= info_length and bit == 1:
                new_metrics[ns] = UNREACHABLE
                continue
            best = UNREACHABLE
            choice = 0
            for low in range(2):
                ps = ((ns << 1) & (n_states - 1)) | low
                if metrics[ps] >= UNREACHABLE:
                    continue
                dist = 0
                for i in range(n_gen):
                    if outputs[ps, bit, i] != received[base + i]:
                        dist += 1
                m = metrics[ps] + dist
                # strict comparison keeps the lower numbered predecessor on ties
                if m < best:
                    best = m
                    choice = low
            new_metrics[ns] = best
            decisions[t, ns] = choice
        for s in range(n_states):
            metrics[s] = new_metrics[s]

    decoded = np.zeros(info_length, dtype=np.uint8)
    state = 0
    for t in range(steps - 1, -1, -1):
        if t < info_length:
            decoded[t] = state >> top_shift
        state = ((state << 1) & (n_states - 1)) | decisions[t, state]
    return decoded, metrics[0]


def conv_encode(info: BitStream, spec: ConvCodeSpec = K7_STANDARD) -> Codeword:
    next_state, outputs = trellis_tables(spec)
    bits = _encode_kernel(info.bits, spec.tail_length, next_state, outputs)
    return Codeword(BitStream(bits), info.length)


def viterbi_decode_with_metric(word: Codeword, spec: ConvCodeSpec = K7_STANDARD):
    """Decode and also return the Hamming distance between the received
    word and the re-encoded decision."""
    expected = spec.coded_length(word.info_length)
    if word.info_length < 0 or word.bits.length != expected:
        raise FramingError(
            f"{spec.name}: codeword has {word.bits.length} bits, expected "
            f"{expected} for {word.info_length} info bits")
    next_state, outputs = trellis_tables(spec)
    decoded, distance = _viterbi_kernel(
        word.bits.bits, word.info_length, spec.tail_length,
        spec.constraint_length, next_state, outputs)
    return BitStream(decoded), int(distance)


def viterbi_decode(word: Codeword, spec: ConvCodeSpec = K7_STANDARD) -> BitStream:
    """Maximum likelihood info bits under the Hamming metric."""
    return viterbi_decode_with_metric(word, spec)[0]
