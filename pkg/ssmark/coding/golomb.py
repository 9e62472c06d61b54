"""Golomb source codec for run-length coded sparse bitmaps.

Codeword layout for n with parameter m:
  q = n // m in unary (q ones, then a zero),
  r = n - q * m in truncated binary: c - 1 bits when r < 2^c - m,
  otherwise r + 2^c - m in c bits, where c = ceil(log2 m).
For m a power of two (Rice codes) the remainder is always c bits.
"""
import dataclasses
import math

import numba
import numpy as np

from ssmark.imaging import BitPlane
from ssmark.util import build_logger


logger = build_logger("ssmark.golomb")

# m is carried in a fixed width header in front of the run codewords.
M_HEADER_BITS = 7
MIN_M = 2
MAX_M = 2 ** M_HEADER_BITS - 1
P_HAT_RANGE = (0.01, 0.99)


class TruncatedStreamError(ValueError):
    """The stream ended inside a codeword."""


class CorruptStreamError(ValueError):
    """The stream decodes to something inconsistent with its framing."""


@dataclasses.dataclass(frozen=True)
class GolombParam:
    m: int
    c: int = dataclasses.field(init=False)
    power_of_two: bool = dataclasses.field(init=False)

    def __post_init__(self):
        if not MIN_M <= self.m:
            raise ValueError(f"Golomb parameter m must be >= {MIN_M}, got {self.m}")
        object.__setattr__(self, "c", (self.m - 1).bit_length())
        object.__setattr__(self, "power_of_two", self.m & (self.m - 1) == 0)

    @property
    def threshold(self):
        """Remainders below this value use the short (c - 1 bit) form."""
        return (1 << self.c) - self.m


@dataclasses.dataclass(frozen=True, eq=False)
class BitStream:
    bits: np.ndarray

    def __post_init__(self):
        bits = np.array(self.bits, dtype=np.uint8).reshape(-1)
        if np.any(bits > 1):
            raise ValueError("BitStream entries must be 0 or 1")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_str(cls, text: str):
        return cls(np.array([int(ch) for ch in text if ch in "01"],
                            dtype=np.uint8))

    @classmethod
    def empty(cls):
        return cls(np.zeros(0, dtype=np.uint8))

    @classmethod
    def concat(cls, streams):
        streams = list(streams)
        if not streams:
            return cls.empty()
        return cls(np.concatenate([s.bits for s in streams]))

    @property
    def length(self):
        return self.bits.size

    def __len__(self):
        return self.bits.size

    def __str__(self):
        return "".join("1" if b else "0" for b in self.bits)

    def __eq__(self, other):
        if not isinstance(other, BitStream):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)


@numba.jit(nopython=True)
def codeword_length(n, m, c):
    q = n // m
    r = n - q * m
    if r < (1 << c) - m:
        return q + c
    return q + 1 + c


@numba.jit(nopython=True)
def _write_codeword(n, m, c, out, pos):
    q = n // m
    r = n - q * m
    for _ in range(q):
        out[pos] = 1
        pos += 1
    out[pos] = 0
    pos += 1

    t = (1 << c) - m
    if r < t:
        width = c - 1
    else:
        width = c
        r += t
    for i in range(width - 1, -1, -1):
        out[pos] = (r >> i) & 1
        pos += 1
    return pos


@numba.jit(nopython=True)
def _read_codeword(bits, pos, m, c):
    """Returns (n, next position); n = -1 when the stream ends mid-codeword."""
    size = bits.shape[0]
    q = 0
    while True:
        if pos >= size:
            return -1, pos
        b = bits[pos]
        pos += 1
        if b == 0:
            break
        q += 1

    if pos + c - 1 > size:
        return -1, pos
    v = 0
    for _ in range(c - 1):
        v = (v << 1) | bits[pos]
        pos += 1
    t = (1 << c) - m
    if v >= t:
        if pos >= size:
            return -1, pos
        v = ((v << 1) | bits[pos]) - t
        pos += 1
    return q * m + v, pos


@numba.jit(nopython=True)
def _write_sequence(values, m, c):
    total = 0
    for n in values:
        total += codeword_length(n, m, c)
    out = np.zeros(total, dtype=np.uint8)
    pos = 0
    for n in values:
        pos = _write_codeword(n, m, c, out, pos)
    return out


@numba.jit(nopython=True)
def _read_sequence(bits, pos, m, c, count):
    values = np.empty(count, dtype=np.int64)
    for i in range(count):
        n, pos = _read_codeword(bits, pos, m, c)
        if n < 0:
            return values, i, pos
        values[i] = n
    return values, count, pos


def optimal_m(p: float) -> GolombParam:
    """The best Golomb parameter for geometric runs whose symbol is a zero
    with probability p, clamped to the m >= 2 domain."""
    if not 0 < p < 1:
        raise ValueError(f"probability must lie in (0, 1), got {p}")
    m = math.ceil(-math.log2(1 + p) / math.log2(p))
    return GolombParam(max(m, MIN_M))


def encode(n: int, m: GolombParam) -> BitStream:
    if n < 0:
        raise ValueError(f"Golomb codes need a nonnegative integer, got {n}")
    out = np.zeros(codeword_length(n, m.m, m.c), dtype=np.uint8)
    _write_codeword(n, m.m, m.c, out, 0)
    return BitStream(out)


def decode(stream: BitStream, m: GolombParam, pos: int = 0):
    """Decode one codeword starting at `pos`. Returns (n, consumed bits)."""
    n, end = _read_codeword(stream.bits, pos, m.m, m.c)
    if n < 0:
        raise TruncatedStreamError(
            f"stream of {stream.length} bits ends inside the codeword "
            f"starting at bit {pos}")
    return int(n), end - pos


def encode_sequence(values, m: GolombParam) -> BitStream:
    """Concatenated codewords of a sequence of nonnegative integers."""
    values = np.asarray(values, dtype=np.int64).reshape(-1)
    if np.any(values < 0):
        raise ValueError("Golomb codes need nonnegative integers")
    return BitStream(_write_sequence(values, m.m, m.c))


def decode_sequence(stream: BitStream, m: GolombParam, count: int, pos: int = 0):
    """Decode `count` consecutive codewords. Returns (values, consumed bits)."""
    values, n_read, end = _read_sequence(stream.bits, pos, m.m, m.c, count)
    if n_read < count:
        raise TruncatedStreamError(
            f"stream of {stream.length} bits holds only {n_read} of "
            f"{count} codewords")
    return values, end - pos


def _to_bits(value: int, width: int):
    return np.array([(value >> i) & 1 for i in range(width - 1, -1, -1)],
                    dtype=np.uint8)


def bitmap_runs(bits: np.ndarray):
    """Zero-run lengths of a flat bitmap, each run closed by a one. The
    trailing run after the last one is appended only when it is nonempty."""
    ones = np.flatnonzero(bits)
    runs = np.diff(np.concatenate([[-1], ones])) - 1
    tail = bits.size - (ones[-1] + 1 if ones.size else 0)
    if tail > 0:
        runs = np.append(runs, tail)
    return runs.astype(np.int64)


def encode_bitmap(plane: BitPlane) -> BitStream:
    """Row-major zero-run lengths, Golomb coded behind a 7-bit m header.

    m follows from the share of zero pixels. The decoder learns the pixel
    count from the pipeline header, so the trailing run needs no terminator.
    """
    flat = plane.flat()
    p_hat = float(np.clip(np.mean(flat == 0), *P_HAT_RANGE))
    m = optimal_m(p_hat)
    assert m.m <= MAX_M

    runs = bitmap_runs(flat)
    header = BitStream(_to_bits(m.m, M_HEADER_BITS))
    body = encode_sequence(runs, m)
    logger.debug(f"encode_bitmap: p_hat={p_hat:.3f}, m={m.m}, "
                 f"runs={runs.size}, bits={M_HEADER_BITS + body.length}")
    return BitStream.concat([header, body])


def peek_m(stream: BitStream) -> int:
    """The Golomb parameter stored in the header of an encoded bitmap."""
    if stream.length < M_HEADER_BITS:
        raise TruncatedStreamError(
            f"stream of {stream.length} bits is shorter than the m header")
    return int(np.dot(stream.bits[:M_HEADER_BITS].astype(np.int64),
                      1 << np.arange(M_HEADER_BITS - 1, -1, -1)))


def _decode_runs(stream: BitStream, total: int):
    """Replay runs into a flat bitmap.

    Returns (flat bits, error or None). Decoding stops at the
    first inconsistency; pixels past that point stay zero.
    """
    flat = np.zeros(total, dtype=np.uint8)
    bits = stream.bits
    if bits.size < M_HEADER_BITS:
        return flat, TruncatedStreamError(
            f"stream of {bits.size} bits is shorter than the m header")

    m = peek_m(stream)
    if m < MIN_M:
        return flat, CorruptStreamError(f"invalid Golomb parameter m={m}")
    param = GolombParam(m)

    pos = M_HEADER_BITS
    filled = 0
    while filled < total:
        n, pos = _read_codeword(bits, pos, param.m, param.c)
        if n < 0:
            return flat, TruncatedStreamError(
                f"stream ends after {filled} of {total} pixels")
        if filled + n > total:
            return flat, CorruptStreamError(
                f"run of {n} overruns the {total} pixel plane at {filled}")
        filled += n
        if filled < total:
            flat[filled] = 1
            filled += 1

    if pos != bits.size:
        return flat, CorruptStreamError(
            f"{bits.size - pos} trailing bits after the last run")
    return flat, None


def decode_bitmap(stream: BitStream, width: int, height: int) -> BitPlane:
    """Exact inverse of `encode_bitmap` for the stated dimensions."""
    flat, error = _decode_runs(stream, width * height)
    if error is not None:
        raise error
    return BitPlane.from_flat(flat, width, height)


def salvage_bitmap(stream: BitStream, width: int, height: int):
    """Best-effort decoding. Returns (plane, complete) and never raises on
    stream damage; undecodable pixels are left zero."""
    flat, error = _decode_runs(stream, width * height)
    if error is not None:
        logger.warning(f"salvage_bitmap: {error}")
    return BitPlane.from_flat(flat, width, height), error is None


def pack_bits(stream: BitStream) -> bytes:
    """MSB-first packing, final byte zero padded."""
    return np.packbits(stream.bits).tobytes()


def unpack_bits(buf: bytes, n_bits: int) -> BitStream:
    bits = np.unpackbits(np.frombuffer(buf, dtype=np.uint8))
    if bits.size < n_bits:
        raise TruncatedStreamError(f"{len(buf)} bytes hold fewer than "
                                   f"{n_bits} bits")
    return BitStream(bits[:n_bits])
