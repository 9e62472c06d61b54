"""Keyed pseudo-random +/-1 reference marks and correlation utilities.

All randomness in the package comes from one in-repo xorshift64 generator so
that embedder and detector regenerate identical marks from a key on every
platform. The seed is first scrambled with one splitmix64 step so that close
seeds (1, 2, ...) give unrelated streams.
"""
import dataclasses

import numba
import numpy as np

from ssmark.util import short_digest


MAX_SEED = 2 ** 64

# xorshift64 shift triple and splitmix64 constants.
_SHIFT_A = np.uint64(13)
_SHIFT_B = np.uint64(7)
_SHIFT_C = np.uint64(17)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ZERO_STATE = np.uint64(0x2545F4914F6CDD1D)


@numba.jit(nopython=True)
def _scramble(seed):
    z = seed + _GOLDEN
    z = (z ^ (z >> _S30)) * _MIX_1
    z = (z ^ (z >> _S27)) * _MIX_2
    z = z ^ (z >> _S31)
    if z == np.uint64(0):
        z = _ZERO_STATE
    return z


@numba.jit(nopython=True)
def _fill_keystream(seed, out):
    x = _scramble(seed)
    for i in range(out.shape[0]):
        x ^= x << _SHIFT_A
        x ^= x >> _SHIFT_B
        x ^= x << _SHIFT_C
        out[i] = x


@numba.jit(nopython=True)
def _fill_balanced_marks(stream, marks):
    n_marks, length = marks.shape
    for j in range(n_marks):
        row = marks[j]
        half = (length + 1) // 2
        for i in range(length):
            row[i] = 1 if i < half else -1
        # Fisher-Yates driven by the j-th block of the stream
        base = j * length
        for i in range(length - 1, 0, -1):
            k = np.int64(stream[base + i] % np.uint64(i + 1))
            tmp = row[i]
            row[i] = row[k]
            row[k] = tmp


def keystream(seed: int, count: int) -> np.ndarray:
    """The first `count` 64-bit words of the keyed xorshift64 stream."""
    out = np.empty(count, dtype=np.uint64)
    _fill_keystream(np.uint64(seed), out)
    return out


def uniform(seed: int, count: int) -> np.ndarray:
    """Doubles in [0, 1) from the top 53 bits of each stream word."""
    words = keystream(seed, count)
    return (words >> _S11).astype(np.float64) * (1.0 / 2 ** 53)


@dataclasses.dataclass(frozen=True)
class WatermarkKey:
    """The secret shared by embedder and detector."""
    seed: int

    def __post_init__(self):
        seed = int(self.seed)
        if not 0 <= seed < MAX_SEED:
            raise ValueError(f"key seed must be a 64-bit unsigned integer, "
                             f"got {self.seed}")
        object.__setattr__(self, "seed", seed)

    def hint(self):
        """A short digest safe to publish next to the watermarked image."""
        return short_digest(f"ssmark-key:{self.seed}")

    def derive(self, index: int):
        """A different key deterministically derived from this one."""
        word = keystream((self.seed + index + 1) % MAX_SEED, 1)[0]
        return WatermarkKey(int(word))

    def family(self, count: int):
        return [self.derive(i) for i in range(count)]


@dataclasses.dataclass(frozen=True, eq=False)
class PnSet:
    """N reference marks of length M with entries in {-1, +1}."""
    marks: np.ndarray

    def __post_init__(self):
        marks = np.array(self.marks, dtype=np.int8)
        assert marks.ndim == 2
        marks.setflags(write=False)
        object.__setattr__(self, "marks", marks)

    @property
    def n_marks(self):
        return self.marks.shape[0]

    @property
    def length(self):
        return self.marks.shape[1]

    def as_float(self):
        return self.marks.astype(np.float64)

    def __getitem__(self, j):
        return self.marks[j]

    def __eq__(self, other):
        if not isinstance(other, PnSet):
            return NotImplemented
        return np.array_equal(self.marks, other.marks)


def generate(key: WatermarkKey, n_marks: int, length: int,
             balanced: bool = True) -> PnSet:
    """Generate N keyed +/-1 marks of length M.

    Mark j is derived from the j-th block of M consecutive stream words.
    With `balanced`, each mark is a keyed shuffle of ceil(M/2) ones and
    floor(M/2) minus ones, so it has no correlation with a constant signal.
    Otherwise each entry is the sign bit of its stream word.
    """
    if n_marks < 1 or length < 1:
        raise ValueError(f"mark count and length must be positive, "
                         f"got n_marks={n_marks}, length={length}")

    stream = keystream(key.seed, n_marks * length)
    if balanced:
        marks = np.empty((n_marks, length), dtype=np.int8)
        _fill_balanced_marks(stream, marks)
    else:
        top = (stream >> np.uint64(63)).astype(np.int8)
        marks = (2 * top - 1).reshape(n_marks, length)
    return PnSet(marks)


def complement(pn_set: PnSet) -> PnSet:
    """Negate every entry. Paired with the original it gives correlation -1."""
    return PnSet(-pn_set.marks)


def correlate(a, b) -> float:
    """(1/M) * sum(a_i * b_i)."""
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise ValueError("cannot correlate empty sequences")
    return float(np.dot(a, b) / a.size)
