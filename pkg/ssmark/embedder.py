"""Spread-spectrum embedding and blind extraction.

The N-bit message is spread over two sub-bands: LL carries a share of
sum_j x_j P_j and HH the rest of the same sum over the complement marks. The
spatial watermark is the inverse transform of these bands, weighted pixel by
pixel with the perceptual mask of the host. The detector correlates LL with
P_k and HH with -P_k and averages the two.

Compression attacks quantize LL far more finely than HH, so by default LL
carries most of the decision response.

Embedding and detection are both linear, so the detector output on the
watermarked image is h + G x, where h is the response of the host and G the
N x N response to unit gain bits. Solving G x = tau * B - h for the signed
gains x_j = alpha_j * B_j puts every decision exactly at the margin tau on the
clean image.
"""
import collections
import dataclasses
import functools
import hashlib
import json
import threading
from typing import Optional

import numpy as np
import scipy.linalg
from scipy import stats

from ssmark.coding.convcode import (ConvCodeSpec, Codeword, FramingError,
    K7_STANDARD, conv_encode, viterbi_decode_with_metric)
from ssmark.coding.golomb import (BitStream, encode_bitmap, decode_bitmap,
    salvage_bitmap, peek_m)
from ssmark.imaging import BitPlane, GrayImage
from ssmark.pn import PnSet, WatermarkKey, generate
from ssmark.util import build_logger
from ssmark.wavelet import (DB2, DimensionError, PerceptualMask, SubbandSet,
    WaveletSpec, analysis, forward, perceptual_mask, synthesis)


logger = build_logger("ssmark.embedder")

# Sub-band length needed per embedded bit.
CAPACITY_FACTOR = 16
# Gain of bits whose own contribution is not needed to meet the margin.
GAIN_FLOOR = 1e-6
COND_LIMIT = 1e10
# Smallest mean decision response to a unit gain. Below it the mask is
# (numerically) empty and no gain within max_gain moves a decision.
MIN_RESPONSE = 1e-3
# Unit responses synthesized per batch while building the response matrix.
RESPONSE_CHUNK = 32
CONTEXT_CACHE_SIZE = 2
GAIN_MODES = ("compensated", "uniform")


class CapacityError(ValueError):
    """The message needs more sub-band coefficients than the image has."""


class GainSolveError(ValueError):
    """The response matrix of this host and key is singular or too weak."""


class MarginError(GainSolveError):
    """The repaired gains still leave a decision below tau / 2."""


@dataclasses.dataclass(frozen=True, eq=False)
class BitMessage:
    """The payload as +/-1 symbols; bit 1 maps to +1 and bit 0 to -1."""
    symbols: np.ndarray

    def __post_init__(self):
        symbols = np.array(self.symbols, dtype=np.int8).reshape(-1)
        if symbols.size == 0 or np.any(np.abs(symbols) != 1):
            raise ValueError("BitMessage symbols must be a nonempty +/-1 sequence")
        symbols.setflags(write=False)
        object.__setattr__(self, "symbols", symbols)

    @classmethod
    def from_bits(cls, bits):
        bits = np.asarray(bits, dtype=np.int8).reshape(-1)
        return cls(2 * bits - 1)

    def bits(self):
        return ((self.symbols + 1) // 2).astype(np.uint8)

    @property
    def n_bits(self):
        return self.symbols.size

    def __len__(self):
        return self.symbols.size

    def __eq__(self, other):
        if not isinstance(other, BitMessage):
            return NotImplemented
        return np.array_equal(self.symbols, other.symbols)


@dataclasses.dataclass(frozen=True)
class EmbedParams:
    key: WatermarkKey
    wavelet: WaveletSpec = DB2
    msk_max: float = 8.0
    # Target decision value on the clean watermarked image.
    tau: float = 0.06
    max_gain: float = 64.0
    gain_mode: str = "compensated"
    uniform_alpha: float = 0.05
    repair_passes: int = 8
    # Fraction of the decision response carried by LL; 0.5 is an even split.
    ll_share: float = 0.95

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"margin tau must be positive, got {self.tau}")
        if not 0 < self.ll_share <= 1:
            raise ValueError(f"ll_share must lie in (0, 1], got {self.ll_share}")
        if not self.max_gain > 0:
            raise ValueError(f"max_gain must be positive, got {self.max_gain}")
        if not self.msk_max > 0:
            raise ValueError(f"msk_max must be positive, got {self.msk_max}")
        if self.gain_mode not in GAIN_MODES:
            raise ValueError(f"Invalid gain mode: {self.gain_mode}")
        if not 0 < self.uniform_alpha <= self.max_gain:
            raise ValueError(f"uniform_alpha must lie in (0, max_gain], "
                             f"got {self.uniform_alpha}")
        if self.repair_passes < 1:
            raise ValueError(f"repair_passes must be >= 1, got {self.repair_passes}")

    def with_key(self, key: WatermarkKey):
        return dataclasses.replace(self, key=key)


@dataclasses.dataclass(frozen=True, eq=False)
class GainVector:
    alphas: np.ndarray
    # Some gains were limited to max_gain.
    clamped: bool = False
    # Number of gains held at the floor.
    floored: int = 0
    passes: int = 1
    # min_k B_k * D_k predicted for the clean watermarked image.
    margin: float = float("nan")
    # The margin the gains were solved for; nan for uniform gains.
    tau: float = float("nan")

    def __post_init__(self):
        assert np.all(self.alphas > 0), "gains must be positive"

    @property
    def short(self):
        """The predicted margin misses tau / 2."""
        return bool(self.margin < self.tau / 2)


@dataclasses.dataclass(frozen=True, eq=False)
class DetectionReport:
    decisions: np.ndarray
    symbols: np.ndarray

    @classmethod
    def from_decisions(cls, decisions):
        decisions = np.asarray(decisions, dtype=np.float64)
        # ties decode as -1
        symbols = np.where(decisions > 0, 1, -1).astype(np.int8)
        return cls(decisions, symbols)

    def message(self):
        return BitMessage(self.symbols)

    def bits(self):
        return ((self.symbols + 1) // 2).astype(np.uint8)

    def margin(self, message: BitMessage):
        return float(np.min(message.symbols * self.decisions))


@dataclasses.dataclass(frozen=True)
class Layout:
    height: int
    width: int
    n_bits: int

    @property
    def band_shape(self):
        return (self.height // 2, self.width // 2)

    @property
    def mark_length(self):
        return (self.height // 2) * (self.width // 2)


def plan_layout(image_dims, n_bits: int) -> Layout:
    """Check capacity for an image of shape (height, width)."""
    height, width = image_dims
    if n_bits < 1:
        raise ValueError(f"need at least one bit to embed, got {n_bits}")
    if height % 2 or width % 2 or height < 2 or width < 2:
        raise DimensionError(f"embedding needs even dimensions, "
                             f"got {height}x{width}")
    layout = Layout(height, width, n_bits)
    if layout.mark_length < CAPACITY_FACTOR * n_bits:
        raise CapacityError(
            f"a {height}x{width} image has {layout.mark_length} coefficients "
            f"per sub-band, {n_bits} bits need {CAPACITY_FACTOR * n_bits}")
    return layout


@functools.lru_cache(maxsize=8)
def reference_marks(key: WatermarkKey, n_bits: int, length: int) -> PnSet:
    return generate(key, n_bits, length)


def _correlate_bands(bands: SubbandSet, marks: np.ndarray):
    """Decision values for every mark. Leading batch axes are kept."""
    batch = bands.shape[:-2]
    diff = (bands.LL - bands.HH).reshape(*batch, -1)
    return diff @ marks.T / (2 * marks.shape[1])


def _spread(x: np.ndarray, marks: np.ndarray, band_shape,
            ll_share: float = 0.5) -> SubbandSet:
    """W* in the sub-band domain: LL = 2 s sum_j x_j P_j and HH = -2 (1 - s)
    times the same sum. A unit x_j moves D_j by one for any share s."""
    spread = (x @ marks).reshape(*x.shape[:-1], *band_shape)
    zeros = np.zeros_like(spread)
    return SubbandSet(2 * ll_share * spread, zeros, zeros,
                      -2 * (1 - ll_share) * spread)


def _check_dims(image: GrayImage, layout: Layout):
    if image.shape != (layout.height, layout.width):
        raise DimensionError(f"image is {image.height}x{image.width}, layout "
                             f"expects {layout.height}x{layout.width}")


def detection_response(image: GrayImage, params: EmbedParams,
                       layout: Layout) -> np.ndarray:
    """D_k = 1/2 [corr(LL, P_k) + corr(HH, -P_k)] for k = 1..N."""
    _check_dims(image, layout)
    marks = reference_marks(params.key, layout.n_bits, layout.mark_length)
    return _correlate_bands(forward(image, params.wavelet), marks.as_float())


def response_matrix(mask: PerceptualMask, marks: np.ndarray, layout: Layout,
                    wavelet: WaveletSpec = DB2,
                    ll_share: float = 0.5) -> np.ndarray:
    """G[k, j] = detection response to the masked unit-gain embedding of
    bit j alone."""
    n = marks.shape[0]
    G = np.empty((n, n))
    for start in range(0, n, RESPONSE_CHUNK):
        stop = min(start + RESPONSE_CHUNK, n)
        units = _spread(np.eye(n)[start:stop], marks, layout.band_shape,
                        ll_share)
        spatial = synthesis(units, wavelet) * mask.values
        G[:, start:stop] = _correlate_bands(analysis(spatial, wavelet), marks).T
    return G


class HostContext:
    """Everything about one (host, key) pair that does not depend on the
    message: the mask, the marks, the host response and the response
    matrix."""

    def __init__(self, host: GrayImage, mask: PerceptualMask,
                 params: EmbedParams, layout: Layout):
        _check_dims(host, layout)
        self.layout = layout
        self.wavelet = params.wavelet
        self.ll_share = params.ll_share
        self.mask = mask
        self.marks = reference_marks(
            params.key, layout.n_bits, layout.mark_length).as_float()
        self.host_response = _correlate_bands(forward(host, params.wavelet),
                                              self.marks)

    @functools.cached_property
    def response(self):
        G = response_matrix(self.mask, self.marks, self.layout, self.wavelet,
                            self.ll_share)
        # cond is scale free; a vanishing mask needs its own check
        scale = float(np.mean(np.abs(np.diag(G))))
        if not scale >= MIN_RESPONSE:
            raise GainSolveError(
                f"mean unit-gain response {scale:.3g} is below {MIN_RESPONSE}; "
                f"the host has no detail to carry the watermark")
        cond = np.linalg.cond(G)
        logger.debug(f"response matrix: n={G.shape[0]}, scale={scale:.3g}, "
                     f"cond={cond:.3g}")
        if not np.isfinite(cond) or cond > COND_LIMIT:
            raise GainSolveError(
                f"response matrix is singular (condition number {cond:.3g}); "
                f"the key produces degenerate marks for this host, "
                f"choose a new key")
        return G

    @functools.cached_property
    def lu(self):
        return scipy.linalg.lu_factor(self.response)

    def gains(self, message: BitMessage, params: EmbedParams) -> GainVector:
        if message.n_bits != self.layout.n_bits:
            raise ValueError(f"message has {message.n_bits} bits, context "
                             f"was built for {self.layout.n_bits}")
        if params.gain_mode == "uniform":
            return GainVector(np.full(message.n_bits, params.uniform_alpha))
        return solve_gains(self.response, self.host_response, message, params,
                           lu=self.lu)

    def watermark(self, x: np.ndarray) -> np.ndarray:
        """The masked spatial watermark Msk * w for signed gains x."""
        bands = _spread(x, self.marks, self.layout.band_shape, self.ll_share)
        return self.mask.values * synthesis(bands, self.wavelet)


_context_cache = collections.OrderedDict()
_context_lock = threading.Lock()


def host_context(host: GrayImage, params: EmbedParams,
                 layout: Layout) -> HostContext:
    """A cached HostContext using the host's own perceptual mask.

    Safe to call from several threads. Two threads missing on the same key
    may both build the context; the later one is kept.
    """
    digest = hashlib.blake2b(host.data.tobytes(), digest_size=16).hexdigest()
    cache_key = (digest, host.shape, params.key, params.wavelet,
                 params.msk_max, params.ll_share, layout)
    with _context_lock:
        ctx = _context_cache.get(cache_key)
        if ctx is not None:
            _context_cache.move_to_end(cache_key)
            return ctx

    mask = perceptual_mask(host, params.wavelet, params.msk_max)
    ctx = HostContext(host, mask, params, layout)
    with _context_lock:
        _context_cache[cache_key] = ctx
        _context_cache.move_to_end(cache_key)
        while len(_context_cache) > CONTEXT_CACHE_SIZE:
            _context_cache.popitem(last=False)
    return ctx


def clear_context_cache():
    with _context_lock:
        _context_cache.clear()


def solve_gains(G: np.ndarray, h: np.ndarray, message: BitMessage,
                params: EmbedParams, lu=None) -> GainVector:
    """Solve G x = tau * B - h for the signed gains and map back to alphas.

    Gains that come out non-positive are held at GAIN_FLOOR and gains above
    max_gain at max_gain; the remaining unknowns are re-solved with the held
    ones moved to the right hand side. A floored bit whose predicted margin
    falls below tau / 2 is released again in the next pass.
    """
    B = message.symbols.astype(np.float64)
    n = B.size
    assert G.shape == (n, n) and h.shape == (n,)
    target = params.tau * B - h

    x = np.zeros(n)
    fixed = np.zeros(n, dtype=bool)
    floored = np.zeros(n, dtype=bool)
    clamped = False
    passes = 0
    for passes in range(1, params.repair_passes + 1):
        free = ~fixed
        if not fixed.any():
            x = (scipy.linalg.lu_solve(lu, target) if lu is not None
                 else scipy.linalg.solve(G, target))
        elif free.any():
            rhs = target[free] - G[np.ix_(free, fixed)] @ x[fixed]
            x[free] = scipy.linalg.solve(G[np.ix_(free, free)], rhs)

        alphas = x * B
        low = free & (alphas <= 0)
        high = free & (alphas > params.max_gain)
        if low.any() or high.any():
            x[low] = GAIN_FLOOR * B[low]
            x[high] = params.max_gain * B[high]
            fixed |= low | high
            floored |= low
            clamped |= bool(high.any())
            continue

        weak = floored & (B * (h + G @ x) < params.tau / 2)
        if not weak.any():
            break
        fixed &= ~weak
        floored &= ~weak

    alphas = np.clip(x * B, GAIN_FLOOR, params.max_gain)
    margin = float(np.min(B * (h + G @ (alphas * B))))
    gains = GainVector(alphas, clamped=clamped, floored=int(floored.sum()),
                       passes=passes, margin=margin, tau=params.tau)
    if clamped:
        logger.warning(f"solve_gains: gains clamped at max_gain="
                       f"{params.max_gain}")
    if gains.short:
        raise MarginError(
            f"predicted margin {margin:.4g} is below tau/2={params.tau / 2:.4g} "
            f"after {passes} passes (clamped={clamped}, "
            f"floored={gains.floored}); raise max_gain or lower tau")
    logger.debug(f"solve_gains: n={n}, passes={passes}, "
                 f"floored={gains.floored}, margin={margin:.4f}")
    return gains


def compute_gains(host: GrayImage, mask: PerceptualMask, message: BitMessage,
                  params: EmbedParams, layout: Layout) -> GainVector:
    """Per-bit gains for an explicit mask. The host response and the
    response matrix are built from scratch."""
    ctx = HostContext(host, mask, params, layout)
    return ctx.gains(message, params)


def blind_gain(host: GrayImage, n_bits: int, params: EmbedParams,
               target_ber: float) -> float:
    """Global gain of the uniform baseline for an expected clean BER.

    The host term and the interference from the other marks are treated as
    zero-mean Gaussians, so a bit is missed once they exceed alpha * G_kk,
    which happens with probability target_ber at z = Q^-1(target_ber)
    standard deviations.
    """
    if not 0 < target_ber < 0.5:
        raise ValueError(f"target_ber must lie in (0, 0.5), got {target_ber}")
    layout = plan_layout(host.shape, n_bits)
    ctx = host_context(host, params, layout)
    G = ctx.response
    own = np.diag(G)
    gain = float(np.mean(own))
    cross = float(np.mean(np.sum(G ** 2, axis=1) - own ** 2))
    z = stats.norm.isf(target_ber)
    spare = gain ** 2 - z ** 2 * cross
    if spare <= 0:
        raise GainSolveError(f"mark interference alone exceeds the "
                             f"{target_ber} error target")
    alpha = z * np.sqrt(np.var(ctx.host_response) / spare)
    logger.debug(f"blind_gain: target={target_ber}, z={z:.3f}, "
                 f"alpha={alpha:.4g}")
    return float(min(alpha, params.max_gain))


def embed_with_gains(host: GrayImage, message: BitMessage, params: EmbedParams):
    """C_W = C_0 + Msk * w. Returns the watermarked image and the gains."""
    layout = plan_layout(host.shape, message.n_bits)
    ctx = host_context(host, params, layout)
    gains = ctx.gains(message, params)
    w = ctx.watermark(gains.alphas * message.symbols)
    return GrayImage(host.data + w), gains


def embed(host: GrayImage, message: BitMessage, params: EmbedParams) -> GrayImage:
    return embed_with_gains(host, message, params)[0]


def extract(image: GrayImage, n_bits: int, params: EmbedParams) -> DetectionReport:
    """Blind extraction: needs only the image, the key and the bit count."""
    layout = plan_layout(image.shape, n_bits)
    return DetectionReport.from_decisions(
        detection_response(image, params, layout))


@dataclasses.dataclass(frozen=True, eq=False)
class ResponseParts:
    """Decision values of the clean watermarked image split by origin."""
    own: np.ndarray
    host: np.ndarray
    cross: np.ndarray

    @property
    def total(self):
        return self.own + self.host + self.cross


def decompose_response(host: GrayImage, message: BitMessage, gains: GainVector,
                       params: EmbedParams) -> ResponseParts:
    """Split D_k into the bit's own term alpha_k B_k G_kk, the host
    residual and the interference from the other marks."""
    layout = plan_layout(host.shape, message.n_bits)
    ctx = host_context(host, params, layout)
    x = gains.alphas * message.symbols
    G = ctx.response
    own = np.diag(G) * x
    return ResponseParts(own, ctx.host_response.copy(), G @ x - own)


@dataclasses.dataclass(frozen=True)
class PipelineHeader:
    """What the decoder must know besides the key."""
    wm_w: int
    wm_h: int
    golomb_m: int
    src_len: int
    coded_len: int
    key_hint: str
    # Outcome of the encoder side decoding check; not serialized.
    verified: Optional[bool] = dataclasses.field(default=None, compare=False)

    FIELDS = ("wm_w", "wm_h", "golomb_m", "src_len", "coded_len", "key_hint")

    def to_dict(self):
        return {k: getattr(self, k) for k in self.FIELDS}

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj):
        missing = [k for k in cls.FIELDS if k not in obj]
        if missing:
            raise ValueError(f"pipeline header misses fields {missing}")
        return cls(*(int(obj[k]) for k in cls.FIELDS[:-1]),
                   str(obj["key_hint"]))

    @classmethod
    def from_json(cls, text: str):
        return cls.from_dict(json.loads(text))


@dataclasses.dataclass(frozen=True, eq=False)
class Recovery:
    plane: BitPlane
    # Decoding hit an inconsistency or the key does not match the header.
    degraded: bool
    report: DetectionReport
    # Hamming distance between the received word and the decoded codeword.
    corrected: int


def encode_and_embed(host: GrayImage, watermark: BitPlane, params: EmbedParams,
                     conv: ConvCodeSpec = K7_STANDARD):
    """Golomb code the bitmap, convolutionally code the result and embed it.

    Returns (watermarked image, PipelineHeader). The encoder runs the decoder
    on its own clean output and records the outcome in `header.verified`.
    """
    source = encode_bitmap(watermark)
    word = conv_encode(source, conv)
    message = BitMessage.from_bits(word.bits.bits)
    watermarked, gains = embed_with_gains(host, message, params)

    header = PipelineHeader(wm_w=watermark.width, wm_h=watermark.height,
                            golomb_m=peek_m(source), src_len=source.length,
                            coded_len=word.bits.length,
                            key_hint=params.key.hint())
    recovery = decode_and_extract(watermarked, header, params, conv)
    verified = not recovery.degraded and recovery.plane == watermark
    if not verified:
        logger.warning("encode_and_embed: clean image does not decode back "
                       "to the watermark")
    logger.info(f"encode_and_embed: src_len={source.length}, "
                f"coded_len={word.bits.length}, m={header.golomb_m}, "
                f"margin={gains.margin:.4f}, verified={verified}")
    return watermarked, dataclasses.replace(header, verified=verified)


def decode_and_extract(image: GrayImage, header: PipelineHeader,
                       params: EmbedParams, conv: ConvCodeSpec = K7_STANDARD,
                       strict: bool = False) -> Recovery:
    """Extract, Viterbi decode and Golomb decode.

    With `strict`, an inconsistent post-Viterbi stream raises the Golomb
    decoding error. Otherwise the best-effort bitmap is returned with
    `degraded` set.
    """
    if conv.info_length(header.coded_len) != header.src_len:
        raise FramingError(f"{conv.name}: coded length {header.coded_len} does "
                           f"not match source length {header.src_len}")
    key_ok = header.key_hint == params.key.hint()
    if not key_ok:
        logger.warning(f"decode_and_extract: key hint {params.key.hint()} does "
                       f"not match header {header.key_hint}")

    report = extract(image, header.coded_len, params)
    source, corrected = viterbi_decode_with_metric(
        Codeword(BitStream(report.bits()), header.src_len), conv)

    if strict:
        plane, complete = decode_bitmap(source, header.wm_w, header.wm_h), True
    else:
        plane, complete = salvage_bitmap(source, header.wm_w, header.wm_h)
    logger.debug(f"decode_and_extract: corrected={corrected}, "
                 f"complete={complete}")
    return Recovery(plane, not (complete and key_ok), report, corrected)


def message_ber(report: DetectionReport, message: BitMessage) -> float:
    return float(np.mean(report.symbols != message.symbols))
