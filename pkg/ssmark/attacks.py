"""Volumetric distortions: additive white Gaussian noise and wavelet
coefficient quantization standing in for wavelet-based lossy compression."""
import dataclasses

import numpy as np

from ssmark.imaging import GrayImage
from ssmark.pn import uniform
from ssmark.util import build_logger
from ssmark.wavelet import DB2, SubbandSet, WaveletSpec, forward, inverse


logger = build_logger("ssmark.attacks")

ATTACK_KINDS = ("awgn", "quantize")

# Quantizer step in coefficient units: DELTA_MAX * (100 - qf) / 100 + DELTA_MIN
DELTA_MIN = 0.5
DELTA_MAX = 64.0
LL_STEP_SCALE = 0.25


@dataclasses.dataclass(frozen=True)
class AttackSpec:
    kind: str
    # awgn: sigma in gray levels, quantize: quality factor in (0, 100]
    strength: float
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"Invalid attack kind: {self.kind}")
        if self.kind == "awgn" and not self.strength >= 0:
            raise ValueError(f"awgn sigma must be >= 0, got {self.strength}")
        if self.kind == "quantize" and not 0 < self.strength <= 100:
            raise ValueError(f"quality factor must lie in (0, 100], "
                             f"got {self.strength}")

    @classmethod
    def from_list(cls, item):
        """Build from the [kind, strength(, seed)] form used in configs."""
        kind, strength, *rest = item
        return cls(str(kind), float(strength), int(rest[0]) if rest else 0)

    def to_list(self):
        return [self.kind, self.strength, self.seed]

    def __str__(self):
        if self.kind == "awgn":
            return f"awgn(sigma={self.strength:g}, seed={self.seed})"
        return f"quantize(qf={self.strength:g})"


def gaussian_noise(seed: int, count: int) -> np.ndarray:
    """Standard normal samples by the Box-Muller transform over the keyed
    generator."""
    n_pairs = (count + 1) // 2
    u = uniform(seed, 2 * n_pairs)
    # 1 - u lies in (0, 1], keeping the logarithm finite
    radius = np.sqrt(-2.0 * np.log(1.0 - u[:n_pairs]))
    angle = 2.0 * np.pi * u[n_pairs:]
    z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])
    return z[:count]


def apply_awgn(img: GrayImage, sigma: float, seed: int = 0) -> GrayImage:
    """C'_W = C_W + n with n ~ N(0, sigma^2) per pixel, no clamping."""
    if sigma < 0:
        raise ValueError(f"awgn sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return img
    noise = gaussian_noise(seed, img.data.size).reshape(img.shape)
    return GrayImage(img.data + sigma * noise)


def quantizer_step(qf: float) -> float:
    """Detail band step for a quality factor; LL uses LL_STEP_SCALE of it."""
    if not 0 < qf <= 100:
        raise ValueError(f"quality factor must lie in (0, 100], got {qf}")
    return DELTA_MAX * (100 - qf) / 100 + DELTA_MIN


def dead_zone_quantize(coeffs: np.ndarray, step: float) -> np.ndarray:
    """Uniform quantizer with a dead zone of width 2 * step around zero and
    mid-point reconstruction. Reconstructed values are fixed points."""
    q = np.floor(np.abs(coeffs) / step)
    return np.sign(coeffs) * np.where(q > 0, (q + 0.5) * step, 0.0)


def apply_quantize(img: GrayImage, qf: float,
                   spec: WaveletSpec = DB2) -> GrayImage:
    step = quantizer_step(qf)
    bands = forward(img, spec)
    quantized = SubbandSet(
        dead_zone_quantize(bands.LL, step * LL_STEP_SCALE),
        dead_zone_quantize(bands.LH, step),
        dead_zone_quantize(bands.HL, step),
        dead_zone_quantize(bands.HH, step))
    return inverse(quantized, spec)


def apply_attack(img: GrayImage, attack: AttackSpec,
                 spec: WaveletSpec = DB2) -> GrayImage:
    logger.debug(f"apply_attack: {attack}")
    if attack.kind == "awgn":
        return apply_awgn(img, attack.strength, attack.seed)
    if attack.kind == "quantize":
        return apply_quantize(img, attack.strength, spec)
    raise ValueError(f"Invalid attack kind: {attack.kind}")
