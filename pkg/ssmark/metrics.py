"""Fidelity and robustness measurements."""
import dataclasses
from typing import Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ssmark.attacks import AttackSpec
from ssmark.embedder import BitMessage, EmbedParams, extract
from ssmark.imaging import GrayImage
from ssmark.pn import WatermarkKey
from ssmark.util import inf


PEAK = 255.0
SSIM_WINDOW = 8
SSIM_C1 = (0.01 * PEAK) ** 2
SSIM_C2 = (0.03 * PEAK) ** 2
WRONG_KEY_COUNT = 16

BENCH_COLUMNS = ("attack", "strength", "ber_raw", "ber_ecc", "psnr_db", "ssim")


@dataclasses.dataclass(frozen=True)
class BerReport:
    attack: AttackSpec
    ber_raw: float
    ber_ecc: float
    psnr_db: float
    ssim: float

    def __post_init__(self):
        assert 0 <= self.ber_raw <= 1 and 0 <= self.ber_ecc <= 1

    def as_row(self):
        """Values in BENCH_COLUMNS order."""
        return [self.attack.kind, self.attack.strength, self.ber_raw,
                self.ber_ecc, self.psnr_db, self.ssim]


def _check_same_shape(a: GrayImage, b: GrayImage):
    if a.shape != b.shape:
        raise ValueError(f"image dimensions differ: {a.shape} vs {b.shape}")


def mse(a: GrayImage, b: GrayImage) -> float:
    _check_same_shape(a, b)
    return float(np.mean((a.data - b.data) ** 2))


def psnr(a: GrayImage, b: GrayImage) -> float:
    """Peak signal to noise ratio in dB; +inf for identical images."""
    err = mse(a, b)
    if err == 0:
        return inf
    return float(10 * np.log10(PEAK ** 2 / err))


def ssim(a: GrayImage, b: GrayImage) -> float:
    """Mean single-scale SSIM over all 8x8 windows (stride 1)."""
    _check_same_shape(a, b)
    if a.height < SSIM_WINDOW or a.width < SSIM_WINDOW:
        raise ValueError(f"SSIM needs images of at least {SSIM_WINDOW}x"
                         f"{SSIM_WINDOW}, got {a.height}x{a.width}")

    shape = (SSIM_WINDOW, SSIM_WINDOW)
    wa = sliding_window_view(a.data, shape)
    wb = sliding_window_view(b.data, shape)
    mu_a = wa.mean(axis=(-2, -1))
    mu_b = wb.mean(axis=(-2, -1))
    var_a = (wa * wa).mean(axis=(-2, -1)) - mu_a ** 2
    var_b = (wb * wb).mean(axis=(-2, -1)) - mu_b ** 2
    cov = (wa * wb).mean(axis=(-2, -1)) - mu_a * mu_b

    num = (2 * mu_a * mu_b + SSIM_C1) * (2 * cov + SSIM_C2)
    den = (mu_a ** 2 + mu_b ** 2 + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return float(np.mean(num / den))


def ber(a, b) -> float:
    """Fraction of differing positions of two equal length bit sequences."""
    a = np.asarray(a).reshape(-1)
    b = np.asarray(b).reshape(-1)
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise ValueError("BER of empty sequences is undefined")
    return float(np.count_nonzero(a != b) / a.size)


def key_mismatch_score(image: GrayImage, true_msg: BitMessage,
                       wrong_key: Union[WatermarkKey, Sequence[WatermarkKey]],
                       params: EmbedParams, derive: bool = True) -> float:
    """Mean of |0.5 - BER| when extracting with keys other than the
    embedding key. Near 0 means wrong keys learn nothing about the message.

    With `derive` set, a single key is expanded into WRONG_KEY_COUNT keys
    derived from it and the key itself is not tried. With `derive` unset, a
    single key is scored as is, so passing the embedding key gives about 0.5.
    A sequence of keys is always used as given.
    """
    if isinstance(wrong_key, WatermarkKey):
        keys = wrong_key.family(WRONG_KEY_COUNT) if derive else [wrong_key]
    else:
        keys = list(wrong_key)
    assert keys, "need at least one key"

    scores = []
    for key in keys:
        report = extract(image, true_msg.n_bits, params.with_key(key))
        scores.append(abs(0.5 - ber(report.symbols, true_msg.symbols)))
    return float(np.mean(scores))
