"""One level orthonormal 2-D wavelet analysis/synthesis and the perceptual mask."""
import dataclasses

import numpy as np
import pywt

from ssmark.imaging import GrayImage


FAMILIES = ("haar", "db2")
# Periodic extension keeps the one level transform square and orthonormal.
PYWT_MODE = "periodization"
# Detail residue below this fraction of the peak pixel magnitude is rounding
# noise of the filter bank; db2 leaves about 1e-14 on a constant image.
DETAIL_TOL = 1e-8


class DimensionError(ValueError):
    """Odd image dimensions or inconsistent sub-band shapes."""


@dataclasses.dataclass(frozen=True)
class WaveletSpec:
    family: str = "db2"
    boundary: str = "periodic"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"Invalid wavelet family: {self.family}")
        if self.boundary != "periodic":
            raise ValueError(f"Invalid boundary extension: {self.boundary}")

    def filters(self):
        """The analysis (lowpass, highpass) filter pair."""
        w = pywt.Wavelet(self.family)
        return np.array(w.dec_lo), np.array(w.dec_hi)

    def check_orthonormal(self, tol: float = 1e-12):
        h, g = self.filters()
        return abs(np.sum(h * h) - 1) < tol and abs(np.sum(h * g)) < tol


HAAR = WaveletSpec("haar")
DB2 = WaveletSpec("db2")


@dataclasses.dataclass(frozen=True, eq=False)
class SubbandSet:
    """The four sub-bands of one decomposition level.

    The arrays may carry leading batch axes; the last two axes are the
    (height / 2, width / 2) coefficient grid.
    """
    LL: np.ndarray
    LH: np.ndarray
    HL: np.ndarray
    HH: np.ndarray

    def __post_init__(self):
        shapes = {np.shape(b) for b in (self.LL, self.LH, self.HL, self.HH)}
        if len(shapes) != 1:
            raise DimensionError(f"sub-band shapes differ: {sorted(shapes)}")

    @property
    def shape(self):
        return np.shape(self.LL)

    @classmethod
    def zeros(cls, shape):
        return cls(*(np.zeros(shape) for _ in range(4)))

    def replace(self, **bands):
        return dataclasses.replace(self, **bands)


@dataclasses.dataclass(frozen=True, eq=False)
class PerceptualMask:
    """Per-pixel weights in [0, msk_max], image sized."""
    values: np.ndarray
    msk_max: float

    def __post_init__(self):
        assert np.all(self.values >= 0)
        assert np.all(self.values <= self.msk_max)

    @property
    def mean(self):
        return float(np.mean(self.values))


def analysis(data: np.ndarray, spec: WaveletSpec = DB2) -> SubbandSet:
    """Transform the last two axes of an array (single image or a stack)."""
    if data.shape[-1] % 2 or data.shape[-2] % 2:
        raise DimensionError(f"dyadic decomposition needs even dimensions, "
                             f"got {data.shape[-2]}x{data.shape[-1]}")
    LL, (LH, HL, HH) = pywt.dwt2(data, spec.family, mode=PYWT_MODE,
                                 axes=(-2, -1))
    return SubbandSet(LL, LH, HL, HH)


def synthesis(bands: SubbandSet, spec: WaveletSpec = DB2) -> np.ndarray:
    """Inverse of `analysis`."""
    return pywt.idwt2((bands.LL, (bands.LH, bands.HL, bands.HH)), spec.family,
                      mode=PYWT_MODE, axes=(-2, -1))


def forward(img: GrayImage, spec: WaveletSpec = DB2) -> SubbandSet:
    return analysis(img.data, spec)


def inverse(bands: SubbandSet, spec: WaveletSpec = DB2) -> GrayImage:
    if len(bands.shape) != 2:
        raise DimensionError(f"expected a single set of 2-D sub-bands, "
                             f"got shape {bands.shape}")
    return GrayImage(synthesis(bands, spec))


def detail_reconstruction(img: GrayImage, spec: WaveletSpec = DB2) -> np.ndarray:
    """Spatial reconstruction from the detail sub-bands only (LL zeroed)."""
    bands = forward(img, spec)
    return synthesis(bands.replace(LL=np.zeros_like(bands.LL)), spec)


def perceptual_mask(img: GrayImage, spec: WaveletSpec = DB2,
                    msk_max: float = 8.0) -> PerceptualMask:
    """Square root of the absolute detail-only reconstruction, clamped at
    msk_max. Edges and texture get large weights, flat areas get zero."""
    assert msk_max > 0
    d = np.abs(detail_reconstruction(img, spec))
    d[d < DETAIL_TOL * max(1.0, float(np.max(np.abs(img.data))))] = 0.0
    values = np.minimum(np.sqrt(d), msk_max)
    return PerceptualMask(values, msk_max)
