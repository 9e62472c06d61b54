"""Bundled test hosts and watermarks, generated deterministically in code."""
import numpy as np

from ssmark.attacks import gaussian_noise
from ssmark.imaging import BitPlane, GrayImage
from ssmark.pn import uniform


TEST_IMAGE_SIZE = 256
TEST_IMAGES = ("boat", "portrait", "texture")

# 51 of 256 pixels set.
GLYPH = (
    "................",
    "..####...#...#..",
    ".#.......##.##..",
    ".#.......#.#.#..",
    "..###....#...#..",
    ".....#...#...#..",
    ".....#...#...#..",
    ".####....#...#..",
    "................",
    "................",
    "..############..",
    "................",
    ".#.#.#.#.#.#.#..",
    "................",
    "................",
    "................",
)


def _grid(size):
    y, x = np.mgrid[0:size, 0:size] / (size - 1)
    return x, y


def _ripple(size, fy, fx):
    """Stripes in pixel units, so they stay in the detail bands at any size."""
    i, j = np.indices((size, size))
    return np.sin(2 * np.pi * (fy * i + fx * j))


def _finish(img, seed, sigma=1.0):
    """Add faint sensor noise; smooth regions stay close to noise free."""
    size = img.shape[0]
    img = img + sigma * gaussian_noise(seed, size * size).reshape(img.shape)
    return GrayImage(np.clip(img, 20, 235))


def _boat(size):
    x, y = _grid(size)
    img = 145 - 15 * y
    water = y > 0.55
    img = np.where(water, 125 + 30 * _ripple(size, 0.4, 0.03), img)
    hull = (y > 0.45) & (y < 0.6) & (np.abs(x - 0.5) < 0.25 - 0.8 * (y - 0.45))
    img[hull] = 95
    mast = (np.abs(x - 0.5) < 0.008) & (y > 0.12) & (y < 0.45)
    img[mast] = 70
    sail = (y > 0.15) & (y < 0.43) & (x > 0.51) & (x - 0.51 < 0.9 * (y - 0.15))
    img[sail] = 170
    return _finish(img, seed=1)


def _portrait(size):
    x, y = _grid(size)
    img = 105 + 10 * x
    r2 = ((x - 0.5) / 0.28) ** 2 + ((y - 0.5) / 0.36) ** 2
    face = r2 < 1
    hair = ((((x - 0.5) / 0.32) ** 2 + ((y - 0.38) / 0.3) ** 2 < 1) &
            ~face & (y < 0.5))
    img = np.where(face, 150 - 30 * r2, img)
    img = np.where(hair, 70 + 25 * _ripple(size, 0.02, 0.4), img)
    for cx in (0.4, 0.6):
        img[(x - cx) ** 2 + (y - 0.45) ** 2 < 0.035 ** 2] = 60
    img[((x - 0.5) / 0.09) ** 2 + ((y - 0.68) / 0.03) ** 2 < 1] = 100
    return _finish(img, seed=2)


def _texture(size):
    x, y = _grid(size)
    img = (128 + 22 * _ripple(size, 0.03, 0.4) + 14 * _ripple(size, 0.42, 0.03)
           + 6 * np.sin(2 * np.pi * 3 * x))
    return _finish(img, seed=3)


_GENERATORS = {
    "boat": _boat,
    "portrait": _portrait,
    "texture": _texture,
}


def load_test_image(name: str, size: int = TEST_IMAGE_SIZE) -> GrayImage:
    """Load a pre-defined 8-bit like host image for testing."""
    if name not in _GENERATORS:
        raise ValueError(f"Invalid test image: {name}. "
                         f"Choose from {sorted(_GENERATORS)}")
    return _GENERATORS[name](size)


def load_test_watermark(name: str = "glyph") -> BitPlane:
    if name == "glyph":
        return BitPlane(np.array([[ch == "#" for ch in row] for row in GLYPH],
                                 dtype=np.uint8))
    if name == "blank":
        return BitPlane(np.zeros((16, 16), dtype=np.uint8))
    raise ValueError(f"Invalid test watermark: {name}")


def random_watermark(seed: int, density: float = 0.15, width: int = 16,
                     height: int = 16) -> BitPlane:
    """A sparse random bitmap with about `density` ones."""
    u = uniform(seed, width * height)
    return BitPlane.from_flat((u < density).astype(np.uint8), width, height)
