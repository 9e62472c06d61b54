"""Grayscale host images, binary watermark bitmaps and their Netpbm codecs.

Only binary PGM (P5) and PBM (P1, P4) are read and written. Pixel data is kept
real valued in memory; quantization to bytes happens in `save_pgm` only.
"""
import dataclasses

import numpy as np


PGM_FIELDS = ("width", "height", "maxval")
PBM_FIELDS = ("width", "height")


class NetpbmFormatError(ValueError):
    """A malformed or truncated Netpbm stream."""


@dataclasses.dataclass(frozen=True, eq=False)
class GrayImage:
    """A real valued luminance matrix of shape (height, width).

    The nominal range is [0, 255]. Values outside of it are kept until
    the image is saved.
    """
    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.ndim != 2 or data.size == 0:
            raise ValueError(f"GrayImage needs a non-empty 2-D matrix, "
                             f"got shape {data.shape}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def shape(self):
        return self.data.shape

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return np.array_equal(self.data, other.data)

    def __str__(self):
        return (f"GrayImage(width={self.width}, height={self.height}, "
                f"min={self.data.min():.2f}, max={self.data.max():.2f})")


@dataclasses.dataclass(frozen=True, eq=False)
class BitPlane:
    """A binary bitmap of shape (height, width), 1 = black."""
    bits: np.ndarray

    def __post_init__(self):
        bits = np.array(self.bits, dtype=np.uint8)
        if bits.ndim != 2 or bits.size == 0:
            raise ValueError(f"BitPlane needs a non-empty 2-D matrix, "
                             f"got shape {bits.shape}")
        if np.any(bits > 1):
            raise ValueError("BitPlane entries must be 0 or 1")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_flat(cls, bits, width: int, height: int):
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.size != width * height:
            raise ValueError(f"expected {width * height} bits, got {bits.size}")
        return cls(bits.reshape(height, width))

    @property
    def width(self):
        return self.bits.shape[1]

    @property
    def height(self):
        return self.bits.shape[0]

    def flat(self):
        """The bits in row-major order."""
        return self.bits.reshape(-1)

    def __eq__(self, other):
        if not isinstance(other, BitPlane):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    def __str__(self):
        return (f"BitPlane(width={self.width}, height={self.height}, "
                f"ones={int(self.bits.sum())})")


def _skip_space_and_comments(buf: bytes, pos: int):
    n = len(buf)
    while pos < n:
        c = buf[pos:pos + 1]
        if c == b"#":
            end = buf.find(b"\n", pos)
            pos = n if end < 0 else end + 1
        elif c.isspace():
            pos += 1
        else:
            break
    return pos


def _read_header(buf: bytes, field_names, kind: str):
    """Read the magic and the decimal header fields of a Netpbm stream.

    Returns the magic, the field values and the position right after
    the last field.
    """
    if len(buf) < 2:
        raise NetpbmFormatError(f"{kind}: stream too short for the magic number")
    magic = buf[:2].decode("latin-1")

    fields = []
    pos = 2
    for name in field_names:
        pos = _skip_space_and_comments(buf, pos)
        start = pos
        while pos < len(buf) and buf[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise NetpbmFormatError(
                f"{kind}: header field '{name}' is missing or not a number")
        value = int(buf[start:pos])
        if value <= 0:
            raise NetpbmFormatError(f"{kind}: header field '{name}' must be "
                                    f"positive, got {value}")
        fields.append(value)
    return magic, fields, pos


def _raster_start(buf: bytes, pos: int, kind: str):
    # Exactly one whitespace byte separates the header from a binary raster.
    if pos >= len(buf) or not buf[pos:pos + 1].isspace():
        raise NetpbmFormatError(f"{kind}: missing whitespace after the header")
    return pos + 1


def load_pgm(buf: bytes) -> GrayImage:
    """Parse a binary (P5) PGM stream with maxval <= 255."""
    magic, (width, height, maxval), pos = _read_header(buf, PGM_FIELDS, "PGM")
    if magic != "P5":
        raise NetpbmFormatError(f"PGM: bad magic {magic!r}, expected 'P5'")
    if maxval > 255:
        raise NetpbmFormatError(
            f"PGM: header field 'maxval' is {maxval}, only 8-bit (<= 255) "
            f"images are supported")
    pos = _raster_start(buf, pos, "PGM")

    size = width * height
    payload = buf[pos:pos + size]
    if len(payload) < size:
        raise NetpbmFormatError(f"PGM: truncated payload, expected {size} bytes, "
                                f"got {len(payload)}")
    data = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return GrayImage(data.astype(np.float64))


def save_pgm(img: GrayImage) -> bytes:
    """Serialize as binary PGM, rounding to the nearest integer and
    clamping into [0, 255]."""
    data = np.clip(np.rint(img.data), 0, 255).astype(np.uint8)
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + data.tobytes()


def load_pbm(buf: bytes) -> BitPlane:
    """Parse a PBM stream, either plain (P1) or raw (P4)."""
    magic, (width, height), pos = _read_header(buf, PBM_FIELDS, "PBM")

    if magic == "P4":
        pos = _raster_start(buf, pos, "PBM")
        row_bytes = (width + 7) // 8
        size = row_bytes * height
        payload = buf[pos:pos + size]
        if len(payload) < size:
            raise NetpbmFormatError(
                f"PBM: truncated rows, expected {size} bytes, got {len(payload)}")
        rows = np.frombuffer(payload, dtype=np.uint8).reshape(height, row_bytes)
        bits = np.unpackbits(rows, axis=1)[:, :width]
        return BitPlane(bits)

    if magic == "P1":
        size = width * height
        bits = np.empty(size, dtype=np.uint8)
        count = 0
        while count < size:
            pos = _skip_space_and_comments(buf, pos)
            if pos >= len(buf):
                raise NetpbmFormatError(
                    f"PBM: truncated rows, expected {size} bits, got {count}")
            c = buf[pos:pos + 1]
            if c not in (b"0", b"1"):
                raise NetpbmFormatError(f"PBM: invalid bit character {c!r} "
                                        f"at byte {pos}")
            bits[count] = 1 if c == b"1" else 0
            count += 1
            pos += 1
        return BitPlane(bits.reshape(height, width))

    raise NetpbmFormatError(f"PBM: bad magic {magic!r}, expected 'P1' or 'P4'")


def save_pbm(plane: BitPlane, binary: bool = True) -> bytes:
    """Serialize as raw P4 (rows padded to a byte boundary) or plain P1."""
    if binary:
        header = f"P4\n{plane.width} {plane.height}\n".encode("ascii")
        return header + np.packbits(plane.bits, axis=1).tobytes()

    lines = [f"P1\n{plane.width} {plane.height}"]
    for row in plane.bits:
        lines.append(" ".join(str(int(b)) for b in row))
    return ("\n".join(lines) + "\n").encode("ascii")


def read_pgm(path: str) -> GrayImage:
    with open(path, "rb") as f:
        return load_pgm(f.read())


def write_pgm(path: str, img: GrayImage):
    with open(path, "wb") as f:
        f.write(save_pgm(img))


def read_pbm(path: str) -> BitPlane:
    with open(path, "rb") as f:
        return load_pbm(f.read())


def write_pbm(path: str, plane: BitPlane):
    with open(path, "wb") as f:
        f.write(save_pbm(plane))
