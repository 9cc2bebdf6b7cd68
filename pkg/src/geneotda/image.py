"""Grayscale image container, IDX/PGM parsing, and the sup-norm distance."""

from __future__ import annotations

import gzip
import struct

import numpy as np

IDX_IMAGE_MAGIC = 2051
IDX_LABEL_MAGIC = 2049


class FormatError(ValueError):
    """Input bytes do not match the expected container format."""


class TruncationError(FormatError):
    """Stream ended before the declared payload was complete."""


class GrayImage:
    """A rectangular grid of real-valued intensities.

    Pixel (row, col) lives at ``pixels[row, col]``; row 0 is the top image
    row.  Intensities are stored as float64 so operator outputs never need
    quantization; rounding to bytes happens only on PGM export.
    """

    __slots__ = ("pixels",)

    def __init__(self, pixels):
        arr = np.asarray(pixels, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"expected a non-empty 2-d array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image intensities must be finite")
        self.pixels = arr

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def values(self) -> np.ndarray:
        """Row-major 1-d view of the intensities."""
        return self.pixels.reshape(-1)

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.all(self.pixels == other.pixels)
        )

    def __repr__(self):
        return f"GrayImage({self.width}x{self.height})"


def as_gray_image(obj) -> GrayImage:
    """Coerce a GrayImage or 2-d array-like into a GrayImage."""
    if isinstance(obj, GrayImage):
        return obj
    return GrayImage(obj)


def as_gray_images(objs) -> list[GrayImage]:
    """Coerce a batch: a list of images or a (n, height, width) array."""
    if isinstance(objs, np.ndarray):
        if objs.ndim != 3:
            raise ValueError(f"expected a (n, height, width) array, got shape {objs.shape}")
        return [GrayImage(frame) for frame in objs]
    return [as_gray_image(o) for o in objs]


def _as_bytes(source) -> bytes:
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif hasattr(source, "read"):
        data = source.read()
    else:
        with open(source, "rb") as fh:
            data = fh.read()
    if data[:2] == b"\x1f\x8b":  # transparently accept gzip-compressed streams
        data = gzip.decompress(data)
    return data


def load_idx_images(source) -> list[GrayImage]:
    """Parse a big-endian IDX image container (magic 2051).

    ``source`` may be bytes, a binary file object, or a path; gzip input is
    decompressed transparently.  Image ``i`` pixel (r, c) is the byte at
    offset ``16 + i*rows*cols + r*cols + c``.
    """
    data = _as_bytes(source)
    if len(data) < 16:
        raise TruncationError(f"IDX image header needs 16 bytes, got {len(data)}")
    magic, count, rows, cols = struct.unpack(">IIII", data[:16])
    if magic != IDX_IMAGE_MAGIC:
        raise FormatError(f"bad IDX image magic {magic}, expected {IDX_IMAGE_MAGIC}")
    expected = 16 + count * rows * cols
    if len(data) < expected:
        raise TruncationError(f"IDX payload truncated: need {expected} bytes, got {len(data)}")
    if len(data) > expected:
        raise FormatError(f"IDX stream has {len(data) - expected} trailing bytes")
    raw = np.frombuffer(data, dtype=np.uint8, offset=16)
    frames = raw.reshape(count, rows, cols).astype(np.float64)
    return [GrayImage(frame) for frame in frames]


def load_idx_labels(source) -> list[int]:
    """Parse a big-endian IDX label container (magic 2049); labels in 0..9."""
    data = _as_bytes(source)
    if len(data) < 8:
        raise TruncationError(f"IDX label header needs 8 bytes, got {len(data)}")
    magic, count = struct.unpack(">II", data[:8])
    if magic != IDX_LABEL_MAGIC:
        raise FormatError(f"bad IDX label magic {magic}, expected {IDX_LABEL_MAGIC}")
    expected = 8 + count
    if len(data) < expected:
        raise TruncationError(f"IDX payload truncated: need {expected} bytes, got {len(data)}")
    if len(data) > expected:
        raise FormatError(f"IDX stream has {len(data) - expected} trailing bytes")
    labels = list(data[8:expected])
    bad = [v for v in labels if v > 9]
    if bad:
        raise ValueError(f"label value {bad[0]} out of range 0..9")
    return labels


def read_pgm(source) -> GrayImage:
    """Read a binary (P5) PGM with maxval <= 255."""
    data = _as_bytes(source)
    if data[:2] == b"P2":
        raise FormatError("ASCII (P2) PGM not supported, expected binary P5")
    if data[:2] != b"P5":
        raise FormatError(f"not a P5 PGM (starts with {data[:2]!r})")

    # Header is "P5", width, height, maxval as whitespace-separated tokens,
    # with '#' comments allowed, then a single whitespace byte before pixels.
    pos = 2
    tokens = []
    while len(tokens) < 3:
        if pos >= len(data):
            raise TruncationError("PGM header ended early")
        ch = data[pos : pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        else:
            start = pos
            while pos < len(data) and not data[pos : pos + 1].isspace():
                pos += 1
            tokens.append(data[start:pos])
    pos += 1  # the single whitespace after maxval
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise FormatError(f"non-numeric PGM header token: {exc}") from exc
    if maxval > 255:
        raise FormatError(f"PGM maxval {maxval} > 255 not supported")
    if width <= 0 or height <= 0:
        raise FormatError(f"bad PGM dimensions {width}x{height}")
    if len(data) - pos < width * height:
        raise TruncationError("PGM pixel payload truncated")
    raw = np.frombuffer(data, dtype=np.uint8, offset=pos, count=width * height)
    return GrayImage(raw.reshape(height, width).astype(np.float64))


def write_pgm(image: GrayImage, lo: float, hi: float) -> bytes:
    """Encode as binary PGM, mapping [lo, hi] affinely onto 0..255.

    Values outside [lo, hi] are clamped.  Writing with lo=0, hi=255 and
    reading back reproduces integer-valued images exactly.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got {lo} >= {hi}")
    scaled = (np.clip(image.pixels, lo, hi) - lo) * (255.0 / (hi - lo))
    body = np.rint(scaled).astype(np.uint8).tobytes()
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    return header + body


def sup_distance(a: GrayImage, b: GrayImage) -> float:
    """Sup-norm distance max |a - b| over pixels; requires equal dimensions."""
    if a.pixels.shape != b.pixels.shape:
        raise ValueError(
            f"dimension mismatch: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    return float(np.max(np.abs(a.pixels - b.pixels)))
