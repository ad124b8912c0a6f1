"""
Image representation and bit-exact file I/O.

Frames are fixed-size grids of intensities in [0, 1] stored row-major. Pixel
index ``i`` maps to ``(row, col) = (i // width, i % width)`` everywhere in the
package; flow fields, factor filters and masks all use this single bijection.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ImageFormatError
from .logging import logger

IDX3_MAGIC = 0x00000803
MNIST_SIDE = 28
MNIST_CROP = 26
MNIST_TARGET = 13


@dataclass(frozen=True, eq=False)
class Image:
    """Immutable grayscale frame.

    Attributes:
        width: Number of columns.
        height: Number of rows.
        pixels: Row-major float64 intensities, length ``width * height``.
    """

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"image dimensions must be positive, got {self.width}x{self.height}")

        pixels = np.array(self.pixels, dtype=np.float64).reshape(-1)
        if pixels.size != self.width * self.height:
            raise ValueError(
                f"pixel count {pixels.size} does not match {self.width}x{self.height}"
            )
        if not np.all((pixels >= 0.0) & (pixels <= 1.0)):
            raise ValueError("pixel intensities must lie in [0, 1]")

        pixels.flags.writeable = False
        object.__setattr__(self, "pixels", pixels)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Image):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.pixels, other.pixels)

    def __hash__(self) -> int:
        return hash((self.width, self.height, self.pixels.tobytes()))

    @classmethod
    def from_grid(cls, grid: np.ndarray) -> Image:
        """Build an image from a ``(height, width)`` array."""
        grid = np.asarray(grid, dtype=np.float64)
        if grid.ndim != 2:
            raise ValueError(f"expected a 2D grid, got shape {grid.shape}")
        height, width = grid.shape
        return cls(width=width, height=height, pixels=grid.reshape(-1))

    @classmethod
    def zeros(cls, width: int, height: int) -> Image:
        return cls(width=width, height=height, pixels=np.zeros(width * height))

    @property
    def size(self) -> int:
        return self.width * self.height

    @property
    def shape(self) -> tuple[int, int]:
        """Grid shape as ``(height, width)``."""
        return self.height, self.width

    def grid(self) -> np.ndarray:
        """Read-only ``(height, width)`` view of the pixels."""
        return self.pixels.reshape(self.height, self.width)

    def index(self, row: int, col: int) -> int:
        """Linear index of ``(row, col)``."""
        if not (0 <= row < self.height and 0 <= col < self.width):
            raise ValueError(f"({row}, {col}) is outside a {self.width}x{self.height} image")
        return row * self.width + col

    def position(self, i: int) -> tuple[int, int]:
        """``(row, col)`` of linear index ``i``."""
        if not 0 <= i < self.size:
            raise ValueError(f"pixel index {i} is outside [0, {self.size})")
        return divmod(i, self.width)

    def on_count(self) -> int:
        """Number of pixels at or above half intensity."""
        return int(np.count_nonzero(self.pixels >= 0.5))

    def quantized(self) -> Image:
        """The image as it survives an 8-bit round trip."""
        return Image(self.width, self.height, np.rint(self.pixels * 255.0) / 255.0)


def positions(width: int, height: int) -> np.ndarray:
    """``(width * height, 2)`` array of ``(row, col)`` for every linear index."""
    rows, cols = np.divmod(np.arange(width * height), width)
    return np.stack([rows, cols], axis=1)


def _encode_header(magic: str, width: int, height: int) -> bytes:
    return f"{magic}\n{width} {height}\n255\n".encode("ascii")


def pgm_write(img: Image, path: str | Path) -> None:
    """Write ``img`` as a binary PGM (P5, maxval 255).

    Intensity ``v`` is stored as ``round(v * 255)``.
    """
    body = np.rint(img.pixels * 255.0).astype(np.uint8).tobytes()
    with open(path, "wb") as f:
        f.write(_encode_header("P5", img.width, img.height))
        f.write(body)
    logger.debug(f"Wrote {img.width}x{img.height} PGM to {path}")


def ppm_write(rgb: np.ndarray, path: str | Path) -> None:
    """Write a ``(height, width, 3)`` array of intensities in [0, 1] as binary PPM (P6)."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected a (height, width, 3) array, got shape {rgb.shape}")

    height, width, _ = rgb.shape
    body = np.rint(np.clip(rgb, 0.0, 1.0) * 255.0).astype(np.uint8).tobytes()
    with open(path, "wb") as f:
        f.write(_encode_header("P6", width, height))
        f.write(body)
    logger.debug(f"Wrote {width}x{height} PPM to {path}")


def _read_header_tokens(data: bytes, count: int, path: str) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header tokens, skipping ``#`` comments.

    Returns the tokens and the offset of the first body byte (one whitespace
    byte after the last token).
    """
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            break
        if data[pos : pos + 1] == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])

    if len(tokens) < count:
        field = ("magic", "width", "height", "maxval")[len(tokens)]
        raise ImageFormatError(field, "missing from header", path)
    return tokens, pos + 1


def _parse_positive(token: bytes, field: str, path: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise ImageFormatError(field, f"not an integer: {token!r}", path) from None
    if value <= 0:
        raise ImageFormatError(field, f"must be positive, got {value}", path)
    return value


def pgm_read(path: str | Path) -> Image:
    """Read a binary PGM (P5) file with maxval at most 255.

    Raises:
        ImageFormatError: If the magic, a header field or the pixel body is malformed.
    """
    path = str(path)
    with open(path, "rb") as f:
        data = f.read()

    tokens, offset = _read_header_tokens(data, 4, path)
    if tokens[0] != b"P5":
        raise ImageFormatError("magic", f"expected P5, got {tokens[0]!r}", path)
    width = _parse_positive(tokens[1], "width", path)
    height = _parse_positive(tokens[2], "height", path)
    maxval = _parse_positive(tokens[3], "maxval", path)
    if maxval > 255:
        raise ImageFormatError("maxval", f"16-bit PGM is not supported (maxval {maxval})", path)

    body = data[offset : offset + width * height]
    if len(body) < width * height:
        raise ImageFormatError(
            "short pixel data", f"expected {width * height} bytes, got {len(body)}", path
        )

    values = np.frombuffer(body, dtype=np.uint8).astype(np.float64)
    if np.any(values > maxval):
        raise ImageFormatError("pixel data", f"value exceeds maxval {maxval}", path)
    return Image(width=width, height=height, pixels=values / maxval)


def idx_read_images(path: str | Path) -> list[Image]:
    """Read an IDX3 image file (MNIST layout), optionally gzip-compressed.

    Bytes are scaled to [0, 1] by 1/255.

    Raises:
        ImageFormatError: On a wrong magic number or a payload that does not
            match the stated dimensions.
    """
    path = str(path)
    opener = gzip.open if path.endswith(".gz") else open
    with opener(path, "rb") as f:
        data = f.read()

    if len(data) < 16:
        raise ImageFormatError("header", "shorter than 16 bytes", path)
    magic, count, rows, cols = struct.unpack(">IIII", data[:16])
    if magic != IDX3_MAGIC:
        raise ImageFormatError("magic", "not an IDX3 image file", path)

    payload = np.frombuffer(data, dtype=np.uint8, offset=16)
    expected = count * rows * cols
    if payload.size != expected:
        raise ImageFormatError(
            "payload", f"{count}x{rows}x{cols} needs {expected} bytes, found {payload.size}", path
        )

    grids = payload.reshape(count, rows, cols).astype(np.float64) / 255.0
    logger.info(f"Loaded {count} images of {cols}x{rows} from {path}")
    return [Image.from_grid(grid) for grid in grids]


def mnist_to_13(img28: Image) -> Image:
    """Reduce a 28x28 digit to a binary 13x13 frame.

    Center-crop to 26x26, 2x2 max-pool, then binarize at 0.5 (``>= 0.5`` is on).
    """
    if img28.shape != (MNIST_SIDE, MNIST_SIDE):
        raise ValueError(f"expected a 28x28 image, got {img28.width}x{img28.height}")

    margin = (MNIST_SIDE - MNIST_CROP) // 2
    cropped = img28.grid()[margin : margin + MNIST_CROP, margin : margin + MNIST_CROP]
    pooled = cropped.reshape(MNIST_TARGET, 2, MNIST_TARGET, 2).max(axis=(1, 3))
    return Image.from_grid((pooled >= 0.5).astype(np.float64))
