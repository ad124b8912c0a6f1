"""
Seeded generation of training and test data.

Random-dot frames, toroidal translations, nearest-neighbour rotations, labelled
frame pairs and composite scenes for segmentation. Every stochastic function
takes an explicit seed; identical seeds reproduce bit-identical outputs.
"""

from __future__ import annotations

import enum
import os
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ImageFormatError
from .imagecore import Image, idx_read_images, mnist_to_13, pgm_read, pgm_write
from .logging import logger

MANIFEST_NAME = "manifest.txt"
MANIFEST_HEADER = "# index kind dx dy theta"

# Row-major over (dy, dx): the nine unit shifts including no shift
UNIT_SHIFTS: tuple[tuple[int, int], ...] = tuple(
    (dx, dy) for dy in (-1, 0, 1) for dx in (-1, 0, 1)
)


class TransformKind(str, enum.Enum):
    TRANSLATION = "translation"
    ROTATION = "rotation"
    IDENTITY = "identity"
    UNKNOWN = "unknown"


class PairKind(str, enum.Enum):
    """Dataset recipes for :func:`make_pairs`."""

    TRANSLATION9 = "translation"
    ROTATION_UNIFORM = "rotation"


@dataclass(frozen=True)
class TransformLabel:
    """Ground-truth transform relating the two frames of a pair."""

    kind: TransformKind
    dx: int = 0
    dy: int = 0
    theta: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", float(self.theta) % 360.0)

    @classmethod
    def translation(cls, dx: int, dy: int) -> TransformLabel:
        if dx == 0 and dy == 0:
            return cls.identity()
        return cls(TransformKind.TRANSLATION, dx=int(dx), dy=int(dy))

    @classmethod
    def rotation(cls, theta: float) -> TransformLabel:
        return cls(TransformKind.ROTATION, theta=theta)

    @classmethod
    def identity(cls) -> TransformLabel:
        return cls(TransformKind.IDENTITY)

    @classmethod
    def unknown(cls) -> TransformLabel:
        """Label of a pair read from disk without ground truth."""
        return cls(TransformKind.UNKNOWN)

    @property
    def shift(self) -> tuple[int, int]:
        """``(dx, dy)``; zero for rotations and identity."""
        return self.dx, self.dy

    def apply(self, img: Image) -> Image:
        if self.kind is TransformKind.ROTATION:
            return rotate_nn(img, self.theta)
        if self.kind is TransformKind.TRANSLATION:
            return translate_wrap(img, self.dx, self.dy)
        if self.kind is TransformKind.UNKNOWN:
            raise ValueError("cannot apply an unknown transform")
        return img


@dataclass(frozen=True)
class ImagePair:
    """Previous frame ``x``, current frame ``y`` and the transform between them."""

    x: Image
    y: Image
    label: TransformLabel

    def __post_init__(self) -> None:
        if self.x.shape != self.y.shape:
            raise ValueError(f"frame shapes differ: x {self.x.shape}, y {self.y.shape}")


@dataclass(frozen=True, eq=False)
class Scene:
    """A frame pair with a moving foreground block and its ground-truth mask.

    ``truth_mask`` is a read-only ``(height, width)`` boolean array on the x frame.
    """

    pair: ImagePair
    truth_mask: np.ndarray

    def __post_init__(self) -> None:
        mask = np.array(self.truth_mask, dtype=bool)
        if mask.shape != self.pair.x.shape:
            raise ValueError(f"mask shape {mask.shape} does not match frame {self.pair.x.shape}")
        mask.flags.writeable = False
        object.__setattr__(self, "truth_mask", mask)


def random_dots(width: int, height: int, density: float, seed: int) -> Image:
    """Frame whose pixels are independently on with probability ``density``."""
    if not 0.0 <= density <= 1.0:
        raise ValueError(f"density must lie in [0, 1], got {density}")
    rng = np.random.default_rng(seed)
    pixels = (rng.random(width * height) < density).astype(np.float64)
    return Image(width=width, height=height, pixels=pixels)


def translate_wrap(img: Image, dx: int, dy: int) -> Image:
    """Shift by ``(dx, dy)`` pixels with toroidal wrap-around.

    ``output[row, col] = input[(row - dy) % h, (col - dx) % w]``.
    """
    return Image.from_grid(np.roll(img.grid(), shift=(dy, dx), axis=(0, 1)))


def rotation_offsets(
    theta: float, drow: np.ndarray, dcol: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Rotate center-relative offsets by ``theta`` degrees, counter-clockwise as displayed.

    Rows grow downward, so the displayed counter-clockwise turn is
    ``dcol' = cos*dcol + sin*drow`` and ``drow' = -sin*dcol + cos*drow``.
    """
    rad = np.deg2rad(theta)
    cos, sin = np.cos(rad), np.sin(rad)
    return -sin * dcol + cos * drow, cos * dcol + sin * drow


def rotate_nn(img: Image, theta: float) -> Image:
    """Nearest-neighbour rotation about the frame center, zero fill outside.

    Each output pixel samples the input at its inverse-rotated position.
    """
    height, width = img.shape
    center_row, center_col = (height - 1) / 2.0, (width - 1) / 2.0
    rows, cols = np.mgrid[0:height, 0:width]

    src_drow, src_dcol = rotation_offsets(-theta, rows - center_row, cols - center_col)
    src_row = np.rint(src_drow + center_row).astype(int)
    src_col = np.rint(src_dcol + center_col).astype(int)

    inside = (src_row >= 0) & (src_row < height) & (src_col >= 0) & (src_col < width)
    out = np.zeros((height, width))
    out[inside] = img.grid()[src_row[inside], src_col[inside]]
    return Image.from_grid(out)


def _draw_label(kind: PairKind, rng: np.random.Generator) -> TransformLabel:
    if kind is PairKind.TRANSLATION9:
        dx, dy = UNIT_SHIFTS[int(rng.integers(len(UNIT_SHIFTS)))]
        return TransformLabel.translation(dx, dy)
    return TransformLabel.rotation(float(rng.uniform(0.0, 360.0)))


def make_pairs(
    kind: PairKind | str,
    n: int,
    size: int,
    density: float,
    seed: int,
) -> list[ImagePair]:
    """Generate ``n`` random-dot pairs of ``size`` x ``size`` frames.

    Translation9 draws one of the nine unit shifts uniformly; RotationUniform
    draws theta uniformly from [0, 360). ``y`` is the transform applied to ``x``.
    """
    kind = PairKind(kind)
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")

    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(n):
        x = random_dots(size, size, density, int(rng.integers(2**63)))
        label = _draw_label(kind, rng)
        pairs.append(ImagePair(x=x, y=label.apply(x), label=label))

    logger.debug(f"Generated {n} {kind.value} pairs of {size}x{size} (seed {seed})")
    return pairs


def make_pairs_from_images(
    images: Sequence[Image],
    kind: PairKind | str,
    seed: int,
) -> list[ImagePair]:
    """Pair each supplied frame with a seeded random transform of itself."""
    kind = PairKind(kind)
    rng = np.random.default_rng(seed)
    pairs = []
    for x in images:
        label = _draw_label(kind, rng)
        pairs.append(ImagePair(x=x, y=label.apply(x), label=label))
    return pairs


def load_mnist_13(path: str | Path, limit: int | None = None) -> list[Image]:
    """Binary 13x13 digits from an IDX3 MNIST image file."""
    images = idx_read_images(path)
    if limit is not None:
        images = images[:limit]
    return [mnist_to_13(img) for img in images]


def make_scene(
    size: int,
    density: float,
    bg_shift: tuple[int, int],
    fg_rect: tuple[int, int, int, int],
    fg_shift: tuple[int, int],
    seed: int,
) -> Scene:
    """Random-dot pair where a rectangular block moves against the background.

    Dots outside ``fg_rect = (row, col, h, w)`` move by ``bg_shift``, dots
    inside by ``fg_shift``; both wrap around the frame. Landing dots are
    merged, so overlapping dots stay a single on-pixel.
    """
    row, col, rect_h, rect_w = fg_rect
    inside = 0 <= row <= row + rect_h <= size and 0 <= col <= col + rect_w <= size
    if not inside:
        raise ValueError(f"foreground rect {fg_rect} is outside a {size}x{size} frame")
    if tuple(fg_shift) == tuple(bg_shift):
        raise ValueError("foreground shift must differ from background shift")

    x = random_dots(size, size, density, seed)
    truth = np.zeros((size, size), dtype=bool)
    truth[row : row + rect_h, col : col + rect_w] = True

    grid = x.grid()
    background = np.roll(np.where(truth, 0.0, grid), shift=bg_shift[::-1], axis=(0, 1))
    foreground = np.roll(np.where(truth, grid, 0.0), shift=fg_shift[::-1], axis=(0, 1))
    y = Image.from_grid(np.maximum(background, foreground))

    pair = ImagePair(x=x, y=y, label=TransformLabel.translation(*bg_shift))
    return Scene(pair=pair, truth_mask=truth)


def dump_dataset(pairs: Sequence[ImagePair], directory: str | Path) -> None:
    """Write pairs as ``x_NNNNN.pgm``/``y_NNNNN.pgm`` plus a plain-text manifest."""
    directory = Path(directory)
    os.makedirs(directory, exist_ok=True)

    lines = [MANIFEST_HEADER]
    for index, pair in enumerate(pairs):
        pgm_write(pair.x, directory / f"x_{index:05d}.pgm")
        pgm_write(pair.y, directory / f"y_{index:05d}.pgm")
        label = pair.label
        lines.append(f"{index} {label.kind.value} {label.dx} {label.dy} {label.theta!r}")

    (directory / MANIFEST_NAME).write_text("\n".join(lines) + "\n")
    logger.info(f"Wrote {len(pairs)} pairs to {directory}")


def load_dataset(directory: str | Path) -> list[ImagePair]:
    """Read a directory written by :func:`dump_dataset`."""
    directory = Path(directory)
    manifest = directory / MANIFEST_NAME
    pairs = []
    for line_no, line in enumerate(manifest.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 5:
            raise ImageFormatError(
                "manifest", f"line {line_no} has {len(parts)} fields", str(manifest)
            )
        index, kind, dx, dy, theta = parts
        try:
            label = TransformLabel(TransformKind(kind), dx=int(dx), dy=int(dy), theta=float(theta))
        except ValueError as e:
            raise ImageFormatError("manifest", f"line {line_no}: {e}", str(manifest)) from e
        x = pgm_read(directory / f"x_{int(index):05d}.pgm")
        y = pgm_read(directory / f"y_{int(index):05d}.pgm")
        pairs.append(ImagePair(x=x, y=y, label=label))

    logger.info(f"Loaded {len(pairs)} pairs from {directory}")
    return pairs


def pairs_to_arrays(pairs: Sequence[ImagePair]) -> tuple[np.ndarray, np.ndarray]:
    """Stack pairs into ``(n, pixels)`` arrays ``X`` and ``Y``."""
    if not pairs:
        raise ValueError("no pairs given")
    shape = pairs[0].x.shape
    for pair in pairs:
        if pair.x.shape != shape:
            raise ValueError(f"mixed frame shapes: {shape} and {pair.x.shape}")
    X = np.stack([pair.x.pixels for pair in pairs])
    Y = np.stack([pair.y.pixels for pair in pairs])
    return X, Y
