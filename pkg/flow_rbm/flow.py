"""
Max-flow fields, analogy reconstruction and flow rendering.

Given the mapping-unit activations inferred from a frame pair, every input
pixel is connected to the output pixel with the strongest three-way
connection; that output pixel is the input pixel's flow target.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from matplotlib.colors import hsv_to_rgb

from .datagen import ImagePair, TransformKind, TransformLabel
from .errors import EmptyEvidenceError, ImageFormatError
from .imagecore import Image, pgm_write, positions, ppm_write
from .logging import logger
from .models import FactoredGRBM

FLOW_TEXT_MAGIC = "# flow"
DEFAULT_FLOW_RADIUS = 1


class RenderMode(str, enum.Enum):
    ARROWS_TEXT = "arrows_text"
    COLOR_PPM = "color_ppm"


def toroidal(delta: np.ndarray, period: int) -> np.ndarray:
    """Nearest representative of ``delta`` modulo ``period``.

    Results lie in ``[-(period // 2), period - period // 2)``.
    """
    half = period // 2
    return (np.asarray(delta) + half) % period - half


@dataclass(frozen=True, eq=False)
class FlowField:
    """Per-input-pixel flow target on a ``width`` x ``height`` frame.

    Attributes:
        width: Frame width.
        height: Frame height.
        target: Output pixel index for every input pixel index.
        active: Whether the input pixel is on (``x_i >= 0.5``).
    """

    width: int
    height: int
    target: np.ndarray
    active: np.ndarray

    def __post_init__(self) -> None:
        size = self.width * self.height
        target = np.array(self.target, dtype=np.int64).reshape(-1)
        active = np.array(self.active, dtype=bool).reshape(-1)
        if target.size != size or active.size != size:
            raise ValueError(f"flow arrays must have {size} entries")
        if np.any((target < 0) | (target >= size)):
            raise ValueError("flow targets must be valid pixel indices")
        target.flags.writeable = False
        active.flags.writeable = False
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "active", active)

    @classmethod
    def from_displacements(
        cls, width: int, height: int, dcol: np.ndarray, drow: np.ndarray, active: np.ndarray
    ) -> FlowField:
        """Build a field from per-pixel displacements, wrapping targets around the frame."""
        rows, cols = positions(width, height).T
        target_rows = (rows + np.asarray(drow, dtype=np.int64)) % height
        target_cols = (cols + np.asarray(dcol, dtype=np.int64)) % width
        return cls(width, height, target_rows * width + target_cols, active)

    @property
    def size(self) -> int:
        return self.width * self.height

    def target_positions(self) -> np.ndarray:
        """``(size, 2)`` array of target ``(row, col)``."""
        rows, cols = np.divmod(self.target, self.width)
        return np.stack([rows, cols], axis=1)

    def displacement(self) -> np.ndarray:
        """``(size, 2)`` array of ``(dcol, drow)``, reduced to the nearest toroidal offset."""
        delta = self.target_positions() - positions(self.width, self.height)
        return np.stack(
            [toroidal(delta[:, 1], self.width), toroidal(delta[:, 0], self.height)], axis=1
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FlowField):
            return NotImplemented
        return (
            (self.width, self.height) == (other.width, other.height)
            and np.array_equal(self.target, other.target)
            and np.array_equal(self.active, other.active)
        )

    __hash__ = None  # type: ignore[assignment]


def flow_scores(model: FactoredGRBM, h: np.ndarray) -> np.ndarray:
    """``(I, J)`` connection strengths under mapping units ``h``.

    Row ``i`` is the output-unit drive of the one-hot input ``e_i``:
    ``s_ij = sum_f Wxf[i,f] (h.Whf)_f Wyf[j,f]``.
    """
    h = np.asarray(h, dtype=np.float64)
    if h.shape != (model.n_hidden,):
        raise ValueError(f"h must have shape ({model.n_hidden},), got {h.shape}")
    gate = h @ model.Whf
    return (model.Wxf * gate) @ model.Wyf.T


def flow_from_hidden(model: FactoredGRBM, x: Image, h: np.ndarray) -> FlowField:
    """Max-flow field of frame ``x`` under fixed mapping units ``h``.

    Ties resolve to the smallest output index.
    """
    if x.size != model.n_input or model.n_input != model.n_output:
        raise ValueError(
            f"frame of {x.size} pixels does not fit a {model.n_input}->{model.n_output} model"
        )
    target = np.argmax(flow_scores(model, h), axis=1)
    return FlowField(x.width, x.height, target, x.pixels >= 0.5)


def max_flow_field(model: FactoredGRBM, pair: ImagePair) -> FlowField:
    """Infer the mapping units from ``pair`` and return its max-flow field."""
    if pair.x.size != model.n_input:
        raise ValueError(f"frames have {pair.x.size} pixels, model expects {model.n_input}")
    h = model.prob_h_cond(pair.x.pixels, pair.y.pixels).probs
    return flow_from_hidden(model, pair.x, h)


def window_masks(width: int, height: int, radius: int) -> np.ndarray:
    """Row ``i`` marks the pixels within toroidal Chebyshev ``radius`` of pixel ``i``."""
    if radius < 0:
        raise ValueError(f"radius must be non-negative, got {radius}")
    pos = positions(width, height)
    drow = np.abs(toroidal(pos[None, :, 0] - pos[:, None, 0], height))
    dcol = np.abs(toroidal(pos[None, :, 1] - pos[:, None, 1], width))
    return np.maximum(drow, dcol) <= radius


def local_flow_field(
    model: FactoredGRBM, pair: ImagePair, radius: int = DEFAULT_FLOW_RADIUS
) -> FlowField:
    """Max-flow field with mapping units inferred separately around every input pixel.

    Pixel ``i`` reads its target under the mapping units inferred from ``x``
    restricted to the window of ``radius`` around ``i`` and ``y`` restricted
    to the window of ``radius + 1``, so regions moving differently get
    different flows.
    """
    x, y = pair.x, pair.y
    if x.size != model.n_input or model.n_input != model.n_output:
        raise ValueError(
            f"frame of {x.size} pixels does not fit a {model.n_input}->{model.n_output} model"
        )
    x_masked = window_masks(x.width, x.height, radius) * x.pixels
    y_masked = window_masks(y.width, y.height, radius + 1) * y.pixels
    gates = model.hidden_probs(x_masked, y_masked) @ model.Whf
    scores = (model.Wxf * gates) @ model.Wyf.T
    logger.debug(f"Local flow over {x.size} windows of radius {radius}")
    return FlowField(x.width, x.height, np.argmax(scores, axis=1), x.pixels >= 0.5)


def analogy_reconstruct(model: FactoredGRBM, exemplar: ImagePair, novel_x: Image) -> Image:
    """Apply the transformation shown by ``exemplar`` to ``novel_x``.

    The exemplar's mapping units and the reconstructed output are both
    binarized with a strict ``> 0.5``.
    """
    if exemplar.x.size != model.n_input or novel_x.size != model.n_input:
        raise ValueError(f"frames must have {model.n_input} pixels")
    h = model.prob_h_cond(exemplar.x.pixels, exemplar.y.pixels).binarized()
    y = model.prob_y_cond(novel_x.pixels, h)
    return Image(novel_x.width, novel_x.height, (y > 0.5).astype(np.float64))


def pixel_agreement(a: Image, b: Image) -> float:
    """Fraction of pixels on which two binary frames agree."""
    if a.shape != b.shape:
        raise ValueError(f"frame shapes differ: {a.shape} and {b.shape}")
    return float(np.mean((a.pixels >= 0.5) == (b.pixels >= 0.5)))


def modal_displacement(flow: FlowField) -> tuple[int, int, float]:
    """Most frequent ``(dcol, drow)`` over active pixels and the fraction showing it.

    Ties go to the lexicographically smaller ``(drow, dcol)``.

    Raises:
        EmptyEvidenceError: If no pixel is active.
    """
    if not flow.active.any():
        raise EmptyEvidenceError()
    disp = flow.displacement()[flow.active][:, ::-1]
    values, counts = np.unique(disp, axis=0, return_counts=True)
    best = int(np.argmax(counts))
    drow, dcol = values[best]
    return int(dcol), int(drow), float(counts[best] / disp.shape[0])


def modal_displacement_matches(flow: FlowField, label: TransformLabel) -> bool:
    """Whether the modal displacement equals a translation label's shift."""
    if label.kind not in (TransformKind.TRANSLATION, TransformKind.IDENTITY):
        raise ValueError(f"{label.kind.value} labels have no single displacement")
    try:
        dcol, drow, _ = modal_displacement(flow)
    except EmptyEvidenceError:
        return False
    return (dcol, drow) == label.shift


def _write_arrows_text(flow: FlowField, path: str | Path) -> None:
    lines = [f"{FLOW_TEXT_MAGIC} {flow.width} {flow.height} row col drow dcol"]
    disp = flow.displacement()
    for i in np.flatnonzero(flow.active):
        row, col = divmod(int(i), flow.width)
        dcol, drow = disp[i]
        lines.append(f"{row} {col} {drow} {dcol}")
    Path(path).write_text("\n".join(lines) + "\n")


def flow_to_rgb(flow: FlowField) -> np.ndarray:
    """``(height, width, 3)`` rendering: hue is direction, saturation is magnitude.

    Inactive pixels are black.
    """
    disp = flow.displacement().astype(np.float64)
    dcol, drow = disp[:, 0], disp[:, 1]
    angle = np.arctan2(-drow, dcol)
    magnitude = np.hypot(dcol, drow)
    peak = magnitude[flow.active].max() if flow.active.any() else 0.0

    hsv = np.zeros((flow.size, 3))
    hsv[:, 0] = (angle % (2 * np.pi)) / (2 * np.pi)
    hsv[:, 1] = magnitude / peak if peak > 0 else 0.0
    hsv[:, 2] = flow.active.astype(np.float64)
    return hsv_to_rgb(hsv.reshape(flow.height, flow.width, 3))


def render_flow(flow: FlowField, path: str | Path, mode: RenderMode | str) -> None:
    """Write ``flow`` as arrow text or as a direction-coded PPM."""
    mode = RenderMode(mode)
    if mode is RenderMode.ARROWS_TEXT:
        _write_arrows_text(flow, path)
    else:
        ppm_write(flow_to_rgb(flow), path)
    active = int(flow.active.sum())
    logger.info(f"Rendered flow ({active} active pixels) to {path} as {mode.value}")


def read_flow_text(path: str | Path) -> tuple[int, int, list[tuple[int, int, int, int]]]:
    """Parse arrow text back into ``(width, height, [(row, col, drow, dcol), ...])``."""
    path = str(path)
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith(FLOW_TEXT_MAGIC):
        raise ImageFormatError("magic", f"expected '{FLOW_TEXT_MAGIC}' header", path)
    header = lines[0].split()
    try:
        width, height = int(header[2]), int(header[3])
    except (IndexError, ValueError):
        raise ImageFormatError("header", "expected width and height", path) from None

    records = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            row, col, drow, dcol = (int(token) for token in line.split())
        except ValueError:
            detail = f"line {line_no} is not 'row col drow dcol'"
            raise ImageFormatError("record", detail, path) from None
        records.append((row, col, drow, dcol))
    return width, height, records


def factor_filter_grid(model: FactoredGRBM, width: int, height: int) -> np.ndarray:
    """Tile each factor's input and output filters side by side.

    Factor ``f`` occupies one cell: its ``Wxf`` column on the left and its
    ``Wyf`` column on the right, both reshaped to the frame, separated and
    framed by a one-pixel border. The whole grid is rescaled to [0, 1].
    """
    if model.n_input != width * height or model.n_output != width * height:
        raise ValueError(f"model does not operate on {width}x{height} frames")

    n = model.n_factors
    cols = int(np.ceil(np.sqrt(n)))
    rows = int(np.ceil(n / cols))
    cell_h, cell_w = height + 1, 2 * width + 2
    lo = min(model.Wxf.min(), model.Wyf.min())
    hi = max(model.Wxf.max(), model.Wyf.max())
    scale = hi - lo if hi > lo else 1.0

    grid = np.zeros((rows * cell_h + 1, cols * cell_w + 1))
    for f in range(n):
        r0 = (f // cols) * cell_h + 1
        c0 = (f % cols) * cell_w + 1
        left = (model.Wxf[:, f].reshape(height, width) - lo) / scale
        right = (model.Wyf[:, f].reshape(height, width) - lo) / scale
        grid[r0 : r0 + height, c0 : c0 + width] = left
        grid[r0 : r0 + height, c0 + width + 1 : c0 + 2 * width + 1] = right
    return grid


def render_factor_filters(model: FactoredGRBM, path: str | Path, width: int, height: int) -> None:
    """Write :func:`factor_filter_grid` as a PGM."""
    pgm_write(Image.from_grid(factor_filter_grid(model, width, height)), path)
    logger.info(f"Rendered {model.n_factors} factor filters to {path}")
