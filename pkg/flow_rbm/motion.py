"""
Global motion estimation and foreground segmentation from max-flow fields.

The background is assumed to move rigidly and to cover most of the frame.
Its motion is the translation or rotation that the largest share of active
pixels agree with; active pixels whose flow disagrees with it are foreground.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .datagen import Scene, rotation_offsets
from .errors import EmptyEvidenceError, NoGlobalMotionError
from .flow import FlowField, modal_displacement, toroidal
from .imagecore import Image, pgm_write, positions
from .logging import logger

DEFAULT_MIN_CONSENSUS = 0.5
DEFAULT_TOLERANCE = 1
ROTATION_SLACK = 1
THETA_GRID = np.arange(360)

_NEIGHBOURHOOD = np.ones((3, 3), dtype=np.int64)


class MotionKind(str, enum.Enum):
    TRANSLATION = "translation"
    ROTATION = "rotation"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class GlobalMotion:
    """Dominant rigid motion of a flow field.

    Attributes:
        kind: Translation, rotation or unknown.
        dx: Column shift of a translation.
        dy: Row shift of a translation.
        theta: Counter-clockwise angle of a rotation, in degrees.
        consensus: Fraction of active pixels agreeing with the motion.
    """

    kind: MotionKind
    dx: int = 0
    dy: int = 0
    theta: float = 0.0
    consensus: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.consensus <= 1.0:
            raise ValueError(f"consensus must lie in [0, 1], got {self.consensus}")

    @classmethod
    def translation(cls, dx: int, dy: int, consensus: float) -> GlobalMotion:
        return cls(MotionKind.TRANSLATION, dx=int(dx), dy=int(dy), consensus=consensus)

    @classmethod
    def rotation(cls, theta: float, consensus: float) -> GlobalMotion:
        return cls(MotionKind.ROTATION, theta=float(theta), consensus=consensus)

    @classmethod
    def unknown(cls, consensus: float = 0.0) -> GlobalMotion:
        return cls(MotionKind.UNKNOWN, consensus=consensus)

    def __str__(self) -> str:
        if self.kind is MotionKind.TRANSLATION:
            motion = f"translation dx={self.dx} dy={self.dy}"
        elif self.kind is MotionKind.ROTATION:
            motion = f"rotation theta={self.theta:g}"
        else:
            motion = "unknown"
        return f"{motion} consensus={self.consensus:.4f}"


@dataclass(frozen=True, eq=False)
class SegMask:
    """Per-pixel foreground labels; ``foreground`` is a read-only ``(height, width)`` bool array."""

    foreground: np.ndarray

    def __post_init__(self) -> None:
        fg = np.array(self.foreground, dtype=bool)
        if fg.ndim != 2:
            raise ValueError(f"mask must be 2D, got shape {fg.shape}")
        fg.flags.writeable = False
        object.__setattr__(self, "foreground", fg)

    @property
    def shape(self) -> tuple[int, int]:
        return self.foreground.shape

    @property
    def background(self) -> np.ndarray:
        return ~self.foreground

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SegMask):
            return NotImplemented
        return np.array_equal(self.foreground, other.foreground)

    __hash__ = None  # type: ignore[assignment]


def estimate_translation(flow: FlowField) -> tuple[int, int, float]:
    """Modal displacement over active pixels as ``(dx, dy, consensus)``.

    Raises:
        EmptyEvidenceError: If no pixel is active.
    """
    return modal_displacement(flow)


def rotated_positions(
    width: int, height: int, thetas: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Exact ``(rows, cols)`` of every pixel rotated about the frame center.

    Both arrays have shape ``(len(thetas), width * height)``.
    """
    center_row, center_col = (height - 1) / 2.0, (width - 1) / 2.0
    pos = positions(width, height)
    thetas = np.asarray(thetas, dtype=np.float64)[:, None]
    drow, dcol = rotation_offsets(thetas, pos[:, 0] - center_row, pos[:, 1] - center_col)
    return drow + center_row, dcol + center_col


def rotation_targets(
    width: int, height: int, thetas: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Nearest-pixel rotated positions; targets are not clipped to the frame."""
    rows, cols = rotated_positions(width, height, thetas)
    return np.rint(rows).astype(np.int64), np.rint(cols).astype(np.int64)


def _rotation_agreement(flow: FlowField) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-theta agreement of the active pixels.

    Returns the count within the slack, the count exactly on target and the
    summed squared distance to the exact rotated positions.
    """
    exact_rows, exact_cols = rotated_positions(flow.width, flow.height, THETA_GRID)
    exact_rows, exact_cols = exact_rows[:, flow.active], exact_cols[:, flow.active]
    actual = flow.target_positions()[flow.active]
    row_err = np.abs(np.rint(exact_rows).astype(np.int64) - actual[:, 0])
    col_err = np.abs(np.rint(exact_cols).astype(np.int64) - actual[:, 1])
    error = np.maximum(row_err, col_err)
    residual = np.sum((exact_rows - actual[:, 0]) ** 2 + (exact_cols - actual[:, 1]) ** 2, axis=1)
    return np.sum(error <= ROTATION_SLACK, axis=1), np.sum(error == 0, axis=1), residual


def _best_rotation(flow: FlowField) -> tuple[float, float, float]:
    if not flow.active.any():
        raise EmptyEvidenceError()
    within, exact, residual = _rotation_agreement(flow)
    # Rank by slack agreement, exact agreement, residual, then smaller theta
    best = int(np.lexsort((THETA_GRID, residual, -exact, -within))[0])
    n = int(flow.active.sum())
    return float(THETA_GRID[best]), float(within[best] / n), float(exact[best] / n)


def estimate_rotation(flow: FlowField) -> tuple[float, float]:
    """Best rotation over whole degrees as ``(theta, consensus)``.

    A pixel agrees with ``theta`` when its flow target lies within one pixel
    (infinity norm) of its rotated position.

    Raises:
        EmptyEvidenceError: If no pixel is active.
    """
    theta, consensus, _ = _best_rotation(flow)
    return theta, consensus


def classify_global_motion(
    flow: FlowField, min_consensus: float = DEFAULT_MIN_CONSENSUS
) -> GlobalMotion:
    """Pick translation or rotation as the global motion of ``flow``.

    The two candidates are compared on the fraction of active pixels they
    predict exactly; translation wins ties. The result is Unknown when the
    winner's consensus is below ``min_consensus`` or no pixel is active.
    """
    if not flow.active.any():
        logger.debug("No active pixels; global motion unknown")
        return GlobalMotion.unknown()

    dx, dy, translation_consensus = estimate_translation(flow)
    theta, rotation_consensus, rotation_exact = _best_rotation(flow)

    if translation_consensus >= rotation_exact:
        motion = GlobalMotion.translation(dx, dy, translation_consensus)
    else:
        motion = GlobalMotion.rotation(theta, rotation_consensus)

    if motion.consensus < min_consensus:
        logger.debug(f"Best candidate {motion} is below consensus {min_consensus}")
        return GlobalMotion.unknown(motion.consensus)
    logger.debug(f"Global motion: {motion}")
    return motion


def motion_error(flow: FlowField, gm: GlobalMotion) -> np.ndarray:
    """Infinity-norm distance between each pixel's flow target and the motion's prediction.

    Translations are compared on the torus; rotations on the raw frame grid.
    """
    actual = flow.target_positions()
    pos = positions(flow.width, flow.height)
    if gm.kind is MotionKind.TRANSLATION:
        row_err = toroidal(actual[:, 0] - (pos[:, 0] + gm.dy), flow.height)
        col_err = toroidal(actual[:, 1] - (pos[:, 1] + gm.dx), flow.width)
    elif gm.kind is MotionKind.ROTATION:
        rows, cols = rotation_targets(flow.width, flow.height, np.array([gm.theta]))
        row_err = actual[:, 0] - rows[0]
        col_err = actual[:, 1] - cols[0]
    else:
        raise NoGlobalMotionError()
    return np.maximum(np.abs(row_err), np.abs(col_err))


def majority_smooth(labels: np.ndarray, active: np.ndarray) -> np.ndarray:
    """One pass of 3x3 majority voting among active pixels.

    Each active pixel takes the label held by most active pixels in its
    window, itself included; ties keep its label. Inactive pixels are
    background.
    """
    labels = labels & active
    fg_votes = ndimage.convolve(labels.astype(np.int64), _NEIGHBOURHOOD, mode="constant")
    voters = ndimage.convolve(active.astype(np.int64), _NEIGHBOURHOOD, mode="constant")
    bg_votes = voters - fg_votes
    smoothed = np.where(fg_votes == bg_votes, labels, fg_votes > bg_votes)
    return smoothed & active


def segment_foreground(
    flow: FlowField,
    gm: GlobalMotion,
    tol: float = DEFAULT_TOLERANCE,
    smooth: bool = True,
) -> SegMask:
    """Label active pixels whose flow violates the global motion as foreground.

    Args:
        flow: Max-flow field of the frame pair.
        gm: Global motion of the background.
        tol: Largest infinity-norm deviation still counted as background.
        smooth: Apply one pass of :func:`majority_smooth`.

    Raises:
        NoGlobalMotionError: If ``gm`` is Unknown.
    """
    if gm.kind is MotionKind.UNKNOWN:
        raise NoGlobalMotionError()

    shape = (flow.height, flow.width)
    active = flow.active.reshape(shape)
    labels = active & (motion_error(flow, gm) > tol).reshape(shape)
    if smooth:
        labels = majority_smooth(labels, active)
    logger.debug(f"Segmented {int(labels.sum())} of {int(active.sum())} active pixels")
    return SegMask(labels)


def mask_iou(a: SegMask, b: SegMask) -> float:
    """Intersection over union of the foreground sets; 1.0 when both are empty."""
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} and {b.shape}")
    union = np.count_nonzero(a.foreground | b.foreground)
    if union == 0:
        return 1.0
    return np.count_nonzero(a.foreground & b.foreground) / union


def scene_iou(mask: SegMask, scene: Scene, flow: FlowField) -> float:
    """IoU of ``mask`` against the scene's truth mask, restricted to active pixels."""
    active = flow.active.reshape(flow.height, flow.width)
    if active.shape != scene.truth_mask.shape:
        raise ValueError(
            f"flow shape {active.shape} does not match scene {scene.truth_mask.shape}"
        )
    return mask_iou(SegMask(mask.foreground & active), SegMask(scene.truth_mask & active))


def mask_write(mask: SegMask, path: str | Path) -> None:
    """Write ``mask`` as a PGM: 0 for background, 255 for foreground."""
    pgm_write(Image.from_grid(mask.foreground.astype(np.float64)), path)


def angle_distance(a: float, b: float) -> float:
    """Smallest absolute difference between two angles in degrees."""
    return abs((a - b + 180.0) % 360.0 - 180.0)
