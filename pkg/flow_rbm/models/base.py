"""
Base class for energy-based models.

This module provides the shared parameter handling that every model in
flow_rbm builds on: float64 read-only parameter arrays, finiteness checks and
copy-on-update.
"""

from __future__ import annotations

import dataclasses
from abc import ABC, abstractmethod
from typing import ClassVar, TypeVar

import numpy as np
from scipy.special import expit

M = TypeVar("M", bound="EnergyModel")


def sigmoid(a: np.ndarray) -> np.ndarray:
    """Logistic function, overflow-free for any finite argument."""
    return expit(a)


def as_units(v: np.ndarray, size: int, name: str) -> np.ndarray:
    """Validate a unit vector or a batch of them and return it as 2D float64.

    Args:
        v: Shape ``(size,)`` or ``(batch, size)``.
        size: Expected number of units.
        name: Argument name for error messages.

    Raises:
        ValueError: If the trailing dimension is not ``size``.
    """
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim not in (1, 2) or arr.shape[-1] != size:
        raise ValueError(f"{name} must have {size} units, got shape {arr.shape}")
    return np.atleast_2d(arr)


def squeeze_like(result: np.ndarray, *inputs: np.ndarray) -> np.ndarray | float:
    """Drop the batch axis again when every input was a single vector."""
    if all(np.ndim(v) == 1 for v in inputs):
        out = result[0]
        return float(out) if np.ndim(out) == 0 else out
    return result


@dataclasses.dataclass(frozen=True, eq=False)
class EnergyModel(ABC):
    """Base class for immutable energy-based models.

    Subclasses are frozen dataclasses whose fields are exactly the parameter
    blocks listed in ``PARAM_NAMES``.
    """

    PARAM_NAMES: ClassVar[tuple[str, ...]] = ()

    def __post_init__(self) -> None:
        for name in self.PARAM_NAMES:
            arr = np.array(getattr(self, name), dtype=np.float64)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"parameter block '{name}' has non-finite entries")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        self._check_shapes()

    @abstractmethod
    def _check_shapes(self) -> None:
        """Raise ``ValueError`` if the parameter blocks disagree in shape."""
        pass

    def params(self) -> dict[str, np.ndarray]:
        """Parameter blocks by name, in ``PARAM_NAMES`` order."""
        return {name: getattr(self, name) for name in self.PARAM_NAMES}

    def replace(self: M, **blocks: np.ndarray) -> M:
        """Copy of the model with some parameter blocks replaced."""
        unknown = set(blocks) - set(self.PARAM_NAMES)
        if unknown:
            raise ValueError(f"unknown parameter blocks: {sorted(unknown)}")
        return dataclasses.replace(self, **blocks)

    def zeros_like(self) -> dict[str, np.ndarray]:
        """Parameter-shaped zero accumulators."""
        return {name: np.zeros_like(value) for name, value in self.params().items()}

    def __eq__(self, other: object) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, name), getattr(other, name)) for name in self.PARAM_NAMES
        )

    __hash__ = None  # type: ignore[assignment]
