"""
Bipartite binary RBM.

The classic two-layer model: energy ``-x.W.h - b.x - c.h`` with logistic
conditionals in both directions. Used as a reference point and test oracle
for the gated model.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .base import EnergyModel, as_units, sigmoid, squeeze_like


@dataclasses.dataclass(frozen=True, eq=False)
class BaselineRBM(EnergyModel):
    """Binary RBM with weights ``W`` (I x K), visible bias ``b`` and hidden bias ``c``."""

    W: np.ndarray
    b: np.ndarray
    c: np.ndarray

    PARAM_NAMES = ("W", "b", "c")

    def _check_shapes(self) -> None:
        if self.W.ndim != 2:
            raise ValueError(f"W must be a matrix, got shape {self.W.shape}")
        n_visible, n_hidden = self.W.shape
        if self.b.shape != (n_visible,):
            raise ValueError(f"b must have shape ({n_visible},), got {self.b.shape}")
        if self.c.shape != (n_hidden,):
            raise ValueError(f"c must have shape ({n_hidden},), got {self.c.shape}")

    @property
    def n_visible(self) -> int:
        return self.W.shape[0]

    @property
    def n_hidden(self) -> int:
        return self.W.shape[1]

    def energy(self, x: np.ndarray, h: np.ndarray) -> np.ndarray | float:
        """``E(x, h) = -sum_ij x_i h_j W_ij - b.x - c.h``."""
        xb = as_units(x, self.n_visible, "x")
        hb = as_units(h, self.n_hidden, "h")
        if xb.shape[0] != hb.shape[0]:
            raise ValueError(f"batch sizes differ: x {xb.shape[0]}, h {hb.shape[0]}")
        interaction = np.einsum("bi,ik,bk->b", xb, self.W, hb)
        return squeeze_like(-interaction - xb @ self.b - hb @ self.c, x, h)

    def prob_h(self, x: np.ndarray) -> np.ndarray:
        """``P(h_j = 1 | x) = g(c_j + (x W)_j)``."""
        xb = as_units(x, self.n_visible, "x")
        return squeeze_like(sigmoid(xb @ self.W + self.c), x)

    def prob_v(self, h: np.ndarray) -> np.ndarray:
        """``P(x_i = 1 | h) = g(b_i + (W h)_i)``."""
        hb = as_units(h, self.n_hidden, "h")
        return squeeze_like(sigmoid(hb @ self.W.T + self.b), h)
