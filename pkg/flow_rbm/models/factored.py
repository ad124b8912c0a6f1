"""
Factored third-order (gated) RBM.

The model conditions on an input frame ``x`` and couples an output frame ``y``
with mapping units ``h`` through ``F`` factors. The three-way weight tensor is
never materialized: ``W_ijk = sum_f Wxf[i,f] Wyf[j,f] Whf[k,f]``, so every
quantity below is computed from the factor projections

    fx = x @ Wxf,   fy = y @ Wyf,   fh = h @ Whf

in ``O((I + J + K) F)`` per example. :meth:`FactoredGRBM.full_tensor` builds the
tensor explicitly for small models and serves as an oracle.

All methods accept single vectors or ``(batch, units)`` arrays.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .base import EnergyModel, as_units, sigmoid, squeeze_like


@dataclasses.dataclass(frozen=True, eq=False)
class HiddenState:
    """Bernoulli probabilities of the mapping units, optionally with a binary sample."""

    probs: np.ndarray
    sample: np.ndarray | None = None

    def __post_init__(self) -> None:
        probs = np.array(self.probs, dtype=np.float64)
        if not np.all((probs >= 0.0) & (probs <= 1.0)):
            raise ValueError("hidden probabilities must lie in [0, 1]")
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    def sampled(self, rng: np.random.Generator) -> HiddenState:
        """Draw ``h = 1`` where ``u < p`` for ``u ~ Uniform[0, 1)``."""
        draw = (rng.random(self.probs.shape) < self.probs).astype(np.float64)
        return HiddenState(self.probs, draw)

    def binarized(self, threshold: float = 0.5) -> np.ndarray:
        """Units strictly above ``threshold`` set to one."""
        return (self.probs > threshold).astype(np.float64)


@dataclasses.dataclass(frozen=True, eq=False)
class FactoredGRBM(EnergyModel):
    """Conditional gated RBM with factor matrices and output/hidden biases.

    Attributes:
        Wxf: Input-to-factor weights, ``(I, F)``.
        Wyf: Output-to-factor weights, ``(J, F)``.
        Whf: Hidden-to-factor weights, ``(K, F)``.
        ybias: Output unit biases, ``(J,)``.
        hbias: Hidden unit biases, ``(K,)``.
    """

    Wxf: np.ndarray
    Wyf: np.ndarray
    Whf: np.ndarray
    ybias: np.ndarray
    hbias: np.ndarray

    PARAM_NAMES = ("Wxf", "Wyf", "Whf", "ybias", "hbias")

    def _check_shapes(self) -> None:
        for name in ("Wxf", "Wyf", "Whf"):
            if getattr(self, name).ndim != 2:
                raise ValueError(f"{name} must be a matrix, got shape {getattr(self, name).shape}")
        factors = {self.Wxf.shape[1], self.Wyf.shape[1], self.Whf.shape[1]}
        if len(factors) != 1:
            raise ValueError(
                "factor dimension differs across Wxf, Wyf, Whf: "
                f"{self.Wxf.shape[1]}, {self.Wyf.shape[1]}, {self.Whf.shape[1]}"
            )
        if self.ybias.shape != (self.n_output,):
            raise ValueError(f"ybias must have shape ({self.n_output},), got {self.ybias.shape}")
        if self.hbias.shape != (self.n_hidden,):
            raise ValueError(f"hbias must have shape ({self.n_hidden},), got {self.hbias.shape}")

    @classmethod
    def tied(
        cls, W: np.ndarray, Whf: np.ndarray, ybias: np.ndarray, hbias: np.ndarray
    ) -> FactoredGRBM:
        """Spatial-covariance model: one frame paired with itself through a shared ``W``."""
        return cls(Wxf=W, Wyf=W, Whf=Whf, ybias=ybias, hbias=hbias)

    @property
    def n_input(self) -> int:
        return self.Wxf.shape[0]

    @property
    def n_output(self) -> int:
        return self.Wyf.shape[0]

    @property
    def n_hidden(self) -> int:
        return self.Whf.shape[0]

    @property
    def n_factors(self) -> int:
        return self.Wxf.shape[1]

    @property
    def is_tied(self) -> bool:
        return self.Wxf.shape == self.Wyf.shape and np.array_equal(self.Wxf, self.Wyf)

    def _batches(self, **units: np.ndarray) -> list[np.ndarray]:
        sizes = {"x": self.n_input, "y": self.n_output, "h": self.n_hidden}
        arrays = [as_units(v, sizes[name], name) for name, v in units.items()]
        lengths = {arr.shape[0] for arr in arrays}
        if len(lengths) > 1:
            raise ValueError(f"batch sizes differ across {', '.join(units)}: {sorted(lengths)}")
        return arrays

    def full_tensor(self) -> np.ndarray:
        """Explicit ``(I, J, K)`` three-way weight tensor. Small models only."""
        return np.einsum("if,jf,kf->ijk", self.Wxf, self.Wyf, self.Whf)

    def cond_energy(self, x: np.ndarray, y: np.ndarray, h: np.ndarray) -> np.ndarray | float:
        """``E(y, h; x) = -sum_f fx_f fy_f fh_f - ybias.y - hbias.h``."""
        xb, yb, hb = self._batches(x=x, y=y, h=h)
        trilinear = np.sum((xb @ self.Wxf) * (yb @ self.Wyf) * (hb @ self.Whf), axis=1)
        return squeeze_like(-trilinear - yb @ self.ybias - hb @ self.hbias, x, y, h)

    def hidden_probs(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """``P(h_k = 1 | y; x) = g(sum_f Whf[k,f] fx_f fy_f + hbias_k)`` as a plain array."""
        xb, yb = self._batches(x=x, y=y)
        act = ((xb @ self.Wxf) * (yb @ self.Wyf)) @ self.Whf.T + self.hbias
        return squeeze_like(sigmoid(act), x, y)

    def prob_h_cond(self, x: np.ndarray, y: np.ndarray) -> HiddenState:
        """Mapping-unit probabilities given both frames, see :meth:`hidden_probs`."""
        return HiddenState(self.hidden_probs(x, y))

    def prob_y_cond(self, x: np.ndarray, h: np.ndarray) -> np.ndarray:
        """``P(y_j = 1 | h; x) = g(sum_f Wyf[j,f] fx_f fh_f + ybias_j)``."""
        xb, hb = self._batches(x=x, h=h)
        act = ((xb @ self.Wxf) * (hb @ self.Whf)) @ self.Wyf.T + self.ybias
        return squeeze_like(sigmoid(act), x, h)

    def _require_tied(self) -> None:
        if not self.is_tied:
            raise ValueError("spatial-covariance terms need tied Wxf and Wyf")

    def spatial_energy(self, x: np.ndarray, h: np.ndarray) -> np.ndarray | float:
        """Energy of a frame paired with itself: ``-sum_f fx_f^2 fh_f - ybias.x - hbias.h``."""
        self._require_tied()
        xb, hb = self._batches(x=x, h=h)
        quadratic = np.sum((xb @ self.Wxf) ** 2 * (hb @ self.Whf), axis=1)
        return squeeze_like(-quadratic - xb @ self.ybias - hb @ self.hbias, x, h)

    def spatial_prob_h(self, x: np.ndarray) -> HiddenState:
        """``P(h_k = 1 | x) = g(sum_f Whf[k,f] fx_f^2 + hbias_k)`` for tied weights."""
        self._require_tied()
        (xb,) = self._batches(x=x)
        act = (xb @ self.Wxf) ** 2 @ self.Whf.T + self.hbias
        return HiddenState(squeeze_like(sigmoid(act), x))

    def neg_energy_grad(
        self, x: np.ndarray, y: np.ndarray, h: np.ndarray
    ) -> dict[str, np.ndarray]:
        """Batch-averaged ``-dE/dtheta`` for every parameter block.

        ``h`` (and ``y``) may hold probabilities; the energy is linear in each,
        so this yields the expected statistics under those Bernoulli means.
        """
        xb, yb, hb = self._batches(x=x, y=y, h=h)
        n = xb.shape[0]
        return {name: value / n for name, value in self.sufficient_stats(xb, yb, hb).items()}

    def sufficient_stats(
        self, xb: np.ndarray, yb: np.ndarray, hb: np.ndarray
    ) -> dict[str, np.ndarray]:
        """Batch-summed ``-dE/dtheta`` for validated 2D inputs."""
        fx, fy, fh = xb @ self.Wxf, yb @ self.Wyf, hb @ self.Whf
        return {
            "Wxf": xb.T @ (fy * fh),
            "Wyf": yb.T @ (fx * fh),
            "Whf": hb.T @ (fx * fy),
            "ybias": yb.sum(axis=0),
            "hbias": hb.sum(axis=0),
        }
