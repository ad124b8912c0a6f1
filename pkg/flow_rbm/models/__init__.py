"""
Energy-based models.

This module provides the bipartite RBM, the factored gated RBM and the GRBM1
file format.
"""

from .base import EnergyModel, sigmoid
from .baseline import BaselineRBM
from .factored import FactoredGRBM, HiddenState
from .serialization import load_model, save_model

__all__ = [
    "EnergyModel",
    "BaselineRBM",
    "FactoredGRBM",
    "HiddenState",
    "load_model",
    "save_model",
    "sigmoid",
]
