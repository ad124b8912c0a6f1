"""
Configuration for training runs and datasets.

This module provides the validated configuration models and the loaders that
build them from JSON files, ``FLOW_RBM_*`` environment variables and explicit
overrides.
"""

import json
import os
from typing import Any, Literal

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .datagen import PairKind

ENV_PREFIX = "FLOW_RBM_"


class TrainConfig(BaseModel):
    """Hyperparameters of CD-1 training.

    Defaults are the published translation run: 200 factors, 100 mapping
    units, momentum 0.9, learning rate 0.01, target hidden probability 0.02,
    500 epochs.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    factors: int = Field(200, gt=0, description="number of factors F")
    hidden: int = Field(100, gt=0, description="number of mapping units K")
    epochs: int = Field(500, ge=0, description="passes over the dataset")
    batch_size: int = Field(100, gt=0, description="pairs per CD-1 update")
    learning_rate: float = Field(0.01, ge=0.0, description="step size per update")
    momentum: float = Field(0.9, ge=0.0, lt=1.0, description="velocity decay")
    target_hidden: float = Field(0.02, ge=0.0, le=1.0, description="target mean hidden activation")
    sparsity_rate: float | None = Field(
        None, ge=0.0, description="hidden-bias nudge rate (default 0.1 * learning_rate)"
    )
    weight_init_std: float = Field(0.01, ge=0.0, description="std of initial factor weights")
    seed: int = Field(0, ge=0, description="seed for initialization, shuffling and sampling")
    cd_steps: Literal[1] = Field(1, description="Gibbs steps per update (CD-1 only)")
    threads: int = Field(1, gt=0, description="worker threads for per-batch statistics")

    @model_validator(mode="after")
    def _resolve_sparsity_rate(self) -> "TrainConfig":
        if self.sparsity_rate is None:
            object.__setattr__(self, "sparsity_rate", 0.1 * self.learning_rate)
        return self


class DatasetConfig(BaseModel):
    """Recipe for a random-dot pair dataset.

    Defaults are the published training set: 10,000 pairs of 13x13 frames with
    ten percent of the pixels on.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: PairKind = Field(PairKind.TRANSLATION9, description="translation or rotation")
    n: int = Field(10_000, ge=1, description="number of pairs")
    size: int = Field(13, gt=0, description="frame side in pixels")
    density: float = Field(0.1, ge=0.0, le=1.0, description="probability a dot is on")
    seed: int = Field(0, ge=0, description="dataset seed")


def load_config_file(filepath: str) -> dict[str, Any]:
    """Load a configuration file.

    Args:
        filepath: Path to the configuration file

    Returns:
        The parsed configuration
    """
    with open(filepath) as f:
        return json.load(f)


def env_overrides(model: type[BaseModel], prefix: str = ENV_PREFIX) -> dict[str, str]:
    """Collect ``<prefix><FIELD>`` variables for the fields of ``model``.

    A ``.env`` file in the working directory is loaded first; variables already
    set in the environment take precedence over it.
    """
    load_dotenv()
    overrides = {}
    for name in model.model_fields:
        value = os.getenv(f"{prefix}{name.upper()}")
        if value is not None:
            overrides[name] = value
    return overrides


def create_train_config(
    file_config: dict[str, Any] | None = None,
    cli_overrides: dict[str, Any] | None = None,
    use_env: bool = True,
) -> TrainConfig:
    """Merge configuration sources and validate.

    Precedence, lowest first: field defaults, the ``train`` section of a config
    file (or the whole file when it has no such section), environment variables,
    explicit command-line values. ``None`` values in ``cli_overrides`` are ignored.

    Raises:
        pydantic.ValidationError: If the merged values violate a constraint.
    """
    merged: dict[str, Any] = {}
    if file_config:
        merged.update(file_config.get("train", file_config))
    if use_env:
        merged.update(env_overrides(TrainConfig))
    if cli_overrides:
        merged.update({key: value for key, value in cli_overrides.items() if value is not None})
    return TrainConfig.model_validate(merged)


def create_dataset_config(
    file_config: dict[str, Any] | None = None,
    cli_overrides: dict[str, Any] | None = None,
) -> DatasetConfig:
    """Merge the ``dataset`` section of a config file with explicit values and validate."""
    merged: dict[str, Any] = {}
    if file_config:
        merged.update(file_config.get("dataset", {}))
    if cli_overrides:
        merged.update({key: value for key, value in cli_overrides.items() if value is not None})
    return DatasetConfig.model_validate(merged)
