"""
CD-1 training of the factored gated RBM.

One update: positive hidden probabilities from the data pair, a binary hidden
sample, a mean-field reconstruction of the output frame, negative hidden
probabilities from the reconstruction, then a momentum step on the difference
of the statistics and a nudge of the hidden biases toward the target
activation.
"""

from __future__ import annotations

import csv
import os
import time
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import TrainConfig
from .datagen import ImagePair, pairs_to_arrays
from .errors import TrainingDivergedError
from .logging import logger
from .models import FactoredGRBM, save_model

HISTORY_NAME = "history.csv"
FINAL_MODEL_NAME = "model.grbm"

Velocity = dict[str, np.ndarray]


@dataclass
class TrainReport:
    """Per-epoch history of a training run and its final model."""

    model: FactoredGRBM
    epoch_errors: list[float] = field(default_factory=list)
    epoch_seconds: list[float] = field(default_factory=list)
    mean_hidden: list[float] = field(default_factory=list)

    @property
    def epochs(self) -> int:
        return len(self.epoch_errors)


def rng_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent generators for initialization and for shuffling/sampling."""
    init_seq, train_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(init_seq), np.random.default_rng(train_seq)


def init_model(n_input: int, n_output: int, cfg: TrainConfig) -> FactoredGRBM:
    """Gaussian factor weights with std ``cfg.weight_init_std``, zero biases."""
    if n_input <= 0 or n_output <= 0:
        raise ValueError(f"frame sizes must be positive, got {n_input} and {n_output}")

    rng, _ = rng_streams(cfg.seed)
    std = cfg.weight_init_std
    return FactoredGRBM(
        Wxf=rng.normal(0.0, 1.0, (n_input, cfg.factors)) * std,
        Wyf=rng.normal(0.0, 1.0, (n_output, cfg.factors)) * std,
        Whf=rng.normal(0.0, 1.0, (cfg.hidden, cfg.factors)) * std,
        ybias=np.zeros(n_output),
        hbias=np.zeros(cfg.hidden),
    )


@dataclass
class _ChunkStats:
    gradient: dict[str, np.ndarray]
    hidden_sum: np.ndarray
    squared_error: float


def _chunk_stats(
    model: FactoredGRBM, x: np.ndarray, y: np.ndarray, uniforms: np.ndarray
) -> _ChunkStats:
    """Summed positive-minus-negative statistics for a slice of the batch."""
    h_pos = model.hidden_probs(x, y)
    h_sample = (uniforms < h_pos).astype(np.float64)
    y_rec = model.prob_y_cond(x, h_sample)
    h_neg = model.hidden_probs(x, y_rec)

    positive = model.sufficient_stats(x, y, h_pos)
    negative = model.sufficient_stats(x, y_rec, h_neg)
    gradient = {name: positive[name] - negative[name] for name in model.PARAM_NAMES}
    return _ChunkStats(gradient, h_pos.sum(axis=0), float(np.sum((y - y_rec) ** 2)))


def _batch_stats(
    model: FactoredGRBM,
    x: np.ndarray,
    y: np.ndarray,
    uniforms: np.ndarray,
    executor: ThreadPoolExecutor | None,
    n_chunks: int,
) -> _ChunkStats:
    """Reduce chunk statistics in item order, so thread scheduling never reorders sums."""
    if executor is None or n_chunks <= 1:
        return _chunk_stats(model, x, y, uniforms)

    bounds = np.array_split(np.arange(x.shape[0]), n_chunks)
    futures = [
        executor.submit(_chunk_stats, model, x[idx], y[idx], uniforms[idx])
        for idx in bounds
        if idx.size
    ]
    chunks = [future.result() for future in futures]

    total = chunks[0]
    for chunk in chunks[1:]:
        for name in model.PARAM_NAMES:
            total.gradient[name] = total.gradient[name] + chunk.gradient[name]
        total.hidden_sum = total.hidden_sum + chunk.hidden_sum
        total.squared_error += chunk.squared_error
    return total


def _cd1_update(
    model: FactoredGRBM,
    x: np.ndarray,
    y: np.ndarray,
    velocity: Velocity,
    cfg: TrainConfig,
    rng: np.random.Generator,
    executor: ThreadPoolExecutor | None,
) -> tuple[FactoredGRBM, Velocity, float, np.ndarray]:
    n = x.shape[0]
    uniforms = rng.random((n, model.n_hidden))
    stats = _batch_stats(model, x, y, uniforms, executor, cfg.threads)

    new_velocity: Velocity = {}
    new_params: dict[str, np.ndarray] = {}
    for name, value in model.params().items():
        gradient = stats.gradient[name] / n
        if not np.all(np.isfinite(gradient)):
            logger.error(f"Non-finite gradient in block '{name}'")
            raise TrainingDivergedError(name)
        new_velocity[name] = cfg.momentum * velocity[name] + cfg.learning_rate * gradient
        new_params[name] = value + new_velocity[name]

    mean_hidden = stats.hidden_sum / n
    new_params["hbias"] = new_params["hbias"] + cfg.sparsity_rate * (
        cfg.target_hidden - mean_hidden
    )
    for name, value in new_params.items():
        if not np.all(np.isfinite(value)):
            logger.error(f"Update overflowed parameter block '{name}'")
            raise TrainingDivergedError(name, quantity="value")

    error = stats.squared_error / (n * model.n_output)
    logger.debug(f"CD-1 step on {n} pairs: mse={error:.6f}, mean hidden={mean_hidden.mean():.4f}")
    return model.replace(**new_params), new_velocity, error, mean_hidden


def cd1_step(
    model: FactoredGRBM,
    batch: Sequence[ImagePair] | tuple[np.ndarray, np.ndarray],
    velocity: Velocity,
    cfg: TrainConfig,
    rng: np.random.Generator,
    executor: ThreadPoolExecutor | None = None,
) -> tuple[FactoredGRBM, Velocity, float]:
    """Apply one CD-1 update.

    Args:
        model: Current parameters.
        batch: Pairs, or the stacked ``(X, Y)`` arrays of a batch.
        velocity: Parameter-shaped momentum accumulators.
        cfg: Learning rate, momentum and sparsity settings.
        rng: Source of the uniforms for hidden sampling.
        executor: Optional thread pool; the batch is split into ``cfg.threads``
            contiguous chunks whose statistics are summed in item order.

    Returns:
        The updated model, the updated velocity and the batch reconstruction
        error (mean squared difference between ``y`` and its reconstruction).

    Raises:
        TrainingDivergedError: If a parameter block gets a non-finite gradient
            or the update overflows it.
    """
    if isinstance(batch, tuple):
        x, y = batch
    else:
        if not batch:
            raise ValueError("batch is empty")
        x, y = pairs_to_arrays(batch)
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if x.shape[0] == 0:
        raise ValueError("batch is empty")
    if x.shape[1] != model.n_input or y.shape[1] != model.n_output:
        raise ValueError(
            f"batch frames have {x.shape[1]}/{y.shape[1]} pixels, "
            f"model expects {model.n_input}/{model.n_output}"
        )

    model, velocity, error, _ = _cd1_update(model, x, y, velocity, cfg, rng, executor)
    return model, velocity, error


def recon_error(model: FactoredGRBM, pair: ImagePair) -> float:
    """Mean squared error of the sampling-free reconstruction of ``pair.y``."""
    x, y = pair.x.pixels, pair.y.pixels
    h = model.prob_h_cond(x, y).probs
    y_rec = model.prob_y_cond(x, h)
    return float(np.mean((y - y_rec) ** 2))


def write_history(report: TrainReport, path: str | Path) -> None:
    """Write ``epoch,mse`` lines for every completed epoch."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["epoch", "mse"])
        for epoch, error in enumerate(report.epoch_errors, start=1):
            writer.writerow([epoch, repr(error)])


def _checkpoint(report: TrainReport, directory: Path, epoch: int) -> None:
    save_model(report.model, directory / f"model_epoch{epoch:04d}.grbm")
    write_history(report, directory / HISTORY_NAME)
    logger.info(f"Checkpoint written for epoch {epoch} in {directory}")


def train(
    dataset: Sequence[ImagePair],
    cfg: TrainConfig,
    checkpoint_dir: str | Path | None = None,
    checkpoint_every: int = 0,
) -> TrainReport:
    """Train a fresh model on ``dataset`` with CD-1.

    Each epoch visits the pairs in a fresh seeded permutation, in batches of
    ``cfg.batch_size``. The epoch error is the pair-weighted mean of the batch
    errors.

    Args:
        dataset: Non-empty list of equally sized pairs.
        cfg: Training configuration.
        checkpoint_dir: If given, receives ``model.grbm`` and ``history.csv`` at
            the end, plus periodic checkpoints.
        checkpoint_every: Checkpoint period in epochs; 0 disables periodic ones.

    Raises:
        TrainingDivergedError: Propagated from :func:`cd1_step`, tagged with the epoch.
    """
    X, Y = pairs_to_arrays(dataset)
    n = X.shape[0]
    if n < cfg.batch_size:
        logger.warning(f"Dataset has {n} pairs, fewer than one batch of {cfg.batch_size}")

    model = init_model(X.shape[1], Y.shape[1], cfg)
    _, rng = rng_streams(cfg.seed)
    velocity = model.zeros_like()
    report = TrainReport(model=model)

    directory = Path(checkpoint_dir) if checkpoint_dir is not None else None
    if directory is not None:
        os.makedirs(directory, exist_ok=True)

    logger.info(
        f"Training {X.shape[1]}->{Y.shape[1]} model with {cfg.factors} factors and "
        f"{cfg.hidden} hidden units on {n} pairs for {cfg.epochs} epochs"
    )

    executor = ThreadPoolExecutor(max_workers=cfg.threads) if cfg.threads > 1 else None
    try:
        for epoch in range(1, cfg.epochs + 1):
            started = time.perf_counter()
            order = rng.permutation(n)
            error_sum = 0.0
            hidden_sum = 0.0
            for start in range(0, n, cfg.batch_size):
                idx = order[start : start + cfg.batch_size]
                try:
                    model, velocity, error, mean_hidden = _cd1_update(
                        model, X[idx], Y[idx], velocity, cfg, rng, executor
                    )
                except TrainingDivergedError as e:
                    raise TrainingDivergedError(e.block, epoch, e.quantity) from e
                error_sum += error * idx.size
                hidden_sum += float(mean_hidden.mean()) * idx.size

            report.model = model
            report.epoch_errors.append(error_sum / n)
            report.mean_hidden.append(hidden_sum / n)
            report.epoch_seconds.append(time.perf_counter() - started)
            logger.info(
                f"Epoch {epoch}/{cfg.epochs}: mse={report.epoch_errors[-1]:.6f} "
                f"hidden={report.mean_hidden[-1]:.4f} ({report.epoch_seconds[-1]:.2f}s)"
            )

            if directory is not None and checkpoint_every > 0 and epoch % checkpoint_every == 0:
                _checkpoint(report, directory, epoch)
    finally:
        if executor is not None:
            executor.shutdown()

    if directory is not None:
        save_model(report.model, directory / FINAL_MODEL_NAME)
        write_history(report, directory / HISTORY_NAME)
        logger.info(f"Final model and history written to {directory}")

    return report
