"""
Desk-scale training reproductions.

These train real models and take minutes; they are deselected by default.
Run them with ``pytest -m slow``.
"""

from pathlib import Path

import numpy as np
import pytest

from flow_rbm.cli import dispatch
from flow_rbm.config import TrainConfig
from flow_rbm.datagen import (
    ImagePair,
    TransformLabel,
    make_pairs,
    make_scene,
    random_dots,
    translate_wrap,
)
from flow_rbm.flow import (
    FlowField,
    analogy_reconstruct,
    local_flow_field,
    max_flow_field,
    modal_displacement_matches,
    pixel_agreement,
)
from flow_rbm.imagecore import Image
from flow_rbm.models.serialization import model_to_bytes
from flow_rbm.motion import (
    MotionKind,
    angle_distance,
    classify_global_motion,
    estimate_rotation,
    scene_iou,
    segment_foreground,
)
from flow_rbm.training import train

pytestmark = pytest.mark.slow

CONFIGS = Path(__file__).resolve().parents[2] / "configs"

TRANSLATION_SIZE = 8
TRANSLATION_DENSITY = 0.1
TRANSLATION_CONFIG = TrainConfig(
    factors=64,
    hidden=32,
    epochs=100,
    batch_size=20,
    learning_rate=0.02,
    weight_init_std=0.1,
    seed=0,
)

ROTATION_SIZE = 13
ROTATION_DENSITY = 0.1
ROTATION_PAIRS = 10000
ROTATION_CONFIG = TrainConfig(
    factors=100,
    hidden=50,
    epochs=50,
    batch_size=20,
    learning_rate=0.02,
    weight_init_std=0.1,
    seed=0,
)

# Block of the 8x8 segmentation scenes: rows and columns 2..5
SCENE_RECT = (2, 2, 4, 4)
SCENES = 50


def translation_config(**overrides):
    return TrainConfig(**{**TRANSLATION_CONFIG.model_dump(), **overrides})


def translation_pairs(seed=1):
    return make_pairs("translation", 2000, TRANSLATION_SIZE, TRANSLATION_DENSITY, seed=seed)


def rotation_pairs():
    return make_pairs("rotation", ROTATION_PAIRS, ROTATION_SIZE, ROTATION_DENSITY, seed=1)


def background_dominant_scenes(count, first_seed=0):
    """Scenes with at least one block dot and more background than block dots."""
    scenes = []
    seed = first_seed
    while len(scenes) < count:
        scene = make_scene(
            TRANSLATION_SIZE, TRANSLATION_DENSITY, (1, 0), SCENE_RECT, (-1, 0), seed
        )
        seed += 1
        active = scene.pair.x.grid() >= 0.5
        block = int(np.count_nonzero(active & scene.truth_mask))
        if 0 < block < int(np.count_nonzero(active & ~scene.truth_mask)):
            scenes.append(scene)
    return scenes


@pytest.fixture(scope="module")
def translation_report():
    return train(translation_pairs(), TRANSLATION_CONFIG)


@pytest.fixture(scope="module")
def rotation_report():
    return train(rotation_pairs(), ROTATION_CONFIG)


class TestTranslation:
    def test_error_halves(self, translation_report):
        errors = translation_report.epoch_errors
        assert errors[-1] < 0.5 * errors[0]

    def test_error_halves_across_seeds(self):
        halved = 0
        for seed in range(10):
            cfg = translation_config(seed=seed)
            errors = train(translation_pairs(seed=100 + seed), cfg).epoch_errors
            halved += errors[-1] < 0.5 * errors[0]
        assert halved >= 9

    def test_modal_flow_recovers_shift(self, translation_report):
        model = translation_report.model
        held_out = make_pairs(
            "translation", 200, TRANSLATION_SIZE, TRANSLATION_DENSITY, seed=1001
        )
        hits = [modal_displacement_matches(max_flow_field(model, p), p.label) for p in held_out]
        assert np.mean(hits) >= 0.8

    def test_analogy(self, translation_report):
        model = translation_report.model
        exemplars = make_pairs(
            "translation", 100, TRANSLATION_SIZE, TRANSLATION_DENSITY, seed=2002
        )
        scores, blank_scores = [], []
        blank = Image.zeros(TRANSLATION_SIZE, TRANSLATION_SIZE)
        for k, exemplar in enumerate(exemplars):
            novel = random_dots(TRANSLATION_SIZE, TRANSLATION_SIZE, TRANSLATION_DENSITY, 3000 + k)
            expected = translate_wrap(novel, exemplar.label.dx, exemplar.label.dy)
            scores.append(pixel_agreement(analogy_reconstruct(model, exemplar, novel), expected))
            blank_scores.append(pixel_agreement(blank, expected))
        assert np.mean(scores) >= 0.9
        # An empty frame already agrees on the off-pixels
        assert np.mean(scores) >= np.mean(blank_scores) + 0.02

    def test_segmentation(self, translation_report):
        model = translation_report.model
        scores = []
        for scene in background_dominant_scenes(SCENES):
            flow = local_flow_field(model, scene.pair)
            gm = classify_global_motion(flow)
            if gm.kind is MotionKind.UNKNOWN:
                scores.append(0.0)
                continue
            scores.append(scene_iou(segment_foreground(flow, gm), scene, flow))
        assert np.mean(scores) >= 0.5

    def test_ideal_flow_segments_exactly(self):
        for scene in background_dominant_scenes(SCENES):
            inside = scene.truth_mask.reshape(-1)
            flow = FlowField.from_displacements(
                TRANSLATION_SIZE,
                TRANSLATION_SIZE,
                np.where(inside, -1, 1),
                np.zeros(inside.size, dtype=np.int64),
                scene.pair.x.pixels >= 0.5,
            )
            gm = classify_global_motion(flow)
            mask = segment_foreground(flow, gm, smooth=False)
            assert scene_iou(mask, scene, flow) == 1.0

    def test_hidden_activity_tracks_target(self):
        cfg = translation_config(sparsity_rate=0.1)
        report = train(translation_pairs(), cfg)
        assert 0.5 * cfg.target_hidden <= report.mean_hidden[-1] <= 3.0 * cfg.target_hidden

    def test_reproducible(self, translation_report):
        again = train(translation_pairs(), TRANSLATION_CONFIG)
        assert model_to_bytes(again.model) == model_to_bytes(translation_report.model)


class TestRotation:
    def test_estimates_right_angles(self, rotation_report):
        model = rotation_report.model
        rng = np.random.default_rng(4004)
        hits = []
        for k in range(100):
            theta = float(rng.choice([0, 90, 180, 270]))
            x = random_dots(ROTATION_SIZE, ROTATION_SIZE, ROTATION_DENSITY, 5000 + k)
            label = TransformLabel.rotation(theta)
            flow = max_flow_field(model, ImagePair(x, label.apply(x), label))
            if not flow.active.any():
                hits.append(False)
                continue
            estimate, _ = estimate_rotation(flow)
            hits.append(angle_distance(estimate, theta) <= 15.0)
        assert np.mean(hits) >= 0.7

    def test_reproducible(self, rotation_report):
        again = train(rotation_pairs(), ROTATION_CONFIG)
        assert model_to_bytes(again.model) == model_to_bytes(rotation_report.model)


@pytest.mark.integration
def test_full_scale_translation_run(tmp_path):
    out = tmp_path / "full"
    config = CONFIGS / "full_translation.json"
    assert dispatch(["train", "--config", str(config), "--out", str(out)]) == 0

    lines = (out / "history.csv").read_text().splitlines()[1:]
    errors = np.array([float(line.split(",")[1]) for line in lines])
    assert errors.size == 500

    # Non-overlapping 5-epoch means over the first 100 epochs trend downward
    block_means = errors[:100].reshape(20, 5).mean(axis=1)
    assert block_means[-1] < block_means[0]
    assert np.all(np.diff(block_means) <= 0.01 * block_means[:-1])
