"""
Unit tests for synthetic data generation and dataset persistence.
"""

from collections import Counter

import numpy as np
import pytest

from flow_rbm.datagen import (
    MANIFEST_NAME,
    UNIT_SHIFTS,
    ImagePair,
    PairKind,
    TransformKind,
    TransformLabel,
    dump_dataset,
    load_dataset,
    make_pairs,
    make_pairs_from_images,
    make_scene,
    pairs_to_arrays,
    random_dots,
    rotate_nn,
    translate_wrap,
)
from flow_rbm.errors import ImageFormatError
from flow_rbm.imagecore import Image


class TestRandomDots:
    def test_seeded(self):
        assert random_dots(13, 13, 0.1, seed=5) == random_dots(13, 13, 0.1, seed=5)
        assert random_dots(13, 13, 0.1, seed=5) != random_dots(13, 13, 0.1, seed=6)

    def test_density_extremes(self):
        assert random_dots(4, 3, 0.0, seed=1).on_count() == 0
        assert random_dots(4, 3, 1.0, seed=1).on_count() == 12

    def test_binary(self):
        pixels = random_dots(13, 13, 0.3, seed=2).pixels
        assert set(np.unique(pixels)) <= {0.0, 1.0}

    def test_mean_on_fraction_tracks_density(self):
        fractions = [random_dots(13, 13, 0.1, seed).on_count() / 169 for seed in range(1000)]
        assert 0.08 <= np.mean(fractions) <= 0.12

    def test_density_out_of_range(self):
        with pytest.raises(ValueError):
            random_dots(4, 4, 1.5, seed=0)


class TestTranslateWrap:
    def test_wraps_right_edge(self):
        grid = np.zeros((3, 4))
        grid[0, 3] = 1.0
        shifted = translate_wrap(Image.from_grid(grid), 1, 0).grid()
        assert shifted[0, 0] == 1.0
        assert shifted.sum() == 1.0

    def test_positive_dy_moves_down(self):
        grid = np.zeros((3, 3))
        grid[2, 1] = 1.0
        assert translate_wrap(Image.from_grid(grid), 0, 1).grid()[0, 1] == 1.0

    def test_inverse(self):
        img = random_dots(7, 5, 0.4, seed=3)
        assert translate_wrap(translate_wrap(img, 2, -1), -2, 1) == img

    def test_preserves_on_count(self):
        for seed in range(100):
            img = random_dots(13, 13, 0.1, seed)
            dx, dy = UNIT_SHIFTS[seed % len(UNIT_SHIFTS)]
            assert translate_wrap(img, dx, dy).on_count() == img.on_count()


class TestRotateNN:
    @pytest.mark.parametrize("size", [13, 8])
    def test_quarter_turn_is_rot90(self, size):
        img = random_dots(size, size, 0.3, seed=4)
        np.testing.assert_array_equal(rotate_nn(img, 90).grid(), np.rot90(img.grid()))
        np.testing.assert_array_equal(rotate_nn(img, 180).grid(), np.rot90(img.grid(), 2))

    def test_zero_and_full_turn_are_identity(self):
        img = random_dots(13, 13, 0.3, seed=4)
        assert rotate_nn(img, 0) == img
        assert rotate_nn(img, 360) == img

    def test_corners_zero_filled(self):
        img = Image.from_grid(np.ones((13, 13)))
        rotated = rotate_nn(img, 45).grid()
        assert rotated[0, 0] == 0.0
        assert rotated[6, 6] == 1.0


class TestLabels:
    def test_zero_shift_is_identity(self):
        assert TransformLabel.translation(0, 0).kind is TransformKind.IDENTITY

    def test_theta_normalized(self):
        assert TransformLabel.rotation(-90).theta == 270.0

    def test_unknown_cannot_be_applied(self):
        with pytest.raises(ValueError):
            TransformLabel.unknown().apply(Image.zeros(2, 2))

    def test_pair_shapes_must_match(self):
        with pytest.raises(ValueError, match="frame shapes differ"):
            ImagePair(Image.zeros(2, 2), Image.zeros(3, 2), TransformLabel.identity())


class TestMakePairs:
    def test_translation_pairs(self):
        pairs = make_pairs(PairKind.TRANSLATION9, 50, 8, 0.1, seed=0)
        assert len(pairs) == 50
        for pair in pairs:
            assert pair.label.shift in UNIT_SHIFTS
            assert pair.y == translate_wrap(pair.x, *pair.label.shift)

    def test_all_nine_shifts_drawn(self):
        pairs = make_pairs("translation", 300, 5, 0.1, seed=1)
        assert {pair.label.shift for pair in pairs} == set(UNIT_SHIFTS)

    def test_nine_shifts_are_balanced(self):
        pairs = make_pairs("translation", 9000, 13, 0.1, seed=4)
        counts = Counter(pair.label.shift for pair in pairs)
        assert set(counts) == set(UNIT_SHIFTS)
        assert all(800 <= count <= 1200 for count in counts.values())

    def test_rotation_pairs(self):
        pairs = make_pairs(PairKind.ROTATION_UNIFORM, 20, 13, 0.1, seed=0)
        for pair in pairs:
            assert pair.label.kind is TransformKind.ROTATION
            assert 0.0 <= pair.label.theta < 360.0
            assert pair.y == rotate_nn(pair.x, pair.label.theta)

    def test_seeded(self):
        a = make_pairs("rotation", 10, 8, 0.2, seed=9)
        b = make_pairs("rotation", 10, 8, 0.2, seed=9)
        assert a == b
        assert a != make_pairs("rotation", 10, 8, 0.2, seed=10)

    def test_n_must_be_positive(self):
        with pytest.raises(ValueError):
            make_pairs("translation", 0, 8, 0.1, seed=0)

    def test_pairs_from_images(self):
        images = [random_dots(6, 6, 0.3, seed=s) for s in range(4)]
        pairs = make_pairs_from_images(images, "translation", seed=3)
        assert [pair.x for pair in pairs] == images
        assert all(pair.y == pair.label.apply(pair.x) for pair in pairs)

    def test_pairs_to_arrays(self):
        pairs = make_pairs("translation", 4, 3, 0.5, seed=0)
        X, Y = pairs_to_arrays(pairs)
        assert X.shape == Y.shape == (4, 9)
        np.testing.assert_array_equal(Y[2], pairs[2].y.pixels)


class TestMakeScene:
    def test_block_moves_against_background(self):
        scene = make_scene(13, 0.3, (1, 0), (4, 4, 4, 4), (-1, 0), seed=2)
        x, y = scene.pair.x.grid(), scene.pair.y.grid()
        truth = scene.truth_mask

        assert truth.sum() == 16 and truth[4:8, 4:8].all()
        assert scene.pair.label.shift == (1, 0)
        # Every background dot lands one column right, every block dot one column left
        for row, col in zip(*np.nonzero(x)):
            dest = (col - 1) % 13 if truth[row, col] else (col + 1) % 13
            assert y[row, dest] == 1.0
        assert np.count_nonzero(y) <= np.count_nonzero(x)

    def test_background_follows_its_shift_away_from_block(self):
        for seed in range(20):
            scene = make_scene(13, 0.1, (1, 0), (4, 4, 4, 4), (-1, 0), seed)
            truth = scene.truth_mask
            near = np.roll(truth, 1, axis=1) | np.roll(truth, -1, axis=1)
            expected = translate_wrap(scene.pair.x, 1, 0).grid()
            np.testing.assert_array_equal(scene.pair.y.grid()[~near], expected[~near])

    def test_zero_area_block_is_all_background(self):
        scene = make_scene(8, 0.3, (1, 0), (3, 3, 0, 4), (-1, 0), seed=1)
        assert not scene.truth_mask.any()
        assert scene.pair.y == translate_wrap(scene.pair.x, 1, 0)

    def test_equal_shifts_rejected(self):
        with pytest.raises(ValueError):
            make_scene(8, 0.1, (1, 0), (2, 2, 4, 4), (1, 0), seed=0)

    def test_rect_outside_frame_rejected(self):
        with pytest.raises(ValueError):
            make_scene(8, 0.1, (1, 0), (6, 6, 4, 4), (-1, 0), seed=0)


class TestDatasetPersistence:
    def test_round_trip(self, tmp_path):
        pairs = make_pairs("translation", 6, 5, 0.3, seed=1)
        pairs += make_pairs("rotation", 4, 5, 0.3, seed=2)
        dump_dataset(pairs, tmp_path / "data")

        assert (tmp_path / "data" / "x_00009.pgm").exists()
        assert load_dataset(tmp_path / "data") == pairs

    def test_manifest_header(self, tmp_path):
        dump_dataset(make_pairs("translation", 1, 3, 0.3, seed=1), tmp_path)
        lines = (tmp_path / MANIFEST_NAME).read_text().splitlines()
        assert lines[0] == "# index kind dx dy theta"
        assert len(lines) == 2

    def test_bad_manifest(self, tmp_path):
        dump_dataset(make_pairs("translation", 1, 3, 0.3, seed=1), tmp_path)
        (tmp_path / MANIFEST_NAME).write_text("# index kind dx dy theta\n0 sideways 1 0 0.0\n")
        with pytest.raises(ImageFormatError) as info:
            load_dataset(tmp_path)
        assert info.value.field == "manifest"
