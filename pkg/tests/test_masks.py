import numpy as np
import pytest

from mgpf.data_model import ObjectMask
from mgpf.errors import MissingMask, MissingPyramidLevel, NonIntegerFactor, ShapeMismatch
from mgpf.processing.masks import build_mask_set, reshape_mask, union_masks


def test_union_of_disjoint_masks():
    first, second = np.zeros((4, 4), dtype=np.uint8), np.zeros((4, 4), dtype=np.uint8)
    first[0:2] = 1
    second[2:4] = 1

    assert union_masks([ObjectMask("circle", first), ObjectMask("square", second)]).all()


def test_union_identity_and_idempotence():
    mask = np.zeros((4, 4), dtype=np.uint8)
    mask[1, 2] = 1

    np.testing.assert_array_equal(union_masks([ObjectMask("circle", mask)]), mask)
    np.testing.assert_array_equal(union_masks([ObjectMask("circle", mask), ObjectMask("star", mask)]), mask)


def test_union_of_nothing():
    assert union_masks([], shape=(8, 8)).shape == (8, 8)
    assert not union_masks([], shape=(8, 8)).any()


def test_union_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        union_masks([ObjectMask("circle", np.ones((4, 4))), ObjectMask("square", np.ones((8, 8)))])


def test_reshape_mask():
    assert reshape_mask(np.ones((64, 64)), 8).all()

    single = np.zeros((64, 64), dtype=np.uint8)
    single[3, 5] = 1
    reshaped = reshape_mask(single, 8)
    assert reshaped[0, 0] == 1 and reshaped.sum() == 1

    checkerboard = np.indices((4, 4)).sum(axis=0) % 2
    assert reshape_mask(checkerboard, 2).all()


def test_reshape_monotonicity():
    rng = np.random.default_rng(0)
    for _ in range(20):
        small = rng.random((16, 16)) > 0.8
        large = small | (rng.random((16, 16)) > 0.5)
        for resolution in (8, 4, 2, 1):
            assert np.all(reshape_mask(small, resolution) <= reshape_mask(large, resolution))


def test_reshape_non_integer_factor():
    with pytest.raises(NonIntegerFactor):
        reshape_mask(np.ones((8, 8)), 3)


def test_mask_set(toy_masks):
    mask_set = build_mask_set(toy_masks, [8, 4, 2])

    assert mask_set.names == ["circle", "square"]
    np.testing.assert_array_equal(mask_set.union_mask, toy_masks[0].grid | toy_masks[1].grid)
    np.testing.assert_array_equal(mask_set.pyramid_level(4), reshape_mask(mask_set.union_mask, 4))
    assert mask_set.resampled("circle", (4, 4)).shape == (4, 4)

    with pytest.raises(MissingMask):
        mask_set.mask_for("star")
    with pytest.raises(MissingPyramidLevel):
        mask_set.pyramid_level(1)
    with pytest.raises(ValueError):
        mask_set.union_mask[0, 0] = 1


def test_empty_mask_set():
    mask_set = build_mask_set([], [8, 4], shape=(8, 8))

    assert mask_set.is_empty
    assert not mask_set.pyramid_level(4).any()
