import numpy as np
import pytest

from mgpf.benchmark import Palette, eval_attribute_match, eval_object_generation, rasterize, score_image
from mgpf.benchmark.generator import EVAL, case_rng, draft_evaluation_case
from mgpf.benchmark.oracles import crop_blob, extract_blobs
from mgpf.config import BenchmarkConfig, OracleConfig, RunConfig
from mgpf.data_model import ObjectMask
from mgpf.errors import ClassifierUnavailable, EmptyMaskRegion, ShapeMismatch
from mgpf.models.shape_classifier import ShapeClassifier
from mgpf.processing.masks import build_mask_set
from mgpf.training.trainers import train_shape_classifier


class ConstantClassifier:
    """
    Names every crop with the same shape.
    """

    def __init__(self, shape: str, confidence: float = 0.9):
        self.shape = shape
        self.confidence = confidence
        self.calls = []

    def classify(self, crops):
        self.calls.append(len(crops))
        return [(self.shape, self.confidence) for _ in range(len(crops))]


@pytest.fixture
def palette():
    return Palette()


@pytest.fixture(params=range(5))
def draft(request, vocabulary, palette):
    return draft_evaluation_case(case_rng(0, EVAL, request.param), BenchmarkConfig(), vocabulary, palette)


def _mask_set(masks):
    return build_mask_set(masks, set(), shape=(64, 64))


def _other_color(palette, color):
    return next(name for name in palette.names if name != color)


class TestAttributeMatch:

    def test_ground_truth_scores_one(self, draft, palette):
        assert eval_attribute_match(draft.image, draft.expected_pairs, _mask_set(draft.masks), palette) == 1.0

    def test_wrong_colors_score_zero(self, draft, palette):
        image = draft.image.copy()
        for color, shape in draft.expected_pairs:
            mask = next(mask for mask in draft.masks if mask.name == shape)
            image[mask.grid > 0] = palette.rgb(_other_color(palette, color))

        assert eval_attribute_match(image, draft.expected_pairs, _mask_set(draft.masks), palette) == 0.0

    def test_one_wrong_color_out_of_two(self, draft, palette):
        image = draft.image.copy()
        color, shape = draft.expected_pairs[0]
        mask = next(mask for mask in draft.masks if mask.name == shape)
        image[mask.grid > 0] = palette.rgb(_other_color(palette, color))

        assert eval_attribute_match(image, draft.expected_pairs, _mask_set(draft.masks), palette) == 0.5

    def test_no_pairs(self, palette):
        assert eval_attribute_match(np.zeros((64, 64, 3)), [], _mask_set([]), palette) == 1.0

    def test_erosion_keeps_the_mask_core(self, palette):
        grid = np.zeros((64, 64), dtype=np.uint8)
        grid[10:30, 10:30] = 1
        image = np.empty((64, 64, 3))
        image[:] = palette.background
        image[10:30, 10:30] = palette.rgb("red")
        image[10, 10:30] = palette.rgb("blue")

        assert eval_attribute_match(image, [("red", "square")], _mask_set([ObjectMask("square", grid)]), palette) == 1.0

    def test_tiny_mask_falls_back_to_the_full_region(self, palette):
        grid = np.zeros((64, 64), dtype=np.uint8)
        grid[5:7, 5:7] = 1
        image = np.zeros((64, 64, 3))
        image[5:7, 5:7] = palette.rgb("green")

        assert eval_attribute_match(image, [("green", "star")], _mask_set([ObjectMask("star", grid)]), palette) == 1.0

    def test_empty_mask(self, palette):
        mask_set = _mask_set([ObjectMask("circle", np.zeros((64, 64), dtype=np.uint8))])

        with pytest.raises(EmptyMaskRegion):
            eval_attribute_match(np.zeros((64, 64, 3)), [("red", "circle")], mask_set, palette)

    def test_image_of_another_size(self, draft, palette):
        with pytest.raises(ShapeMismatch):
            eval_attribute_match(draft.image[:32, :32], draft.expected_pairs, _mask_set(draft.masks), palette)


class TestObjectGeneration:

    def _extra_region(self, draft):
        extra = draft.scene.extras[0]
        union = _mask_set(draft.masks).union_mask > 0
        return rasterize(extra.shape, extra.center, extra.size, (64, 64)) & ~union

    def test_ground_truth_scores_one(self, draft, palette):
        classifier = ConstantClassifier(draft.expected_extra[0])
        union = _mask_set(draft.masks).union_mask

        assert eval_object_generation(draft.image, draft.expected_extra, classifier, union, palette) == 1.0
        assert classifier.calls == [1]

    def test_painted_out_extra_scores_zero(self, draft, palette):
        image = draft.image.copy()
        image[self._extra_region(draft)] = palette.background
        union = _mask_set(draft.masks).union_mask

        assert eval_object_generation(image, draft.expected_extra, ConstantClassifier(draft.expected_extra[0]),
                                      union, palette) == 0.0

    def test_wrong_or_unsure_shape_scores_zero(self, draft, palette):
        union = _mask_set(draft.masks).union_mask
        wrong = ConstantClassifier("unknown")
        unsure = ConstantClassifier(draft.expected_extra[0], confidence=0.2)

        assert eval_object_generation(draft.image, draft.expected_extra, wrong, union, palette) == 0.0
        assert eval_object_generation(draft.image, draft.expected_extra, unsure, union, palette) == 0.0

    def test_no_expected_extra(self, palette):
        assert eval_object_generation(np.zeros((64, 64, 3)), [], ConstantClassifier("star"), None, palette) == 1.0

    def test_missing_classifier(self, draft, palette):
        with pytest.raises(ClassifierUnavailable):
            eval_object_generation(draft.image, draft.expected_extra, None, None, palette)

    def test_score_image(self, draft, palette):
        scores = score_image(draft.image, draft.expected_pairs, draft.expected_extra, _mask_set(draft.masks),
                             ConstantClassifier(draft.expected_extra[0]), palette)

        assert scores.attribute_match == 1.0
        assert scores.object_generation == 1.0


class TestBlobs:

    def test_blobs_are_sorted_and_filtered(self, palette):
        image = np.empty((64, 64, 3))
        image[:] = palette.background
        image[5:10, 5:10] = palette.rgb("red")
        image[20:40, 20:40] = palette.rgb("blue")
        image[50:52, 50:52] = palette.rgb("green")

        blobs = extract_blobs(image, None, palette, OracleConfig(min_blob_size=20))

        assert [int(blob.sum()) for blob in blobs] == [400, 25]

    def test_excluded_region_is_ignored(self, palette):
        image = np.empty((64, 64, 3))
        image[:] = palette.background
        image[20:40, 20:40] = palette.rgb("blue")
        excluded = np.zeros((64, 64), dtype=np.uint8)
        excluded[20:40, 20:40] = 1

        assert extract_blobs(image, excluded, palette, OracleConfig()) == []

    def test_crop_blob(self):
        blob = np.zeros((64, 64), dtype=bool)
        blob[10:20, 30:50] = True

        crop = crop_blob(blob, 24)

        assert crop.shape == (24, 24)
        assert crop.min() >= 0.0 and crop.max() <= 1.0
        assert crop[12, 12] == pytest.approx(1.0)
        assert crop[0, 0] == pytest.approx(0.0)


def test_shape_classifier_outputs_named_confidences(vocabulary):
    classifier = ShapeClassifier(vocabulary.objects, crop_size=24, channels=[4, 8]).eval()
    crops = np.random.default_rng(0).random((3, 24, 24))

    predictions = classifier.classify(crops)

    assert len(predictions) == 3
    for shape, confidence in predictions:
        assert shape in vocabulary.objects
        assert 1 / len(vocabulary.objects) <= confidence <= 1.0
    assert classifier.classify(np.zeros((0, 24, 24))) == []


@pytest.mark.slow
def test_oracles_accept_the_ground_truth_renders(vocabulary, palette):
    config = RunConfig()
    classifier, report = train_shape_classifier(vocabulary, config, palette)

    assert report.held_out_metric >= config.oracle.min_accuracy
    assert report.trusted

    attribute_scores, object_scores = [], []
    for index in range(200):
        draft = draft_evaluation_case(case_rng(config.seed, EVAL, index), config.benchmark, vocabulary, palette)
        scores = score_image(draft.image, draft.expected_pairs, draft.expected_extra, _mask_set(draft.masks),
                             classifier, palette, config.oracle)
        attribute_scores.append(scores.attribute_match)
        object_scores.append(scores.object_generation)

    assert attribute_scores == [1.0] * 200
    assert np.mean(object_scores) >= 0.95
