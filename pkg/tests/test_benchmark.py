import filecmp
import os

import numpy as np
import pytest

from mgpf.benchmark import Palette, available_shapes, generate_dataset, place_objects, rasterize, render_scene
from mgpf.benchmark.generator import EVAL, TRAIN, case_rng, draft_evaluation_case, draft_training_case
from mgpf.config import BenchmarkConfig
from mgpf.data_generators import BenchmarkCasesGenerator
from mgpf.data_model import PlacedObject
from mgpf.data_readers.manifest_reader import read_manifest
from mgpf.errors import ConfigInvalid, PlacementFailure


@pytest.fixture
def palette():
    return Palette()


class TestShapes:

    @pytest.mark.parametrize("shape", available_shapes())
    def test_every_shape_is_drawn_around_its_center(self, shape):
        raster = rasterize(shape, (32.0, 32.0), 10.0, (64, 64))

        assert raster.dtype == bool
        assert 40 < raster.sum() < 400
        rows, columns = np.nonzero(raster)
        assert rows.min() > 18 and rows.max() < 46
        assert columns.min() > 18 and columns.max() < 46

    def test_vocabulary_objects_are_drawable(self, vocabulary):
        assert set(vocabulary.objects) <= set(available_shapes())

    def test_circle_area(self):
        raster = rasterize("circle", (50.0, 50.0), 20.0, (100, 100))

        assert raster.sum() == pytest.approx(np.pi * 20 ** 2, rel=0.02)

    def test_unknown_shape(self):
        with pytest.raises(ValueError):
            rasterize("blob", (8.0, 8.0), 4.0, (16, 16))


class TestScenes:

    def test_palette(self, palette, vocabulary):
        assert set(vocabulary.colors) == set(palette.names)
        for name in palette.names:
            assert palette.nearest(palette.rgb(name)) == name
            assert float(palette.background_distance(palette.rgb(name)[None, None])[0, 0]) > 0.17

    def test_placed_objects_keep_apart(self):
        config = BenchmarkConfig()
        rng = np.random.default_rng(0)
        objects = place_objects(rng, [("circle", "red"), ("square", "blue"), ("star", "green")], config)

        assert len(objects) == 3
        for index, first in enumerate(objects):
            for second in objects[index + 1:]:
                distance = np.hypot(first.center[0] - second.center[0], first.center[1] - second.center[1])
                assert distance >= first.size + second.size + config.min_gap

    def test_placement_failure(self):
        config = BenchmarkConfig(image_size=24, min_size=8.0, max_size=8.0, max_placement_attempts=10)

        with pytest.raises(PlacementFailure):
            place_objects(np.random.default_rng(0), [("circle", "red"), ("square", "blue")], config)

    def test_render_scene(self, palette):
        objects = [PlacedObject("circle", "red", (16.0, 16.0), 6.0),
                   PlacedObject("square", "blue", (44.0, 44.0), 8.0)]

        scene = render_scene(objects, 64, palette)

        assert scene.image.shape == (64, 64, 3)
        assert set(np.unique(scene.label_map)) == {0, 1, 2}
        assert np.allclose(scene.image[16, 16], palette.rgb("red"))
        assert np.allclose(scene.image[44, 44], palette.rgb("blue"))
        assert np.allclose(scene.image[0, 0], palette.background)


class TestCaseDrafts:

    @pytest.mark.parametrize("index", range(10))
    def test_evaluation_masks_never_cover_the_distractor(self, index, vocabulary, palette):
        config = BenchmarkConfig()
        draft = draft_evaluation_case(case_rng(0, EVAL, index), config, vocabulary, palette)
        distractor = draft.scene.distractors[0]
        extra = draft.scene.extras[0]
        distractor_raster = rasterize(distractor.shape, distractor.center, distractor.size, (64, 64))

        assert len(draft.masks) == 2
        for mask in draft.masks:
            assert not np.any(mask.grid[distractor_raster])
        assert distractor.center == extra.center and distractor.shape != extra.shape
        assert draft.expected_extra == [extra.shape]
        assert extra.shape in draft.prompt.split()
        assert {shape for _, shape in draft.expected_pairs} == {mask.name for mask in draft.masks}

    @pytest.mark.parametrize("index", range(10))
    def test_training_cases_are_aligned(self, index, vocabulary, palette):
        draft = draft_training_case(case_rng(0, TRAIN, index), BenchmarkConfig(), vocabulary, palette)

        assert draft.expected_extra == []
        assert draft.scene.distractors == []
        for color, shape in draft.expected_pairs:
            mask = next(mask for mask in draft.masks if mask.name == shape)
            assert np.allclose(draft.image[mask.grid > 0], palette.rgb(color))

    def test_case_streams_are_independent_of_the_count(self, vocabulary, palette):
        first = draft_evaluation_case(case_rng(4, EVAL, 3), BenchmarkConfig(), vocabulary, palette)
        second = draft_evaluation_case(case_rng(4, EVAL, 3), BenchmarkConfig(), vocabulary, palette)

        assert first.prompt == second.prompt
        assert np.array_equal(first.image, second.image)


class TestGenerateDataset:

    def test_generation_is_deterministic(self, tmp_path):
        first = generate_dataset(str(tmp_path / "first"), seed=1, count=4, split=EVAL)
        second = generate_dataset(str(tmp_path / "second"), seed=1, count=4, split=EVAL)

        first_root, second_root = os.path.dirname(first), os.path.dirname(second)
        for directory, _, files in os.walk(first_root):
            relative = os.path.relpath(directory, first_root)
            for name in files:
                assert filecmp.cmp(os.path.join(directory, name), os.path.join(second_root, relative, name),
                                   shallow=False)

    def test_manifest_is_complete_and_loadable(self, tmp_path):
        path_to_manifest = generate_dataset(str(tmp_path), seed=2, count=3, split=EVAL)

        records = read_manifest(path_to_manifest)
        assert [record["id"] for record in records] == ["eval_00000", "eval_00001", "eval_00002"]
        for record in records:
            assert {"id", "split", "image", "condition", "condition_kind", "masks", "prompt", "expected_pairs",
                    "expected_extra", "scene"} <= set(record)

        generator = BenchmarkCasesGenerator(path_to_manifest)
        cases = list(generator)
        assert len(cases) == 3
        assert generator.cases_who_failed == []
        for case in cases:
            assert case.image.shape == (64, 64, 3)
            assert case.condition.grid.shape == (1, 64, 64)
            assert [pair.object_name for pair in case.parsed_prompt.s1] == [shape for _, shape in case.expected_pairs]
            assert case.expected_extra[0] in case.parsed_prompt.object_names

    def test_unreadable_cases_are_skipped(self, tmp_path):
        path_to_manifest = generate_dataset(str(tmp_path), seed=2, count=2, split=TRAIN)
        os.remove(os.path.join(str(tmp_path), TRAIN, "train_00000", "image.png"))

        generator = BenchmarkCasesGenerator(path_to_manifest)
        cases = list(generator)

        assert [case.case_id for case in cases] == ["train_00001"]
        assert [failure.id for failure in generator.cases_who_failed] == ["train_00000"]

    def test_case_selection(self, tmp_path):
        path_to_manifest = generate_dataset(str(tmp_path), seed=2, count=3, split=TRAIN)

        assert len(BenchmarkCasesGenerator(path_to_manifest, limit=2)) == 2
        assert len(BenchmarkCasesGenerator(path_to_manifest, case_ids=["train_00002"])) == 1

    def test_invalid_requests(self, tmp_path):
        with pytest.raises(ConfigInvalid):
            generate_dataset(str(tmp_path), seed=0, count=0, split=EVAL)
        with pytest.raises(ConfigInvalid):
            generate_dataset(str(tmp_path), seed=0, count=1, split="test")
