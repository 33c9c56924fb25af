"""
    @file:              generator.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the procedural benchmark generator. The training split is fully aligned : the
                        condition is computed from the rendered image and the prompt describes every object. Every case
                        of the evaluation split replaces one object of the condition by a distractor shape and asks for
                        a different object at that location in a trailing clause of the prompt.
"""

from dataclasses import dataclass
import logging
import os
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from mgpf.benchmark.scenes import Palette, place_objects, render_scene
from mgpf.config import BenchmarkConfig
from mgpf.data_model import ConditionImage, ObjectMask, PlacedObject, SceneSpec
from mgpf.data_readers.image_reader import write_image
from mgpf.data_readers.manifest_reader import MANIFEST_FILENAME, write_manifest
from mgpf.data_readers.mask_reader import write_mask
from mgpf.errors import ConfigInvalid
from mgpf.grammar.prompt_parser import compose_prompt
from mgpf.grammar.vocabulary import Vocabulary
from mgpf.processing.conditions import make_condition

_logger = logging.getLogger(__name__)

TRAIN, EVAL = "train", "eval"
SPLIT_CODES = {TRAIN: 0, EVAL: 1}


@dataclass
class CaseDraft:
    """
    A generated case before it is written to disk.
    """
    scene: SceneSpec
    image: np.ndarray
    condition: ConditionImage
    masks: List[ObjectMask]
    prompt: str
    expected_pairs: List[Tuple[str, str]]
    expected_extra: List[str]


def case_rng(seed: int, split: str, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, SPLIT_CODES[split], index])


def _clause(
        rng: np.random.Generator,
        obj: PlacedObject,
        vocabulary: Vocabulary,
        config: BenchmarkConfig
) -> Tuple[Optional[str], str, str, str]:
    color = obj.color if rng.random() < config.attribute_in_clause_probability else None
    preposition = str(rng.choice(vocabulary.prepositions))
    location = str(rng.choice(vocabulary.locations))

    return color, obj.shape, preposition, location


def _main_masks(label_map: np.ndarray, objects: List[PlacedObject]) -> List[ObjectMask]:
    return [
        ObjectMask(name=obj.shape, grid=(label_map == label).astype(np.uint8))
        for label, obj in enumerate(objects, start=1)
    ]


def draft_training_case(
        rng: np.random.Generator,
        config: BenchmarkConfig,
        vocabulary: Vocabulary,
        palette: Palette
) -> CaseDraft:
    """
    Fully aligned case : one or two main objects and, optionally, a trailing-clause object. Every object is rendered
    and present in the condition.
    """
    main_count = int(rng.integers(1, 3))
    has_clause = bool(rng.random() < config.trailing_clause_probability)
    count = main_count + int(has_clause)

    shapes = rng.choice(vocabulary.objects, size=count, replace=False)
    colors = rng.choice(palette.names, size=count, replace=False)
    objects = place_objects(rng, list(zip(map(str, shapes), map(str, colors))), config)

    rendered = render_scene(objects, config.image_size, palette)
    condition = make_condition(rendered.image, config.condition_kind, label_map=rendered.label_map)

    mains = objects[:main_count]
    clause = _clause(rng, objects[main_count], vocabulary, config) if has_clause else None

    return CaseDraft(
        scene=SceneSpec(objects=list(objects), background="sand"),
        image=rendered.image,
        condition=condition,
        masks=_main_masks(rendered.label_map, mains),
        prompt=compose_prompt([(obj.color, obj.shape) for obj in mains], clause),
        expected_pairs=[(obj.color, obj.shape) for obj in mains],
        expected_extra=[]
    )


def draft_evaluation_case(
        rng: np.random.Generator,
        config: BenchmarkConfig,
        vocabulary: Vocabulary,
        palette: Palette
) -> CaseDraft:
    """
    Misaligned case : two masked main objects, a distractor shape in the condition and, at the same location in the
    ground-truth render, the extra object described by the trailing clause.
    """
    shapes = [str(shape) for shape in rng.choice(vocabulary.objects, size=4, replace=False)]
    colors = [str(color) for color in rng.choice(palette.names, size=4, replace=False)]
    main_shapes, extra_shape, distractor_shape = shapes[:2], shapes[2], shapes[3]

    mains_and_extra = place_objects(
        rng, list(zip(main_shapes + [extra_shape], colors[:3])), config
    )
    mains, extra = mains_and_extra[:2], mains_and_extra[2]
    distractor = PlacedObject(shape=distractor_shape, color=colors[3], center=extra.center, size=extra.size)

    rendered = render_scene(mains_and_extra, config.image_size, palette)
    condition_scene = render_scene(mains + [distractor], config.image_size, palette)
    condition = make_condition(condition_scene.image, config.condition_kind, label_map=condition_scene.label_map)

    return CaseDraft(
        scene=SceneSpec(objects=list(mains_and_extra), background="sand", distractors=[distractor], extras=[extra]),
        image=rendered.image,
        condition=condition,
        masks=_main_masks(rendered.label_map, mains),
        prompt=compose_prompt([(obj.color, obj.shape) for obj in mains], _clause(rng, extra, vocabulary, config)),
        expected_pairs=[(obj.color, obj.shape) for obj in mains],
        expected_extra=[extra.shape]
    )


def _write_case(draft: CaseDraft, case_id: str, split: str, kind: str, path_to_split: str) -> Dict[str, Any]:
    path_to_case = os.path.join(path_to_split, case_id)
    write_image(draft.image, os.path.join(path_to_case, "image.png"))
    write_image(draft.condition.grid[0], os.path.join(path_to_case, "condition.png"))

    path_to_masks = os.path.join(path_to_case, "masks")
    os.makedirs(path_to_masks, exist_ok=True)
    masks = {
        mask.name: os.path.relpath(write_mask(mask, path_to_masks), path_to_split)
        for mask in draft.masks
    }

    return {
        "id": case_id,
        "split": split,
        "image": os.path.relpath(os.path.join(path_to_case, "image.png"), path_to_split),
        "condition": os.path.relpath(os.path.join(path_to_case, "condition.png"), path_to_split),
        "condition_kind": kind,
        "masks": masks,
        "prompt": draft.prompt,
        "expected_pairs": [list(pair) for pair in draft.expected_pairs],
        "expected_extra": list(draft.expected_extra),
        "scene": draft.scene.to_dict()
    }


def generate_dataset(
        path_to_folder: str,
        seed: int,
        count: int,
        split: str,
        config: Optional[BenchmarkConfig] = None,
        vocabulary: Optional[Vocabulary] = None,
        palette: Optional[Palette] = None
) -> str:
    """
    Generate a benchmark split on disk. Each case draws from its own random stream seeded by (seed, split, index), so
    the files only depend on these three values and the configuration.

    Parameters
    ----------
    path_to_folder : str
        Dataset root. The split is written in <path_to_folder>/<split>.
    seed : int
        Dataset seed.
    count : int
        Number of cases.
    split : str
        Either train or eval.
    config : Optional[BenchmarkConfig]
        Benchmark configuration.
    vocabulary : Optional[Vocabulary]
        Closed vocabulary. Defaults to the packaged vocabulary.
    palette : Optional[Palette]
        Color palette. Defaults to the packaged palette.

    Returns
    -------
    path_to_manifest : str
        Path to the written manifest.
    """
    if count <= 0:
        raise ConfigInvalid(f"The number of cases must be positive, got {count}.", key="count")
    if split not in SPLIT_CODES:
        raise ConfigInvalid(f"Unknown split {split}. Available splits are {list(SPLIT_CODES)}.", key="split")

    config = BenchmarkConfig() if config is None else config
    vocabulary = Vocabulary.default() if vocabulary is None else vocabulary
    palette = Palette() if palette is None else palette
    draft_case = draft_training_case if split == TRAIN else draft_evaluation_case

    path_to_split = os.path.join(path_to_folder, split)
    os.makedirs(path_to_split, exist_ok=True)
    _logger.info(f"Generating {count} {split} cases in {path_to_split} with seed {seed}.")

    records = []
    for index in tqdm(range(count), desc=f"gen-data {split}", disable=not _logger.isEnabledFor(logging.INFO)):
        draft = draft_case(case_rng(seed, split, index), config, vocabulary, palette)
        records.append(_write_case(draft, f"{split}_{index:05d}", split, config.condition_kind, path_to_split))

        if (index + 1) % 100 == 0:
            _logger.debug(f"Progress : {index + 1}/{count} cases generated.")

    path_to_manifest = os.path.join(path_to_split, MANIFEST_FILENAME)
    write_manifest(records, path_to_manifest)
    _logger.info(f"Wrote manifest {path_to_manifest}.")

    return path_to_manifest
