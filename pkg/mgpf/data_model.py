"""
    @file:              data_model.py
    @Author:            Maxence Larose

    @Creation Date:     10/2021
    @Last modification: 10/2026

    @Description:       This file contains several data classes and named tuples that are used to standardize the
                        structure of objects containing data (prompts, masks, conditions, scenes and benchmark cases).
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Tuple

import numpy as np


class AttributeObjectPair(NamedTuple):
    """
    An attribute-object pair of a prompt. Indexes are token positions in the parsed prompt.
    """
    attribute_index: int
    object_index: int
    attribute: str
    object_name: str


@dataclass
class ParsedPrompt:
    """
    A data class grouping the tokens of a prompt and its attribute-object pairs, split by alignment with the masks that
    accompany the prompt.

    Elements
    --------
    prompt : str
        The original prompt.
    words : List[str]
        Tokenized words, commas included.
    tokens : List[int]
        Vocabulary token ids, one per word.
    pairs : List[AttributeObjectPair]
        Attribute-object pairs in left-to-right order.
    s1 : List[AttributeObjectPair]
        Pairs whose object has a mask (aligned with the visual control).
    s2 : List[AttributeObjectPair]
        Remaining pairs (misaligned with the visual control).
    free_objects : List[int]
        Positions of trailing-clause objects without attribute.
    locations : List[int]
        Positions of location words.
    """
    prompt: str
    words: List[str]
    tokens: List[int]
    pairs: List[AttributeObjectPair]
    s1: List[AttributeObjectPair]
    s2: List[AttributeObjectPair]
    free_objects: List[int] = field(default_factory=list)
    locations: List[int] = field(default_factory=list)

    @property
    def object_names(self) -> List[str]:
        """
        Names of every object of the prompt, paired or not, in left-to-right order.
        """
        positions = sorted([pair.object_index for pair in self.pairs] + list(self.free_objects))

        return [self.words[position] for position in positions]

    @property
    def extra_objects(self) -> List[str]:
        """
        Names of the objects described by the prompt but absent from the masks.
        """
        aligned = {pair.object_name for pair in self.s1}

        return [name for name in self.object_names if name not in aligned]


@dataclass(frozen=True)
class ObjectMask:
    """
    A named binary object mask.

    Elements
    --------
    name : str
        Object word.
    grid : np.ndarray
        H x W binary array (1 = object pixel).
    """
    name: str
    grid: np.ndarray


@dataclass
class ConditionImage:
    """
    A visual control image.

    Elements
    --------
    grid : np.ndarray
        C x H x W array with values in [0, 1].
    kind : str
        Condition kind (ex: edge, silhouette).
    """
    grid: np.ndarray
    kind: str


class PlacedObject(NamedTuple):
    shape: str
    color: str
    center: Tuple[float, float]
    size: float


@dataclass
class SceneSpec:
    """
    A data class describing a benchmark scene.

    Elements
    --------
    objects : List[PlacedObject]
        Objects rendered in the ground-truth image.
    background : str
        Background color name.
    distractors : List[PlacedObject]
        Objects present in the condition image but absent from the prompt.
    extras : List[PlacedObject]
        Trailing-clause objects present in the prompt but absent from the condition image.
    """
    objects: List[PlacedObject]
    background: str = "background"
    distractors: List[PlacedObject] = field(default_factory=list)
    extras: List[PlacedObject] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "objects": [obj._asdict() for obj in self.objects],
            "background": self.background,
            "distractors": [obj._asdict() for obj in self.distractors],
            "extras": [obj._asdict() for obj in self.extras]
        }


@dataclass
class RenderedScene:
    """
    A rendered scene. The label map holds 0 for the background and k for the k-th rendered object.
    """
    image: np.ndarray
    label_map: np.ndarray


@dataclass
class BenchmarkCase:
    """
    A data class grouping every piece of a benchmark case, loaded from the manifest.

    Elements
    --------
    case_id : str
        Case identifier.
    split : str
        Dataset split (train or eval).
    image : np.ndarray
        Ground-truth render, H x W x 3 in [0, 1].
    condition : ConditionImage
        Visual control.
    masks : List[ObjectMask]
        Masks of the prompt-aligned objects.
    prompt : str
        Prompt text.
    parsed_prompt : ParsedPrompt
        Parsed prompt, split with the names of the masks.
    expected_pairs : List[Tuple[str, str]]
        Expected (color, object) pairs.
    expected_extra : List[str]
        Expected extra objects, described by the prompt but absent from the condition.
    """
    case_id: str
    split: str
    image: np.ndarray
    condition: ConditionImage
    masks: List[ObjectMask]
    prompt: str
    parsed_prompt: ParsedPrompt
    expected_pairs: List[Tuple[str, str]]
    expected_extra: List[str]
    scene: Optional[Dict[str, Any]] = None


@dataclass
class LatentState:
    """
    The evolving sample array and its inference timestep.
    """
    z: Any
    t: int
