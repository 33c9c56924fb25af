"""
    @file:              oracles.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the local evaluation oracles of the benchmark. The attribute oracle matches
                        the mean color inside each (eroded) object mask against the palette. The object oracle segments
                        the image outside the object masks into blobs and names their shapes with the shape classifier.
"""

import logging
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import SimpleITK as sitk

from mgpf.benchmark.scenes import Palette
from mgpf.config import OracleConfig
from mgpf.errors import ClassifierUnavailable, EmptyMaskRegion, ShapeMismatch
from mgpf.models.shape_classifier import ShapeClassifier
from mgpf.processing.masks import MaskSet
from mgpf.processing.transforms import BinaryErosion, Resize

_logger = logging.getLogger(__name__)

_CROP_MARGIN = 2


class CaseScores(NamedTuple):
    attribute_match: float
    object_generation: float


def _check_image(image: np.ndarray, shape: Tuple[int, int]) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[:2] != tuple(shape):
        raise ShapeMismatch(f"Image of shape {image.shape} does not match the masks of shape {tuple(shape)}.",
                            image_shape=list(image.shape), mask_shape=list(shape))

    return image


def eval_attribute_match(
        image: np.ndarray,
        expected_pairs: Sequence[Tuple[str, str]],
        mask_set: MaskSet,
        palette: Optional[Palette] = None,
        erosion_radius: int = 2
) -> float:
    """
    Fraction of (color, object) pairs whose object region has the expected color.

    Parameters
    ----------
    image : np.ndarray
        H x W x 3 image in [0, 1].
    expected_pairs : Sequence[Tuple[str, str]]
        Expected (color, object) pairs.
    mask_set : MaskSet
        Object masks, one per evaluated object.
    palette : Optional[Palette]
        Color palette.
    erosion_radius : int, default = 2.
        Erosion radius applied to the masks before averaging. A mask erased by the erosion is used as is.

    Returns
    -------
    score : float
        Score in [0, 1].
    """
    if not expected_pairs:
        return 1.0

    palette = Palette() if palette is None else palette
    erosion = BinaryErosion(erosion_radius)

    matches = 0
    for color, object_name in expected_pairs:
        grid = mask_set.mask_for(object_name).grid
        image = _check_image(image, grid.shape)
        mask = grid > 0
        if not mask.any():
            raise EmptyMaskRegion(f"The mask of {object_name} is empty.", object=object_name)

        region = erosion(mask.astype(np.uint8)) > 0
        if not region.any():
            region = mask

        predicted = palette.nearest(image[region].mean(axis=0))
        _logger.debug(f"Attribute oracle : {object_name} expected {color}, found {predicted}.")
        matches += int(predicted == color)

    return matches / len(expected_pairs)


def extract_blobs(
        image: np.ndarray,
        excluded: Optional[np.ndarray],
        palette: Palette,
        config: OracleConfig
) -> List[np.ndarray]:
    """
    Candidate object blobs : pixels far enough from the background color, outside the excluded region, grouped in
    8-connected components of at least min_blob_size pixels, largest first.

    Parameters
    ----------
    image : np.ndarray
        H x W x 3 image in [0, 1].
    excluded : Optional[np.ndarray]
        H x W binary region to ignore (the union of the object masks).
    palette : Palette
        Color palette, providing the background color.
    config : OracleConfig
        Oracle configuration.

    Returns
    -------
    blobs : List[np.ndarray]
        Boolean H x W masks.
    """
    foreground = palette.background_distance(image) > config.background_threshold
    if excluded is not None:
        foreground &= ~(np.asarray(excluded) > 0)

    components = sitk.ConnectedComponent(sitk.GetImageFromArray(foreground.astype(np.uint8)), True)
    relabeled = sitk.RelabelComponent(components, config.min_blob_size)
    labels = sitk.GetArrayFromImage(relabeled)

    return [labels == label for label in range(1, int(labels.max()) + 1)]


def crop_blob(blob: np.ndarray, crop_size: int) -> np.ndarray:
    """
    Square crop of a blob silhouette, centered on its bounding box and resized to crop_size.
    """
    rows, columns = np.nonzero(blob)
    top, bottom = rows.min(), rows.max() + 1
    left, right = columns.min(), columns.max() + 1
    height, width = bottom - top, right - left
    side = max(height, width) + 2 * _CROP_MARGIN

    canvas = np.zeros((side, side), dtype=np.float32)
    row, column = (side - height) // 2, (side - width) // 2
    canvas[row:row + height, column:column + width] = blob[top:bottom, left:right]

    return np.clip(Resize(crop_size)(canvas), 0.0, 1.0)


def largest_blob_crop(image: np.ndarray, palette: Palette, config: OracleConfig) -> Optional[np.ndarray]:
    blobs = extract_blobs(image, None, palette, config)

    return crop_blob(blobs[0], config.crop_size) if blobs else None


def eval_object_generation(
        image: np.ndarray,
        expected_extra: Sequence[str],
        classifier: Optional[ShapeClassifier],
        excluded: Optional[np.ndarray] = None,
        palette: Optional[Palette] = None,
        config: Optional[OracleConfig] = None
) -> float:
    """
    Fraction of expected extra objects for which some blob outside the object masks is classified as that shape with
    a confidence above the threshold.

    Parameters
    ----------
    image : np.ndarray
        H x W x 3 image in [0, 1].
    expected_extra : Sequence[str]
        Expected extra object shapes.
    classifier : Optional[ShapeClassifier]
        Trained shape classifier.
    excluded : Optional[np.ndarray]
        Union of the object masks.
    palette : Optional[Palette]
        Color palette.
    config : Optional[OracleConfig]
        Oracle configuration.

    Returns
    -------
    score : float
        Score in [0, 1].
    """
    if classifier is None:
        raise ClassifierUnavailable("The object generation oracle needs a trained shape classifier. Run "
                                    "`mgpf train classifier` first.")
    if not expected_extra:
        return 1.0

    palette = Palette() if palette is None else palette
    config = OracleConfig() if config is None else config

    blobs = extract_blobs(image, excluded, palette, config)
    crops = np.stack([crop_blob(blob, config.crop_size) for blob in blobs]) if blobs else np.zeros((0,))
    predictions = classifier.classify(crops)
    found = {shape for shape, confidence in predictions if confidence >= config.confidence_threshold}
    _logger.debug(f"Object oracle : {len(blobs)} blobs, predictions {predictions}.")

    return sum(shape in found for shape in expected_extra) / len(expected_extra)


def score_image(
        image: np.ndarray,
        expected_pairs: Sequence[Tuple[str, str]],
        expected_extra: Sequence[str],
        mask_set: MaskSet,
        classifier: Optional[ShapeClassifier],
        palette: Optional[Palette] = None,
        config: Optional[OracleConfig] = None
) -> CaseScores:
    """
    Both oracle scores of an image.
    """
    config = OracleConfig() if config is None else config
    return CaseScores(
        attribute_match=eval_attribute_match(image, expected_pairs, mask_set, palette, config.erosion_radius),
        object_generation=eval_object_generation(
            image, expected_extra, classifier, mask_set.union_mask, palette, config
        )
    )
