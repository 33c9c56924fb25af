"""
    @file:              scenes.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the color palette of the benchmark, the placement of non-overlapping
                        objects and the rendering of scenes into an image and a label map.
"""

import logging
from typing import Dict, List, Sequence, Tuple

import numpy as np

from mgpf.config import BenchmarkConfig
from mgpf.data_model import PlacedObject, RenderedScene
from mgpf.errors import PlacementFailure
from mgpf.benchmark.shapes import BOUNDING_RADIUS, rasterize

_logger = logging.getLogger(__name__)

RGB = Tuple[float, float, float]

DEFAULT_COLORS: Dict[str, RGB] = {
    "red": (0.90, 0.10, 0.10),
    "orange": (1.00, 0.55, 0.00),
    "yellow": (0.98, 0.90, 0.10),
    "green": (0.10, 0.65, 0.20),
    "blue": (0.10, 0.30, 0.90),
    "purple": (0.55, 0.15, 0.70),
    "pink": (1.00, 0.50, 0.75),
    "brown": (0.50, 0.28, 0.10),
    "black": (0.05, 0.05, 0.05),
    "white": (1.00, 1.00, 1.00),
    "gray": (0.50, 0.50, 0.50)
}

BACKGROUND: RGB = (0.80, 0.74, 0.60)


class Palette:
    """
    Named colors of the benchmark and the background color.
    """

    def __init__(self, colors: Dict[str, RGB] = None, background: RGB = BACKGROUND):
        self.colors = dict(DEFAULT_COLORS if colors is None else colors)
        self.background = np.asarray(background, dtype=np.float64)
        self._names = list(self.colors)
        self._values = np.asarray([self.colors[name] for name in self._names], dtype=np.float64)

    @property
    def names(self) -> List[str]:
        return list(self._names)

    def rgb(self, name: str) -> np.ndarray:
        if name not in self.colors:
            raise ValueError(f"Unknown color {name}. Available colors are {self._names}.")
        return np.asarray(self.colors[name], dtype=np.float64)

    def nearest(self, rgb: Sequence[float]) -> str:
        distances = np.linalg.norm(self._values - np.asarray(rgb, dtype=np.float64), axis=-1)
        return self._names[int(np.argmin(distances))]

    def background_distance(self, image: np.ndarray) -> np.ndarray:
        return np.linalg.norm(np.asarray(image, dtype=np.float64) - self.background, axis=-1)


def _iou(first: np.ndarray, second: np.ndarray) -> float:
    union = np.logical_or(first, second).sum()
    return float(np.logical_and(first, second).sum() / union) if union else 0.0


def place_objects(
        rng: np.random.Generator,
        shapes_and_colors: Sequence[Tuple[str, str]],
        config: BenchmarkConfig
) -> List[PlacedObject]:
    """
    Place objects at random centers and sizes. Bounding disks, BOUNDING_RADIUS times the size, keep at least min_gap
    pixels between them and rendered objects overlap at most by max_iou.

    Parameters
    ----------
    rng : np.random.Generator
        Random generator.
    shapes_and_colors : Sequence[Tuple[str, str]]
        (shape, color) of each object.
    config : BenchmarkConfig
        Benchmark configuration.

    Returns
    -------
    objects : List[PlacedObject]
        Placed objects.
    """
    image_shape = (config.image_size, config.image_size)
    for attempt in range(config.max_placement_attempts):
        objects, rasters, valid = [], [], True
        for shape, color in shapes_and_colors:
            size = float(rng.uniform(config.min_size, config.max_size))
            low, high = size + 1.0, config.image_size - size - 1.0
            center = (float(rng.uniform(low, high)), float(rng.uniform(low, high)))
            candidate = PlacedObject(shape=shape, color=color, center=center, size=size)
            raster = rasterize(shape, center, size, image_shape)

            for other, other_raster in zip(objects, rasters):
                distance = np.hypot(center[0] - other.center[0], center[1] - other.center[1])
                too_close = distance < BOUNDING_RADIUS * (size + other.size) + config.min_gap
                if too_close or _iou(raster, other_raster) > config.max_iou:
                    valid = False
                    break
            if not valid:
                break

            objects.append(candidate)
            rasters.append(raster)

        if valid:
            if attempt:
                _logger.debug(f"Placement succeeded after {attempt + 1} attempts.")
            return objects

    raise PlacementFailure(f"Could not place {len(shapes_and_colors)} objects in {config.max_placement_attempts} "
                           f"attempts.", objects=len(shapes_and_colors))


def render_scene(objects: Sequence[PlacedObject], image_size: int, palette: Palette) -> RenderedScene:
    """
    Paint the objects in order over the background.

    Parameters
    ----------
    objects : Sequence[PlacedObject]
        Placed objects.
    image_size : int
        Side of the image.
    palette : Palette
        Color palette.

    Returns
    -------
    scene : RenderedScene
        Image (H x W x 3 in [0, 1]) and label map (0 = background, k = k-th object).
    """
    image = np.empty((image_size, image_size, 3), dtype=np.float64)
    image[:] = palette.background
    label_map = np.zeros((image_size, image_size), dtype=np.int64)

    for label, obj in enumerate(objects, start=1):
        raster = rasterize(obj.shape, obj.center, obj.size, (image_size, image_size))
        image[raster] = palette.rgb(obj.color)
        label_map[raster] = label

    return RenderedScene(image=image, label_map=label_map)
