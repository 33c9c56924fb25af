"""
    @file:              shapes.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the rasterizers of the benchmark shapes. Every shape is defined in unit
                        coordinates (u to the right, v downwards, extent [-1, 1]) and scaled by its size in pixels.
"""

from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np


def _regular_polygon(sides: int, radius: float = 1.0, rotation: float = -np.pi / 2) -> List[Tuple[float, float]]:
    angles = rotation + 2 * np.pi * np.arange(sides) / sides
    return [(radius * np.cos(angle), radius * np.sin(angle)) for angle in angles]


def _star_polygon(points: int = 5, inner_radius: float = 0.45) -> List[Tuple[float, float]]:
    vertices = []
    for index in range(2 * points):
        radius = 1.0 if index % 2 == 0 else inner_radius
        angle = -np.pi / 2 + np.pi * index / points
        vertices.append((radius * np.cos(angle), radius * np.sin(angle)))
    return vertices


def inside_polygon(u: np.ndarray, v: np.ndarray, vertices: Sequence[Tuple[float, float]]) -> np.ndarray:
    """
    Even-odd rule : a point is inside when a ray cast to the left crosses an odd number of edges.
    """
    inside = np.zeros(u.shape, dtype=bool)
    count = len(vertices)
    with np.errstate(divide="ignore", invalid="ignore"):
        for index in range(count):
            x1, y1 = vertices[index]
            x2, y2 = vertices[(index + 1) % count]
            crosses = (y1 > v) != (y2 > v)
            x_cross = x1 + (v - y1) * (x2 - x1) / (y2 - y1)
            inside ^= crosses & (u < x_cross)

    return inside


# Every shape fits in a disk of this radius around its center.
BOUNDING_RADIUS = 1.25

_TRIANGLE = [(0.0, -1.0), (0.95, 0.75), (-0.95, 0.75)]
_ARROW = [(-1.0, -0.3), (0.2, -0.3), (0.2, -0.75), (1.0, 0.0), (0.2, 0.75), (0.2, 0.3), (-1.0, 0.3)]
_STAR = _star_polygon()
_HEXAGON = _regular_polygon(6, rotation=0.0)
_PENTAGON = _regular_polygon(5)


def _heart(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    x, y = 1.15 * u, -1.15 * v + 0.1
    return (x ** 2 + y ** 2 - 1) ** 3 - x ** 2 * y ** 3 <= 0


SHAPE_FUNCTIONS: Dict[str, Callable[[np.ndarray, np.ndarray], np.ndarray]] = {
    "circle": lambda u, v: u ** 2 + v ** 2 <= 1.0,
    "square": lambda u, v: (np.abs(u) <= 0.8) & (np.abs(v) <= 0.8),
    "triangle": lambda u, v: inside_polygon(u, v, _TRIANGLE),
    "star": lambda u, v: inside_polygon(u, v, _STAR),
    "cross": lambda u, v: ((np.abs(u) <= 0.3) & (np.abs(v) <= 0.95)) | ((np.abs(v) <= 0.3) & (np.abs(u) <= 0.95)),
    "diamond": lambda u, v: np.abs(u) + np.abs(v) <= 1.0,
    "hexagon": lambda u, v: inside_polygon(u, v, _HEXAGON),
    "heart": _heart,
    "ring": lambda u, v: (u ** 2 + v ** 2 <= 1.0) & (u ** 2 + v ** 2 >= 0.55 ** 2),
    "pentagon": lambda u, v: inside_polygon(u, v, _PENTAGON),
    "arrow": lambda u, v: inside_polygon(u, v, _ARROW),
    "moon": lambda u, v: (u ** 2 + v ** 2 <= 1.0) & ((u - 0.55) ** 2 + (v + 0.1) ** 2 > 0.85 ** 2)
}


def available_shapes() -> List[str]:
    return list(SHAPE_FUNCTIONS)


def rasterize(shape: str, center: Tuple[float, float], size: float, image_shape: Tuple[int, int]) -> np.ndarray:
    """
    Binary raster of a shape, sampled at pixel centers.

    Parameters
    ----------
    shape : str
        Shape name.
    center : Tuple[float, float]
        (row, column) center in pixels.
    size : float
        Half extent in pixels.
    image_shape : Tuple[int, int]
        (rows, columns) of the raster.

    Returns
    -------
    raster : np.ndarray
        Boolean array.
    """
    if shape not in SHAPE_FUNCTIONS:
        raise ValueError(f"Unknown shape {shape}. Available shapes are {available_shapes()}.")

    rows, columns = np.mgrid[0:image_shape[0], 0:image_shape[1]].astype(np.float64) + 0.5
    u = (columns - center[1]) / size
    v = (rows - center[0]) / size

    return SHAPE_FUNCTIONS[shape](u, v)
