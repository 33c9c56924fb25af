import numpy as np
import pytest

from mgpf.errors import ConfigInvalid
from mgpf.processing.conditions import ConditionContext, ConditionStrategies, make_condition

BACKGROUND = (0.80, 0.74, 0.60)


def _image_with_square(size: int = 16) -> np.ndarray:
    image = np.empty((size, size, 3))
    image[:] = BACKGROUND
    image[4:12, 4:12] = (0.1, 0.3, 0.9)
    return image


def test_constant_image_has_no_edges():
    image = np.empty((16, 16, 3))
    image[:] = BACKGROUND

    condition = make_condition(image, "edge")

    assert condition.grid.shape == (1, 16, 16)
    assert not condition.grid.any()


def test_square_edges_lie_on_its_boundary_band():
    edges = make_condition(_image_with_square(), "edge").grid[0]

    assert edges.any()
    assert not edges[6:10, 6:10].any()
    assert not edges[:2].any() and not edges[14:].any()
    assert edges[3, 6] and edges[4, 6] and edges[11, 6] and edges[12, 6]


def test_silhouette_gray_levels():
    image = _image_with_square()
    image[1:3, 1:3] = (0.9, 0.1, 0.1)
    label_map = np.zeros((16, 16), dtype=np.int64)
    label_map[4:12, 4:12] = 1
    label_map[1:3, 1:3] = 2

    with_labels = make_condition(image, "silhouette", label_map=label_map)
    from_colors = make_condition(image, "silhouette")

    assert len(np.unique(with_labels.grid)) == 3
    assert len(np.unique(from_colors.grid)) == 3
    assert with_labels.kind == "silhouette"


def test_condition_kinds():
    assert ConditionStrategies.get_available_kinds() == ["edge", "silhouette"]
    assert ConditionContext("silhouette").condition_strategy.name == "silhouette"

    with pytest.raises(ConfigInvalid):
        ConditionContext("depth")
