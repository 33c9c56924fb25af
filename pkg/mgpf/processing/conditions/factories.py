"""
    @file:              factories.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the BaseConditionFactory abstract class and the factories that create the
                        visual control images (edge map and silhouette) from a rendered image.
"""

from abc import ABC, abstractmethod
import logging
from typing import Optional

import numpy as np

from mgpf.data_model import ConditionImage

_logger = logging.getLogger(__name__)

_LUMINANCE_WEIGHTS = np.array([0.299, 0.587, 0.114])


class BaseConditionFactory(ABC):
    """
    An abstract class used as a reference for all condition factories.
    """

    def __init__(
            self,
            image: np.ndarray,
            label_map: Optional[np.ndarray] = None
    ):
        """
        Constructor of the class BaseConditionFactory.

        Parameters
        ----------
        image : np.ndarray
            Rendered image, H x W x 3 with values in [0, 1].
        label_map : Optional[np.ndarray]
            H x W object labels (0 = background). Derived from the image colors when not given.
        """
        self._image = np.asarray(image, dtype=np.float64)
        self._label_map = label_map

    @property
    @abstractmethod
    def kind(self) -> str:
        raise NotImplementedError

    @property
    def label_map(self) -> np.ndarray:
        """
        Object labels. Without a given label map, every distinct non-background color is an object, the background
        being the most frequent color.

        Returns
        -------
        label_map : np.ndarray
            H x W integer labels.
        """
        if self._label_map is not None:
            return np.asarray(self._label_map)

        height, width, _ = self._image.shape
        colors, inverse, counts = np.unique(
            self._image.reshape(-1, 3), axis=0, return_inverse=True, return_counts=True
        )
        background = int(np.argmax(counts))
        labels = np.empty(len(colors), dtype=np.int64)
        labels[background] = 0
        labels[np.arange(len(colors)) != background] = np.arange(1, len(colors))

        return labels[inverse.reshape(-1)].reshape(height, width)

    @abstractmethod
    def create_condition(self) -> ConditionImage:
        raise NotImplementedError


class EdgeConditionFactory(BaseConditionFactory):
    """
    Edge map : threshold of the central-difference gradient magnitude of the luminance.
    """

    THRESHOLD = 1e-3

    @property
    def kind(self) -> str:
        return "edge"

    def create_condition(self) -> ConditionImage:
        luminance = self._image @ _LUMINANCE_WEIGHTS
        gradient_rows, gradient_columns = np.gradient(luminance)
        magnitude = np.hypot(gradient_rows, gradient_columns)
        edges = (magnitude > self.THRESHOLD).astype(np.float32)

        return ConditionImage(grid=edges[None], kind=self.kind)


class SilhouetteConditionFactory(BaseConditionFactory):
    """
    Silhouette : filled object regions, object k of n drawn with gray level k / n over a black background.
    """

    @property
    def kind(self) -> str:
        return "silhouette"

    def create_condition(self) -> ConditionImage:
        label_map = self.label_map
        labels = [label for label in np.unique(label_map) if label != 0]

        silhouette = np.zeros(label_map.shape, dtype=np.float32)
        for rank, label in enumerate(labels, start=1):
            silhouette[label_map == label] = rank / len(labels)

        return ConditionImage(grid=silhouette[None], kind=self.kind)
