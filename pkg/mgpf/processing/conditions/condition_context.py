"""
    @file:              condition_context.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the class ConditionContext that is used as a context class where strategies
                        are kinds of visual control images, or more precisely, types of condition factory.
"""

import logging
from typing import Optional

import numpy as np

from mgpf.data_model import ConditionImage
from mgpf.errors import ConfigInvalid
from mgpf.processing.conditions.condition_strategy import ConditionStrategies, ConditionStrategy

_logger = logging.getLogger(__name__)


class ConditionContext:
    """
    A class used as a context class where strategies are kinds of visual control images, or more precisely, types of
    condition factory. Strategies are entirely defined by the requested kind.
    """

    def __init__(self, kind: str):
        """
        Constructor of the ConditionContext class.

        Parameters
        ----------
        kind : str
            Condition kind.
        """
        self.kind = kind

    @property
    def kind(self) -> str:
        return self._kind

    @kind.setter
    def kind(self, kind: str) -> None:
        available_kinds = ConditionStrategies.get_available_kinds()
        if kind not in available_kinds:
            raise ConfigInvalid(f"Condition kind {kind} is not available. Available kinds are {available_kinds}.",
                                key="benchmark.condition_kind")

        self._kind = kind

    @property
    def condition_strategy(self) -> ConditionStrategy:
        """
        Condition strategy corresponding to the given kind.

        Returns
        -------
        condition_strategy : ConditionStrategy
            Condition strategy.
        """
        for condition_category in list(ConditionStrategies):
            if self.kind == condition_category.value.kind:
                return condition_category.value

    def create_condition(self, image: np.ndarray, label_map: Optional[np.ndarray] = None) -> ConditionImage:
        """
        Creates a ConditionImage.

        Parameters
        ----------
        image : np.ndarray
            Rendered image, H x W x 3 with values in [0, 1].
        label_map : Optional[np.ndarray]
            H x W object labels (0 = background).

        Returns
        -------
        condition : ConditionImage
            Visual control image.
        """
        _logger.debug(f"Creating {self.kind} condition with factory {self.condition_strategy.factory.__name__}.")
        factory = self.condition_strategy.factory(image=image, label_map=label_map)

        return factory.create_condition()


def make_condition(image: np.ndarray, kind: str, label_map: Optional[np.ndarray] = None) -> ConditionImage:
    return ConditionContext(kind).create_condition(image, label_map=label_map)
