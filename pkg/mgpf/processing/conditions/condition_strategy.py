"""
    @file:              condition_strategy.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the class ConditionStrategies that enumerates the available kinds of visual
                        control images.
"""

import enum
from typing import Callable, List, NamedTuple

from mgpf.processing.conditions.factories import EdgeConditionFactory, SilhouetteConditionFactory


class ConditionStrategy(NamedTuple):
    name: str
    kind: str
    factory: Callable


class ConditionStrategies(enum.Enum):

    EDGE = ConditionStrategy(
        name="edge",
        kind="edge",
        factory=EdgeConditionFactory
    )

    SILHOUETTE = ConditionStrategy(
        name="silhouette",
        kind="silhouette",
        factory=SilhouetteConditionFactory
    )

    def __init__(self, *args):
        """
        Used to make sure that the condition strategies enumeration contains no strategy with the same kind.
        """
        cls = self.__class__

        for member in cls:
            if self.value.kind == member.value.kind:
                raise ValueError(f"Aliases not allowed in the ConditionStrategies Enum Class. The kind "
                                 f"{self.value.kind} assigned to the {self.name} attribute is already assigned to the "
                                 f"{member.name} attribute.")

    @classmethod
    def get_available_kinds(cls) -> List[str]:
        """
        Available condition kinds.

        Returns
        -------
        available_kinds : List[str]
            Available kinds.
        """
        return [member.value.kind for member in cls]
