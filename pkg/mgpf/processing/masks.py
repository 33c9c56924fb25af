"""
    @file:              masks.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the mask operations : the union OM of the object masks, the max-pool
                        reshaping of a mask to a block resolution and the immutable MaskSet holding the per-block
                        reshaped masks.
"""

from dataclasses import dataclass
import logging
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from mgpf.data_model import ObjectMask
from mgpf.errors import MissingMask, MissingPyramidLevel, NonIntegerFactor, ShapeMismatch

_logger = logging.getLogger(__name__)

Resolution = Union[int, Tuple[int, int]]

DEFAULT_SHAPE = (64, 64)


def _as_shape(resolution: Resolution) -> Tuple[int, int]:
    if isinstance(resolution, int):
        return resolution, resolution
    return int(resolution[0]), int(resolution[1])


def union_masks(
        masks: Sequence[ObjectMask],
        shape: Optional[Tuple[int, int]] = None
) -> np.ndarray:
    """
    Pixelwise logical OR of the object masks.

    Parameters
    ----------
    masks : Sequence[ObjectMask]
        Object masks sharing the same H x W shape.
    shape : Optional[Tuple[int, int]]
        Shape of the result when masks is empty. Defaults to the working resolution.

    Returns
    -------
    union_mask : np.ndarray
        H x W binary array.
    """
    if not masks:
        return np.zeros(shape or DEFAULT_SHAPE, dtype=np.uint8)

    expected_shape = masks[0].grid.shape
    union_mask = np.zeros(expected_shape, dtype=np.uint8)
    for mask in masks:
        if mask.grid.shape != expected_shape:
            raise ShapeMismatch(
                f"Mask {mask.name} has shape {mask.grid.shape} while {masks[0].name} has shape {expected_shape}.",
                name=mask.name
            )
        union_mask |= (mask.grid != 0).astype(np.uint8)

    return union_mask


def reshape_mask(mask: np.ndarray, resolution: Resolution) -> np.ndarray:
    """
    Max-pool a binary mask down to a block resolution. An output cell is 1 iff any covered input pixel is 1.

    Parameters
    ----------
    mask : np.ndarray
        H x W binary array.
    resolution : Resolution
        Target resolution, as an int (square) or (rows, columns).

    Returns
    -------
    reshaped_mask : np.ndarray
        Binary array at the target resolution.
    """
    rows, columns = _as_shape(resolution)
    height, width = mask.shape
    if rows <= 0 or columns <= 0 or height % rows != 0 or width % columns != 0:
        raise NonIntegerFactor(
            f"Mask of shape {mask.shape} cannot be reshaped to {(rows, columns)} with an integer factor.",
            shape=mask.shape,
            resolution=(rows, columns)
        )

    blocks = (mask != 0).reshape(rows, height // rows, columns, width // columns)

    return blocks.max(axis=(1, 3)).astype(np.uint8)


@dataclass(frozen=True)
class MaskSet:
    """
    The object masks of a sample, their union OM and the per-block reshaped masks. Arrays are read-only.

    Elements
    --------
    masks : Tuple[ObjectMask, ...]
        Object masks.
    union_mask : np.ndarray
        Union OM of the object masks.
    pyramid : Dict[Tuple[int, int], np.ndarray]
        Reshaped union mask for each block resolution.
    """
    masks: Tuple[ObjectMask, ...]
    union_mask: np.ndarray
    pyramid: Dict[Tuple[int, int], np.ndarray]

    @property
    def names(self) -> List[str]:
        return [mask.name for mask in self.masks]

    @property
    def is_empty(self) -> bool:
        return not bool(self.union_mask.any())

    def mask_for(self, name: str) -> ObjectMask:
        for mask in self.masks:
            if mask.name == name:
                return mask

        raise MissingMask(f"No mask named {name}. Available masks are {self.names}.", name=name)

    def resampled(self, name: str, resolution: Resolution) -> np.ndarray:
        """
        The mask of an object, max-pooled to the given resolution.

        Parameters
        ----------
        name : str
            Object name.
        resolution : Resolution
            Target resolution.

        Returns
        -------
        mask : np.ndarray
            Binary array at the target resolution.
        """
        return reshape_mask(self.mask_for(name).grid, resolution)

    def pyramid_level(self, resolution: Resolution) -> np.ndarray:
        shape = _as_shape(resolution)
        if shape not in self.pyramid:
            raise MissingPyramidLevel(
                f"No reshaped mask at resolution {shape}. Available resolutions are {sorted(self.pyramid)}.",
                resolution=shape
            )

        return self.pyramid[shape]


def _read_only(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


def build_mask_set(
        masks: Sequence[ObjectMask],
        resolutions: Iterable[Resolution],
        shape: Optional[Tuple[int, int]] = None
) -> MaskSet:
    """
    Build the immutable MaskSet of a sample.

    Parameters
    ----------
    masks : Sequence[ObjectMask]
        Object masks.
    resolutions : Iterable[Resolution]
        Block resolutions of the pyramid.
    shape : Optional[Tuple[int, int]]
        Working resolution, used when masks is empty.

    Returns
    -------
    mask_set : MaskSet
        Mask set.
    """
    union_mask = union_masks(masks, shape=shape)
    pyramid = {_as_shape(resolution): _read_only(reshape_mask(union_mask, resolution)) for resolution in resolutions}
    frozen_masks = tuple(ObjectMask(name=mask.name, grid=_read_only((mask.grid != 0).astype(np.uint8)))
                         for mask in masks)

    _logger.debug(f"Built mask set {[mask.name for mask in masks]} with pyramid levels {sorted(pyramid)}.")

    return MaskSet(masks=frozen_masks, union_mask=_read_only(union_mask), pyramid=pyramid)
