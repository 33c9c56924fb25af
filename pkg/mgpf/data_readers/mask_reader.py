"""
    @file:              mask_reader.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the MaskReader class which is used to read the object masks of a sample.
                        Each mask is an 8-bit grayscale image where nonzero pixels belong to the object and the file is
                        named <object-name>.png.
"""

import logging
import os
from typing import Dict, List

import numpy as np

from mgpf.data_model import ObjectMask
from mgpf.data_readers.image_reader import ImageReader, write_image
from mgpf.utils import is_path_valid

_logger = logging.getLogger(__name__)


class MaskReader:
    """
    A class used to read the object masks of a sample.
    """

    def __init__(self, paths_to_masks: Dict[str, str]):
        """
        Constructor of the class MaskReader.

        Parameters
        ----------
        paths_to_masks : Dict[str, str]
            A dictionary whose keys are object names and values are paths to mask files.
        """
        self._paths_to_masks = dict(paths_to_masks)

    @classmethod
    def from_folder(cls, path_to_folder: str) -> "MaskReader":
        """
        Mask reader of every <object-name>.png file in a folder.

        Parameters
        ----------
        path_to_folder : str
            Path to the folder containing the masks.

        Returns
        -------
        mask_reader : MaskReader
            Mask reader.
        """
        is_path_valid(path_to_folder)
        paths_to_masks = {
            os.path.splitext(filename)[0]: os.path.join(path_to_folder, filename)
            for filename in sorted(os.listdir(path_to_folder)) if filename.endswith(".png")
        }

        return cls(paths_to_masks)

    @property
    def names(self) -> List[str]:
        return list(self._paths_to_masks)

    def get_object_masks(self) -> List[ObjectMask]:
        """
        Read the object masks.

        Returns
        -------
        masks : List[ObjectMask]
            Binary object masks.
        """
        masks = []
        for name, path in self._paths_to_masks.items():
            array = ImageReader(path).get_array()
            if array.ndim == 3:
                array = array.max(axis=-1)
            masks.append(ObjectMask(name=name, grid=(array > 0).astype(np.uint8)))

        return masks


def write_mask(mask: ObjectMask, path_to_folder: str) -> str:
    """
    Write an object mask as <object-name>.png in the given folder.

    Parameters
    ----------
    mask : ObjectMask
        Object mask.
    path_to_folder : str
        Destination folder.

    Returns
    -------
    path : str
        Path to the written file.
    """
    path = os.path.join(path_to_folder, f"{mask.name}.png")
    write_image(mask.grid.astype(np.float64), path)

    return path
