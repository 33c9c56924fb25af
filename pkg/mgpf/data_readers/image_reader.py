"""
    @file:              image_reader.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the ImageReader class which is used to read 8-bit PNG images with SimpleITK,
                        and the function used to write them.
"""

import logging
import os

import numpy as np
import SimpleITK as sitk

from mgpf.utils import is_path_valid, to_uint8_image

_logger = logging.getLogger(__name__)


class ImageReader:
    """
    A class used to read an 8-bit PNG image, RGB or grayscale.
    """

    def __init__(self, path_to_image: str):
        """
        Constructor of the class ImageReader.

        Parameters
        ----------
        path_to_image : str
            Path to the image file.
        """
        self.path_to_image = path_to_image

    @property
    def path_to_image(self) -> str:
        return self._path_to_image

    @path_to_image.setter
    def path_to_image(self, path_to_image: str) -> None:
        is_path_valid(path_to_image)
        self._path_to_image = path_to_image

    @property
    def simple_itk_image(self) -> sitk.Image:
        return sitk.ReadImage(self.path_to_image)

    def get_array(self) -> np.ndarray:
        """
        Image as floats in [0, 1].

        Returns
        -------
        array : np.ndarray
            H x W x 3 array for RGB images, H x W array for grayscale images.
        """
        array = sitk.GetArrayFromImage(self.simple_itk_image).astype(np.float64) / 255.0
        _logger.debug(f"Read image {self.path_to_image} with shape {array.shape}.")

        return array


def write_image(array: np.ndarray, path: str) -> None:
    """
    Write a float image with values in [0, 1] as an 8-bit PNG.

    Parameters
    ----------
    array : np.ndarray
        H x W x 3 (RGB) or H x W (grayscale) array.
    path : str
        Path to the PNG file.
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)

    uint8_array = to_uint8_image(np.asarray(array, dtype=np.float64))
    itk_image = sitk.GetImageFromArray(uint8_array, isVector=uint8_array.ndim == 3)
    sitk.WriteImage(itk_image, path)
