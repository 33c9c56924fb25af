"""
    @file:              transforms.py
    @Author:            Maxence Larose

    @Creation Date:     05/2022
    @Last modification: 10/2026

    @Description:       This file contains the BaseTransform abstract class which is used to define transforms that can
                        be applied to 2D images and masks, along with the Resize and BinaryErosion transforms used by
                        the evaluation oracles.
"""

from abc import ABC, abstractmethod
from typing import Tuple, Union

import SimpleITK as sitk
import numpy as np


class BaseTransform(ABC):
    """
    Base transform abstract class.
    """

    @abstractmethod
    def forward(self, itk_image: sitk.Image, is_mask: bool = False) -> sitk.Image:
        """
        Apply the transformation.

        Parameters
        ----------
        itk_image : sitk.Image
            The input image.
        is_mask : bool
            Whether the simple ITK image is a mask or not.

        Returns
        -------
        transformed_image : sitk.Image
            The transformed image.
        """
        raise NotImplementedError

    def __call__(self, array: np.ndarray, is_mask: bool = False) -> np.ndarray:
        """
        Apply the transformation to a 2D numpy array.
        """
        itk_image = sitk.GetImageFromArray(array)

        return sitk.GetArrayFromImage(self.forward(itk_image, is_mask=is_mask))


class Resize(BaseTransform):
    """
    Resample a 2D itk_image to a new size, keeping its physical extent.
    """

    def __init__(self, out_size: Union[int, Tuple[int, int]]):
        """
        Initialize output size.

        Parameters
        ----------
        out_size : Union[int, Tuple[int, int]]
            The desired (width, height) size. An int means a square size.
        """
        super().__init__()
        self._out_size = (out_size, out_size) if isinstance(out_size, int) else tuple(out_size)

    def forward(self, itk_image: sitk.Image, is_mask: bool = False) -> sitk.Image:
        """
        Resample an itk_image to the output size.

        Parameters
        ----------
        itk_image : sitk.Image
            The input image.
        is_mask : bool
            Whether the simple ITK image is a mask or not. This parameter will change the interpolator used during
            resampling.

        Returns
        -------
        resampled_image : sitk.Image
            The resampled image.
        """
        original_spacing = itk_image.GetSpacing()
        original_size = itk_image.GetSize()
        original_origin = itk_image.GetOrigin()

        out_spacing = [original_spacing[i] * original_size[i] / self._out_size[i] for i in range(2)]
        out_origin = [original_origin[i] + (out_spacing[i] - original_spacing[i]) / 2 for i in range(2)]

        resample = sitk.ResampleImageFilter()
        resample.SetOutputSpacing(out_spacing)
        resample.SetSize([int(size) for size in self._out_size])
        resample.SetOutputDirection(itk_image.GetDirection())
        resample.SetOutputOrigin(out_origin)
        resample.SetTransform(sitk.Transform())
        resample.SetDefaultPixelValue(0)

        if is_mask:
            resample.SetInterpolator(sitk.sitkNearestNeighbor)
        else:
            resample.SetInterpolator(sitk.sitkLinear)

        return resample.Execute(itk_image)


class BinaryErosion(BaseTransform):
    """
    Erode a binary mask with a ball structuring element.
    """

    def __init__(self, radius: int = 2):
        super().__init__()
        self._radius = radius

    def forward(self, itk_image: sitk.Image, is_mask: bool = True) -> sitk.Image:
        if self._radius <= 0:
            return itk_image

        erode = sitk.BinaryErodeImageFilter()
        erode.SetKernelType(sitk.sitkBall)
        erode.SetKernelRadius(self._radius)
        erode.SetForegroundValue(1)
        erode.SetBoundaryToForeground(False)

        return erode.Execute(sitk.Cast(itk_image, sitk.sitkUInt8))
