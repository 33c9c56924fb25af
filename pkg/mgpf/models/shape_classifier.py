"""
    @file:              shape_classifier.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the ShapeClassifier class, the small convolutional network used by the
                        object-generation oracle to name the shape of a blob crop.
"""

from typing import List, Sequence, Tuple

import numpy as np
import torch
import torch.nn as nn


class ShapeClassifier(nn.Module):
    """
    Convolutional classifier of square binary silhouette crops.
    """

    def __init__(self, shapes: Sequence[str], crop_size: int = 24, channels: Sequence[int] = (16, 32)):
        """
        Constructor of the ShapeClassifier class.

        Parameters
        ----------
        shapes : Sequence[str]
            Shape names, in class order.
        crop_size : int, default = 24.
            Side of the input crops.
        channels : Sequence[int], default = (16, 32).
            Channels of the convolution stages. Each stage halves the resolution.
        """
        super().__init__()
        self.shapes = list(shapes)
        self.crop_size = crop_size
        self.channels = list(channels)

        layers, previous = [], 1
        for out_channels in channels:
            layers += [nn.Conv2d(previous, out_channels, 3, padding=1), nn.ReLU(), nn.MaxPool2d(2)]
            previous = out_channels
        self.features = nn.Sequential(*layers)
        side = crop_size // (2 ** len(channels))
        self.head = nn.Sequential(nn.Flatten(), nn.Linear(previous * side * side, 64), nn.ReLU(),
                                  nn.Linear(64, len(self.shapes)))

    def forward(self, crops: torch.Tensor) -> torch.Tensor:
        return self.head(self.features(crops))

    @torch.no_grad()
    def classify(self, crops: np.ndarray) -> List[Tuple[str, float]]:
        """
        Name the shape of each crop.

        Parameters
        ----------
        crops : np.ndarray
            Array of shape (N, crop_size, crop_size) with values in [0, 1].

        Returns
        -------
        predictions : List[Tuple[str, float]]
            (shape, confidence) for each crop.
        """
        if len(crops) == 0:
            return []

        parameter = next(self.parameters())
        inputs = torch.as_tensor(np.asarray(crops), dtype=parameter.dtype, device=parameter.device)[:, None]
        probabilities = self(inputs).softmax(dim=-1)
        confidences, labels = probabilities.max(dim=-1)

        return [(self.shapes[int(label)], float(confidence)) for label, confidence in zip(labels, confidences)]
