"""
    @file:              attention.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the single-head cross-attention layer of the U-net, the AttentionRecord that
                        collects its maps during a forward pass and the normalize_maps function that turns the recorded
                        maps into per-token pixel distributions.
"""

import logging
import math
from typing import Dict, List, Optional, Sequence

import torch
import torch.nn as nn
import torch.nn.functional as F

from mgpf.errors import MissingLayer, MissingToken
from mgpf.models.blocks import check_finite, group_norm

_logger = logging.getLogger(__name__)


class AttentionRecord:
    """
    Cross-attention maps of one forward pass, per layer, with shape (B, L, h, w). Maps keep their autograd history.
    Raw maps sum to 1 over tokens at every pixel.
    """

    DENOISER = "denoiser"
    CONTROL = "control"

    def __init__(self, source: str):
        """
        Constructor of the AttentionRecord class.

        Parameters
        ----------
        source : str
            Network that produced the maps, denoiser (A_s) or control branch (A_c).
        """
        self.source = source
        self.maps: Dict[str, torch.Tensor] = {}

    def record(self, layer: str, maps: torch.Tensor) -> None:
        self.maps[layer] = maps

    @property
    def layers(self) -> List[str]:
        return list(self.maps)

    def resolution_of(self, layer: str) -> int:
        if layer not in self.maps:
            raise MissingLayer(f"No attention layer {layer} in the {self.source} record. Available layers are "
                               f"{self.layers}.", layer=layer, source=self.source)

        return self.maps[layer].shape[-1]

    def coarsest_layers(self) -> List[str]:
        """
        Layers at the lowest recorded resolution.
        """
        if not self.maps:
            return []

        lowest = min(self.resolution_of(layer) for layer in self.layers)

        return [layer for layer in self.layers if self.resolution_of(layer) == lowest]


class CrossAttention(nn.Module):
    """
    Single-head cross-attention from image features (queries) to token embeddings (keys and values), added back to
    the features through an output projection.
    """

    def __init__(self, name: str, query_dim: int, context_dim: int, attention_dim: int, groups: int):
        super().__init__()
        self.name = name
        self.attention_dim = attention_dim
        self.norm = group_norm(query_dim, groups)
        self.to_q = nn.Linear(query_dim, attention_dim, bias=False)
        self.to_k = nn.Linear(context_dim, attention_dim, bias=False)
        self.to_v = nn.Linear(context_dim, attention_dim, bias=False)
        self.to_out = nn.Linear(attention_dim, query_dim)

    def attention_probabilities(
            self,
            x: torch.Tensor,
            context: torch.Tensor,
            context_mask: Optional[torch.Tensor] = None
    ) -> torch.Tensor:
        """
        softmax(Q K^T / sqrt(d)) over the tokens.

        Parameters
        ----------
        x : torch.Tensor
            Image features (B, C, H, W).
        context : torch.Tensor
            Token embeddings (B, L, D).
        context_mask : Optional[torch.Tensor]
            (B, L) boolean tensor, False for padding tokens.

        Returns
        -------
        probabilities : torch.Tensor
            Tensor of shape (B, H * W, L).
        """
        queries = self.to_q(self.norm(x).flatten(2).transpose(1, 2))
        keys = self.to_k(context)
        scores = queries @ keys.transpose(1, 2) / math.sqrt(self.attention_dim)
        if context_mask is not None:
            scores = scores.masked_fill(~context_mask[:, None, :], float("-inf"))

        return scores.softmax(dim=-1)

    def forward(
            self,
            x: torch.Tensor,
            context: torch.Tensor,
            context_mask: Optional[torch.Tensor] = None,
            record: Optional[AttentionRecord] = None
    ) -> torch.Tensor:
        batch_size, channels, height, width = x.shape
        probabilities = self.attention_probabilities(x, context, context_mask)
        if record is not None:
            record.record(self.name, probabilities.transpose(1, 2).reshape(batch_size, -1, height, width))

        attended = self.to_out(probabilities @ self.to_v(context))
        out = x + attended.transpose(1, 2).reshape(batch_size, channels, height, width)

        return check_finite(out, self.name)


def normalize_maps(
        record: AttentionRecord,
        token_positions: Sequence[int],
        layer_selection: Optional[Sequence[str]] = None,
        floor: float = 1e-8,
        batch_index: int = 0
) -> Dict[int, torch.Tensor]:
    """
    Per-token pixel distributions : the selected layers' maps are upsampled by nearest neighbour to the finest selected
    resolution, averaged, floored and divided by their total.

    Parameters
    ----------
    record : AttentionRecord
        Recorded maps.
    token_positions : Sequence[int]
        Token positions to normalize.
    layer_selection : Optional[Sequence[str]]
        Layers to average. Defaults to the coarsest layers of the record.
    floor : float, default = 1e-8.
        Value added to every pixel before normalization.
    batch_index : int, default = 0.
        Batch element.

    Returns
    -------
    distributions : Dict[int, torch.Tensor]
        Map from token position to an (h, w) tensor summing to 1.
    """
    layers = list(layer_selection) if layer_selection else record.coarsest_layers()
    if not layers:
        raise MissingLayer(f"The {record.source} record holds no attention layer.", source=record.source)

    finest = max(record.resolution_of(layer) for layer in layers)
    stacked = []
    for layer in layers:
        maps = record.maps[layer][batch_index:batch_index + 1]
        if maps.shape[-1] != finest:
            maps = F.interpolate(maps, size=(finest, finest), mode="nearest")
        stacked.append(maps[0])
    averaged = torch.stack(stacked).mean(dim=0)

    distributions = {}
    for position in token_positions:
        if not 0 <= position < averaged.shape[0]:
            raise MissingToken(f"Token position {position} is not in the {record.source} record of "
                               f"{averaged.shape[0]} tokens.", position=position, source=record.source)
        token_map = averaged[position] + floor
        distributions[position] = token_map / token_map.sum()

    return distributions
