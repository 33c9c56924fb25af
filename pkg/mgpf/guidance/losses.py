"""
    @file:              losses.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the guidance losses computed on normalized cross-attention maps : the
                        symmetric KL distance, the language-guided loss that binds attributes to aligned objects and
                        repels unrelated maps, the mask-guided loss that pushes attention mass inside the object masks
                        and their weighted combination.
"""

import logging
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import torch

from mgpf.config import GuidanceConfig
from mgpf.data_model import AttributeObjectPair, ParsedPrompt
from mgpf.errors import MissingMap, NotNormalized
from mgpf.processing.masks import MaskSet

_logger = logging.getLogger(__name__)

Maps = Mapping[int, torch.Tensor]
UnrelatedMaps = Optional[Union[Sequence[torch.Tensor], Mapping[AttributeObjectPair, Sequence[torch.Tensor]]]]

NORMALIZATION_TOLERANCE = 1e-4


def _as_distribution(array: Any) -> torch.Tensor:
    tensor = array if isinstance(array, torch.Tensor) else torch.as_tensor(array, dtype=torch.float64)
    total = float(tensor.detach().sum())
    if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
        raise NotNormalized(f"Attention map sums to {total} instead of 1.", total=total)

    return tensor.reshape(-1)


def dist(a: Any, b: Any) -> torch.Tensor:
    """
    Symmetric KL divergence between two pixel distributions, 0.5 * KL(a || b) + 0.5 * KL(b || a), natural log.

    Parameters
    ----------
    a : Any
        Strictly positive distribution summing to 1.
    b : Any
        Strictly positive distribution summing to 1, same number of pixels.

    Returns
    -------
    distance : torch.Tensor
        Nonnegative scalar.
    """
    a, b = _as_distribution(a), _as_distribution(b)
    kl_ab = (a * (a.log() - b.log())).sum()
    kl_ba = (b * (b.log() - a.log())).sum()

    return 0.5 * kl_ab + 0.5 * kl_ba


def _map(maps: Maps, position: int, source: str) -> torch.Tensor:
    if position not in maps:
        raise MissingMap(f"No {source} attention map for token position {position}.", position=position,
                         source=source)

    return maps[position]


def _zero(*maps: Maps) -> torch.Tensor:
    for mapping in maps:
        for tensor in mapping.values():
            return torch.zeros((), dtype=tensor.dtype, device=tensor.device)

    return torch.zeros((), dtype=torch.float64)


def language_guided_loss(
        denoiser_maps: Maps,
        control_maps: Maps,
        s1: Sequence[AttributeObjectPair],
        s2: Sequence[AttributeObjectPair],
        unrelated_maps: UnrelatedMaps = None
) -> torch.Tensor:
    """
    Language-guided loss L_I. Each aligned pair's attribute map in the denoiser is attracted to its object map in the
    control branch, both words of the pair are repelled from the unrelated control maps, and each misaligned pair's
    attribute map is attracted to its object map in the denoiser.

    Parameters
    ----------
    denoiser_maps : Maps
        Normalized denoiser maps (A_s) by token position.
    control_maps : Maps
        Normalized control branch maps (A_c) by token position.
    s1 : Sequence[AttributeObjectPair]
        Aligned pairs.
    s2 : Sequence[AttributeObjectPair]
        Misaligned pairs.
    unrelated_maps : UnrelatedMaps
        Unrelated control maps, either shared by every aligned pair or given per pair. No repulsion when empty.

    Returns
    -------
    loss : torch.Tensor
        Scalar loss.
    """
    loss = _zero(denoiser_maps, control_maps)

    for pair in s1:
        attribute_map = _map(denoiser_maps, pair.attribute_index, "denoiser")
        object_map = _map(denoiser_maps, pair.object_index, "denoiser")
        loss = loss + dist(_map(control_maps, pair.object_index, "control"), attribute_map)

        if isinstance(unrelated_maps, Mapping):
            pair_unrelated_maps = list(unrelated_maps.get(pair, []))
        else:
            pair_unrelated_maps = list(unrelated_maps or [])

        if pair_unrelated_maps:
            for word_map in (attribute_map, object_map):
                repulsion = sum(dist(unrelated_map, word_map) for unrelated_map in pair_unrelated_maps)
                loss = loss - repulsion / len(pair_unrelated_maps)

    for pair in s2:
        loss = loss + dist(
            _map(denoiser_maps, pair.object_index, "denoiser"),
            _map(denoiser_maps, pair.attribute_index, "denoiser")
        )

    return loss


def unrelated_control_maps(
        parsed_prompt: ParsedPrompt,
        control_maps: Maps,
        include_content_tokens: bool = False
) -> Dict[AttributeObjectPair, List[torch.Tensor]]:
    """
    Unrelated control maps of each aligned pair : the control maps of the object words of the other aligned pairs,
    plus the maps of the trailing-clause objects and locations when requested.

    Parameters
    ----------
    parsed_prompt : ParsedPrompt
        Parsed prompt.
    control_maps : Maps
        Normalized control branch maps by token position.
    include_content_tokens : bool, default = False.
        Whether to add the maps of the content tokens that belong to no pair.

    Returns
    -------
    unrelated_maps : Dict[AttributeObjectPair, List[torch.Tensor]]
        Unrelated maps per aligned pair.
    """
    content_positions = list(parsed_prompt.free_objects) + list(parsed_prompt.locations)
    unrelated = {}
    for pair in parsed_prompt.s1:
        positions = [other.object_index for other in parsed_prompt.s1 if other != pair]
        if include_content_tokens:
            positions += content_positions
        unrelated[pair] = [_map(control_maps, position, "control") for position in positions]

    return unrelated


def mask_guided_loss(
        denoiser_maps: Maps,
        s1: Sequence[AttributeObjectPair],
        mask_set: MaskSet
) -> torch.Tensor:
    """
    Mask-guided loss L_M, the negative difference between the attention mass inside and outside each aligned pair's
    object mask, summed over both words of every pair. Masks are max-pooled to the map resolution.

    Parameters
    ----------
    denoiser_maps : Maps
        Normalized denoiser maps (A_s) by token position.
    s1 : Sequence[AttributeObjectPair]
        Aligned pairs.
    mask_set : MaskSet
        Object masks.

    Returns
    -------
    loss : torch.Tensor
        Scalar loss in [-2N, 2N] for N aligned pairs.
    """
    loss = _zero(denoiser_maps)

    for pair in s1:
        for position in (pair.attribute_index, pair.object_index):
            word_map = _map(denoiser_maps, position, "denoiser")
            mask = torch.as_tensor(
                mask_set.resampled(pair.object_name, tuple(word_map.shape[-2:])),
                dtype=word_map.dtype,
                device=word_map.device
            )
            inside = (word_map * mask).sum()
            outside = (word_map * (1.0 - mask)).sum()
            loss = loss - (inside - outside)

    return loss


def total_loss(l_i: Any, l_m: Any, config: GuidanceConfig) -> Any:
    """
    Weighted sum of the enabled losses, lambda_I * L_I + lambda_M * L_M. Disabled losses are left out entirely.

    Parameters
    ----------
    l_i : Any
        Language-guided loss.
    l_m : Any
        Mask-guided loss.
    config : GuidanceConfig
        Guidance configuration.

    Returns
    -------
    loss : Any
        Scalar loss, 0.0 when both losses are disabled.
    """
    loss = 0.0
    if config.enable_ll:
        loss = loss + config.lambda_i * l_i
    if config.enable_ml:
        loss = loss + config.lambda_m * l_m

    return loss
