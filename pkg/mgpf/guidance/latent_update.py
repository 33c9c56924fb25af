"""
    @file:              latent_update.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the guidance objective evaluated at the current latent and the latent update
                        z_t' = z_t - alpha * grad(total loss), applied inside the guided window.
"""

from dataclasses import dataclass, field
import logging
from typing import Dict, List, NamedTuple, Optional, Tuple

import torch

from mgpf.config import GuidanceConfig
from mgpf.data_model import ConditionImage, ParsedPrompt
from mgpf.errors import NonFiniteGradient
from mgpf.guidance.losses import language_guided_loss, mask_guided_loss, total_loss, unrelated_control_maps
from mgpf.models.attention import normalize_maps
from mgpf.models.bundle import ModelBundle
from mgpf.models.control_branch import fused_forward
from mgpf.models.diffusion import NoiseSchedule
from mgpf.processing.masks import MaskSet

_logger = logging.getLogger(__name__)


class LossRecord(NamedTuple):
    t: int
    total: float
    language: float
    mask: float


@dataclass
class UpdateResult:
    z: torch.Tensor
    losses: List[LossRecord] = field(default_factory=list)
    alpha: float = 0.0


def control_token_positions(parsed_prompt: ParsedPrompt, config: GuidanceConfig) -> List[int]:
    """
    Token positions whose control branch maps enter the language-guided loss.
    """
    positions = [pair.object_index for pair in parsed_prompt.s1]
    if config.unrelated_includes_content_tokens:
        positions += list(parsed_prompt.free_objects) + list(parsed_prompt.locations)

    return sorted(set(positions))


def denoiser_token_positions(parsed_prompt: ParsedPrompt) -> List[int]:
    positions = [position for pair in parsed_prompt.pairs for position in (pair.attribute_index, pair.object_index)]

    return sorted(set(positions))


def scaled_alpha(config: GuidanceConfig, first_loss: Optional[float]) -> float:
    """
    Step size, divided by max(|L_first|, 1) when scaling by the total loss at the first guided step.
    """
    if config.alpha_scaling == "first_loss" and first_loss is not None:
        return config.alpha / max(abs(first_loss), 1.0)

    return config.alpha


def guidance_objective(
        z_t: torch.Tensor,
        parsed_prompt: ParsedPrompt,
        condition: ConditionImage,
        mask_set: MaskSet,
        model_timestep: int,
        config: GuidanceConfig,
        models: ModelBundle,
        reference_control_maps: Optional[Dict[int, torch.Tensor]] = None
) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """
    Evaluate the guidance losses at z_t from the attention maps of a fresh fused forward pass.

    Parameters
    ----------
    z_t : torch.Tensor
        Latent (1, C, H, W).
    parsed_prompt : ParsedPrompt
        Parsed prompt.
    condition : ConditionImage
        Visual control.
    mask_set : MaskSet
        Object masks.
    model_timestep : int
        Training timestep fed to the networks.
    config : GuidanceConfig
        Guidance configuration.
    models : ModelBundle
        Networks.
    reference_control_maps : Optional[Dict[int, torch.Tensor]]
        Fixed control maps (A_c) recorded on the source trajectory, used instead of fresh ones.

    Returns
    -------
    total, language, mask : Tuple[torch.Tensor, torch.Tensor, torch.Tensor]
        Total loss, L_I and L_M.
    """
    embedding = models.denoiser.embed_tokens(parsed_prompt.tokens)
    _, denoiser_record, control_record = fused_forward(
        models.denoiser,
        models.control_branch,
        z_t,
        embedding,
        condition,
        model_timestep,
        mask_set=mask_set if config.enable_mc else None,
        record_attention=True
    )

    denoiser_maps = normalize_maps(
        denoiser_record, denoiser_token_positions(parsed_prompt), config.attention_layers, config.attention_floor
    )
    if reference_control_maps is not None:
        control_maps = reference_control_maps
    elif control_record is not None and parsed_prompt.s1:
        control_maps = normalize_maps(
            control_record,
            control_token_positions(parsed_prompt, config),
            config.control_attention_layers,
            config.attention_floor
        )
    else:
        control_maps = {}

    unrelated = unrelated_control_maps(parsed_prompt, control_maps, config.unrelated_includes_content_tokens)
    language = language_guided_loss(denoiser_maps, control_maps, parsed_prompt.s1, parsed_prompt.s2, unrelated)
    mask = mask_guided_loss(denoiser_maps, parsed_prompt.s1, mask_set)

    return total_loss(language, mask, config), language, mask


def update_latent(
        z_t: torch.Tensor,
        parsed_prompt: ParsedPrompt,
        condition: ConditionImage,
        mask_set: MaskSet,
        t: int,
        config: GuidanceConfig,
        models: ModelBundle,
        schedule: NoiseSchedule,
        alpha: Optional[float] = None,
        reference_control_maps: Optional[Dict[int, torch.Tensor]] = None
) -> UpdateResult:
    """
    Update the latent by gradient descent on the total guidance loss, inner_iters times. Outside the guided window,
    with a zero step size or with both losses disabled, the latent is returned unchanged.

    Parameters
    ----------
    z_t : torch.Tensor
        Latent (1, C, H, W).
    parsed_prompt : ParsedPrompt
        Parsed prompt.
    condition : ConditionImage
        Visual control.
    mask_set : MaskSet
        Object masks.
    t : int
        Inference timestep.
    config : GuidanceConfig
        Guidance configuration.
    models : ModelBundle
        Networks.
    schedule : NoiseSchedule
        Inference schedule.
    alpha : Optional[float]
        Step size overriding config.alpha.
    reference_control_maps : Optional[Dict[int, torch.Tensor]]
        Fixed control maps recorded on the source trajectory.

    Returns
    -------
    result : UpdateResult
        Updated latent, pre-update losses of each inner iteration and the step size used.
    """
    alpha = config.alpha if alpha is None else alpha
    if t not in config.window(schedule.T) or alpha == 0 or config.is_identity:
        return UpdateResult(z=z_t, alpha=0.0)

    result = UpdateResult(z=z_t, alpha=alpha)
    for _ in range(config.inner_iters):
        z_variable = result.z.detach().requires_grad_(True)
        with torch.enable_grad():
            total, language, mask = guidance_objective(
                z_variable, parsed_prompt, condition, mask_set, schedule.model_timestep(t), config, models,
                reference_control_maps=reference_control_maps
            )
        result.losses.append(LossRecord(t=t, total=float(total), language=float(language), mask=float(mask)))
        _logger.debug(f"Step {t} : total loss {float(total):.6f} (L_I = {float(language):.6f}, "
                      f"L_M = {float(mask):.6f}).")

        if not isinstance(total, torch.Tensor) or not total.requires_grad:
            break

        gradient = torch.autograd.grad(total, z_variable)[0]
        if not bool(torch.isfinite(gradient).all()):
            raise NonFiniteGradient(f"Non-finite guidance gradient at timestep {t}.", timestep=t)

        result.z = (z_variable - alpha * gradient).detach()

    return result
