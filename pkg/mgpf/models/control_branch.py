"""
    @file:              control_branch.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the ControlBranch class, a trainable copy of the denoiser's encoder and
                        middle block consuming the condition image, together with the functions that run it, gate its
                        residuals with the object masks and merge them into the denoiser.
"""

import copy
from dataclasses import dataclass
import logging
from typing import List, Optional, Tuple, Union

import torch
import torch.nn as nn

from mgpf.config import ModelConfig
from mgpf.errors import ShapeMismatch
from mgpf.models.attention import AttentionRecord
from mgpf.models.blocks import TimeEmbedding, zero_module
from mgpf.models.denoiser import Denoiser, TextEmbedding, UNetEncoder
from mgpf.processing.masks import MaskSet

_logger = logging.getLogger(__name__)


@dataclass
class ControlResiduals:
    """
    One residual per skip connection of the denoiser followed by the middle block residual, with their resolutions.
    """
    residuals: List[torch.Tensor]
    resolutions: List[int]

    def __len__(self) -> int:
        return len(self.residuals)


class ControlBranch(nn.Module):
    """
    The control branch epsilon_phi. The encoded condition is concatenated to the noisy image at the input of the
    encoder copy, and every block output goes through a zero-initialized 1x1 projection.
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.condition_encoder = nn.Sequential(
            nn.Conv2d(config.condition_channels, config.hint_channels, 3, padding=1),
            nn.SiLU(),
            nn.Conv2d(config.hint_channels, config.hint_channels, 3, padding=1),
            nn.SiLU()
        )
        self.time_embedding = TimeEmbedding(config.time_dim)
        self.encoder = UNetEncoder(config, extra_input_channels=config.hint_channels)
        self.zero_convs = nn.ModuleList(
            [zero_module(nn.Conv2d(channels, channels, 1)) for channels in self.encoder.skip_channels]
        )
        self.mid_zero_conv = zero_module(nn.Conv2d(self.encoder.mid_channels, self.encoder.mid_channels, 1))

    @classmethod
    def from_denoiser(cls, denoiser: Denoiser) -> "ControlBranch":
        """
        Control branch whose encoder copies the denoiser's weights. The input convolution weights of the condition
        channels start at zero.

        Parameters
        ----------
        denoiser : Denoiser
            Trained denoiser.

        Returns
        -------
        control_branch : ControlBranch
            Control branch.
        """
        branch = cls(denoiser.config).to(dtype=next(denoiser.parameters()).dtype)
        branch.time_embedding.load_state_dict(copy.deepcopy(denoiser.time_embedding.state_dict()))

        encoder_state = copy.deepcopy(denoiser.encoder.state_dict())
        conv_in_weight = torch.zeros_like(branch.encoder.conv_in.weight)
        conv_in_weight[:, :denoiser.config.in_channels] = encoder_state["conv_in.weight"]
        encoder_state["conv_in.weight"] = conv_in_weight
        branch.encoder.load_state_dict(encoder_state)

        return branch

    @property
    def block_resolutions(self) -> List[int]:
        size = self.config.image_size
        return [size // scale for scale in self.encoder.skip_scales] + [size // self.encoder.mid_scale]

    def forward(
            self,
            z_t: torch.Tensor,
            t: Union[int, torch.Tensor],
            embedding: TextEmbedding,
            condition: torch.Tensor,
            record: Optional[AttentionRecord] = None
    ) -> ControlResiduals:
        if condition.shape[0] != z_t.shape[0] or condition.shape[-2:] != z_t.shape[-2:] or \
                condition.shape[1] != self.config.condition_channels:
            raise ShapeMismatch(f"Condition of shape {tuple(condition.shape)} does not match the noisy images of "
                                f"shape {tuple(z_t.shape)}.", condition=tuple(condition.shape), z=tuple(z_t.shape))

        if isinstance(t, torch.Tensor):
            timesteps = t.reshape(-1).expand(z_t.shape[0]) if t.numel() == 1 else t
        else:
            timesteps = torch.full((z_t.shape[0],), int(t), dtype=torch.long)
        time_embedding = self.time_embedding(timesteps.to(z_t.device))

        hint = self.condition_encoder(condition.to(z_t.dtype))
        skips, h = self.encoder(torch.cat([z_t, hint], dim=1), time_embedding, embedding, record)
        residuals = [zero_conv(skip) for zero_conv, skip in zip(self.zero_convs, skips)]
        residuals.append(self.mid_zero_conv(h))

        return ControlResiduals(residuals=residuals, resolutions=[residual.shape[-1] for residual in residuals])


def condition_tensor(condition, like: torch.Tensor) -> torch.Tensor:
    """
    Condition grid (C, H, W) or (B, C, H, W) as a batched tensor with the dtype and device of a reference tensor.
    """
    grid = torch.as_tensor(getattr(condition, "grid", condition))
    if grid.dim() == 3:
        grid = grid[None].expand(like.shape[0], -1, -1, -1)

    return grid.to(dtype=like.dtype, device=like.device)


def control_forward(
        branch: ControlBranch,
        z_t: torch.Tensor,
        embedding: TextEmbedding,
        condition,
        t: Union[int, torch.Tensor]
) -> Tuple[ControlResiduals, AttentionRecord]:
    """
    Run the control branch and record its cross-attention maps (A_c).

    Parameters
    ----------
    branch : ControlBranch
        Control branch.
    z_t : torch.Tensor
        Noisy images (B, C, H, W).
    embedding : TextEmbedding
        Prompt embedding.
    condition : ConditionImage or torch.Tensor
        Visual control.
    t : Union[int, torch.Tensor]
        Training timestep.

    Returns
    -------
    residuals, record : Tuple[ControlResiduals, AttentionRecord]
        Control residuals and control branch attention record.
    """
    record = AttentionRecord(AttentionRecord.CONTROL)
    residuals = branch(z_t, t, embedding, condition_tensor(condition, z_t), record=record)

    return residuals, record


def mask_residuals(residuals: ControlResiduals, mask_set: MaskSet) -> ControlResiduals:
    """
    Gate every residual with the union mask reshaped to its block resolution, broadcast over channels.

    Parameters
    ----------
    residuals : ControlResiduals
        Control residuals.
    mask_set : MaskSet
        Object masks of the sample.

    Returns
    -------
    masked_residuals : ControlResiduals
        Gated residuals.
    """
    masked = []
    for residual, resolution in zip(residuals.residuals, residuals.resolutions):
        level = torch.as_tensor(mask_set.pyramid_level(resolution), dtype=residual.dtype, device=residual.device)
        masked.append(residual * level[None, None])

    return ControlResiduals(residuals=masked, resolutions=list(residuals.resolutions))


def fused_forward(
        denoiser: Denoiser,
        branch: Optional[ControlBranch],
        z_t: torch.Tensor,
        embedding: TextEmbedding,
        condition,
        t: Union[int, torch.Tensor],
        mask_set: Optional[MaskSet] = None,
        record_attention: bool = False
) -> Tuple[torch.Tensor, Optional[AttentionRecord], Optional[AttentionRecord]]:
    """
    Joint prediction epsilon_{theta, phi}(z_t, P, I). The control residuals, masked when a mask set is given, are added
    to the skip connections and to the middle block of the denoiser. Without condition or branch, this is the plain
    denoiser prediction.

    Parameters
    ----------
    denoiser : Denoiser
        Denoiser.
    branch : Optional[ControlBranch]
        Control branch.
    z_t : torch.Tensor
        Noisy images (B, C, H, W).
    embedding : TextEmbedding
        Prompt embedding.
    condition : ConditionImage or torch.Tensor or None
        Visual control.
    t : Union[int, torch.Tensor]
        Training timestep.
    mask_set : Optional[MaskSet]
        Object masks gating the residuals.
    record_attention : bool, default = False.
        Whether to record the attention maps of both networks.

    Returns
    -------
    epsilon_hat, denoiser_record, control_record
        Predicted noise and the attention records A_s and A_c (None when not recorded).
    """
    denoiser_record = AttentionRecord(AttentionRecord.DENOISER) if record_attention else None
    control_record = None
    residuals = None

    if branch is not None and condition is not None:
        control_record = AttentionRecord(AttentionRecord.CONTROL) if record_attention else None
        control_residuals = branch(z_t, t, embedding, condition_tensor(condition, z_t), record=control_record)
        if len(control_residuals) != len(denoiser.block_resolutions):
            raise ShapeMismatch(f"The control branch emits {len(control_residuals)} residuals while the denoiser "
                                f"has {len(denoiser.block_resolutions)} blocks.")
        if mask_set is not None:
            control_residuals = mask_residuals(control_residuals, mask_set)
        residuals = control_residuals.residuals

    epsilon_hat = denoiser(z_t, t, embedding, residuals=residuals, record=denoiser_record)

    return epsilon_hat, denoiser_record, control_record
