"""
    @file:              denoiser.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the noise predictor : the token embedder, the U-net encoder (shared in
                        structure with the control branch), the decoder that receives the skip connections and the
                        Denoiser module grouping them.
"""

from dataclasses import dataclass
import logging
from typing import List, Optional, Sequence, Tuple, Union

import torch
import torch.nn as nn
import torch.nn.functional as F

from mgpf.config import ModelConfig
from mgpf.errors import UnknownToken
from mgpf.grammar.vocabulary import Vocabulary
from mgpf.models.attention import AttentionRecord, CrossAttention
from mgpf.models.blocks import Downsample, ResBlock, TimeEmbedding, Upsample, check_finite, group_norm

_logger = logging.getLogger(__name__)

Tokens = Optional[Sequence[int]]


@dataclass
class TextEmbedding:
    """
    Per-token vectors of a batch of prompts.

    Elements
    --------
    vectors : torch.Tensor
        Tensor of shape (B, L, d).
    mask : torch.Tensor
        (B, L) boolean tensor, False for padding tokens.
    """
    vectors: torch.Tensor
    mask: torch.Tensor


class TokenEmbedder(nn.Module):
    """
    Learned lookup table of token vectors plus learned position vectors. The null prompt is the single null token.
    """

    def __init__(self, vocabulary_size: int, dim: int, max_tokens: int):
        super().__init__()
        self.vocabulary_size = vocabulary_size
        self.max_tokens = max_tokens
        self.token_embedding = nn.Embedding(vocabulary_size, dim)
        self.position_embedding = nn.Embedding(max_tokens, dim)

    def pad(self, batch_tokens: Sequence[Tokens]) -> Tuple[torch.Tensor, torch.Tensor]:
        """
        Pad a batch of token lists. Empty or None entries are the null prompt.

        Parameters
        ----------
        batch_tokens : Sequence[Tokens]
            Token id lists.

        Returns
        -------
        tokens, mask : Tuple[torch.Tensor, torch.Tensor]
            (B, L) token ids and (B, L) boolean validity mask.
        """
        rows = [list(tokens) if tokens else [Vocabulary.NULL_TOKEN_ID] for tokens in batch_tokens]
        length = max(len(row) for row in rows)
        if length > self.max_tokens:
            raise ValueError(f"Prompt of {length} tokens exceeds the maximum of {self.max_tokens} tokens.")

        for row in rows:
            for token in row:
                if not 0 <= token < self.vocabulary_size:
                    raise UnknownToken(f"Token id {token} is outside the vocabulary of size {self.vocabulary_size}.",
                                       token_id=token)

        tokens = torch.zeros(len(rows), length, dtype=torch.long)
        mask = torch.zeros(len(rows), length, dtype=torch.bool)
        for index, row in enumerate(rows):
            tokens[index, :len(row)] = torch.tensor(row, dtype=torch.long)
            mask[index, :len(row)] = True

        return tokens, mask

    def forward(self, tokens: torch.Tensor, mask: torch.Tensor) -> TextEmbedding:
        positions = torch.arange(tokens.shape[1], device=tokens.device)
        vectors = self.token_embedding(tokens) + self.position_embedding(positions)[None]

        return TextEmbedding(vectors=vectors, mask=mask)

    def embed(self, batch_tokens: Union[Tokens, Sequence[Tokens]]) -> TextEmbedding:
        """
        Embed one token list or a batch of token lists.

        Parameters
        ----------
        batch_tokens : Union[Tokens, Sequence[Tokens]]
            A token id list (or None for the null prompt), or a sequence of them.

        Returns
        -------
        embedding : TextEmbedding
            Token vectors.
        """
        if batch_tokens is None or len(batch_tokens) == 0 or isinstance(batch_tokens[0], int):
            batch_tokens = [batch_tokens]
        tokens, mask = self.pad(batch_tokens)

        return self(tokens.to(self.token_embedding.weight.device), mask.to(self.token_embedding.weight.device))


class UNetEncoder(nn.Module):
    """
    Encoder and middle block. Each level holds a residual block and a cross-attention layer, and all levels but the
    last end with a downsampling layer. The skip connections are the outputs of the input convolution, of each level
    and of each downsampling layer.
    """

    def __init__(self, config: ModelConfig, extra_input_channels: int = 0):
        super().__init__()
        channels = list(config.channels)
        groups = config.norm_groups

        self.conv_in = nn.Conv2d(config.in_channels + extra_input_channels, channels[0], 3, padding=1)
        self.down_blocks = nn.ModuleList()
        self.down_attentions = nn.ModuleList()
        self.downsamples = nn.ModuleList()

        self.skip_channels = [channels[0]]
        self.skip_scales = [1]
        previous = channels[0]
        for level, out_channels in enumerate(channels):
            self.down_blocks.append(ResBlock(previous, out_channels, config.time_dim, groups))
            self.down_attentions.append(
                CrossAttention(f"down.{level}.attn", out_channels, config.context_dim, config.attention_dim, groups)
            )
            self.skip_channels.append(out_channels)
            self.skip_scales.append(2 ** level)
            if level < len(channels) - 1:
                self.downsamples.append(Downsample(out_channels))
                self.skip_channels.append(out_channels)
                self.skip_scales.append(2 ** (level + 1))
            previous = out_channels

        self.mid_block1 = ResBlock(previous, previous, config.time_dim, groups)
        self.mid_attention = CrossAttention("mid.attn", previous, config.context_dim, config.attention_dim, groups)
        self.mid_block2 = ResBlock(previous, previous, config.time_dim, groups)
        self.mid_channels = previous
        self.mid_scale = 2 ** (len(channels) - 1)

    def forward(
            self,
            x: torch.Tensor,
            time_embedding: torch.Tensor,
            embedding: TextEmbedding,
            record: Optional[AttentionRecord] = None
    ) -> Tuple[List[torch.Tensor], torch.Tensor]:
        h = self.conv_in(x)
        skips = [h]
        for level, (block, attention) in enumerate(zip(self.down_blocks, self.down_attentions)):
            h = block(h, time_embedding)
            h = attention(h, embedding.vectors, embedding.mask, record)
            skips.append(h)
            if level < len(self.downsamples):
                h = self.downsamples[level](h)
                skips.append(h)

        h = self.mid_block1(h, time_embedding)
        h = self.mid_attention(h, embedding.vectors, embedding.mask, record)
        h = self.mid_block2(h, time_embedding)

        return skips, check_finite(h, "mid")


class UNetDecoder(nn.Module):
    """
    Decoder. Each level, from the deepest, concatenates two skip connections through two residual blocks, applies a
    cross-attention layer and, but for the last level, upsamples.
    """

    def __init__(self, config: ModelConfig, skip_channels: Sequence[int]):
        super().__init__()
        channels = list(config.channels)
        groups = config.norm_groups
        remaining_skips = list(skip_channels)

        self.up_blocks = nn.ModuleList()
        self.up_attentions = nn.ModuleList()
        self.upsamples = nn.ModuleList()

        previous = channels[-1]
        for index, out_channels in enumerate(reversed(channels)):
            blocks = nn.ModuleList()
            for _ in range(2):
                blocks.append(ResBlock(previous + remaining_skips.pop(), out_channels, config.time_dim, groups))
                previous = out_channels
            self.up_blocks.append(blocks)
            self.up_attentions.append(
                CrossAttention(f"up.{index}.attn", out_channels, config.context_dim, config.attention_dim, groups)
            )
            if index < len(channels) - 1:
                self.upsamples.append(Upsample(out_channels))

        self.norm_out = group_norm(previous, groups)
        self.conv_out = nn.Conv2d(previous, config.in_channels, 3, padding=1)

    def forward(
            self,
            h: torch.Tensor,
            skips: List[torch.Tensor],
            time_embedding: torch.Tensor,
            embedding: TextEmbedding,
            record: Optional[AttentionRecord] = None
    ) -> torch.Tensor:
        skips = list(skips)
        for index, (blocks, attention) in enumerate(zip(self.up_blocks, self.up_attentions)):
            for block in blocks:
                h = block(torch.cat([h, skips.pop()], dim=1), time_embedding)
            h = attention(h, embedding.vectors, embedding.mask, record)
            if index < len(self.upsamples):
                h = self.upsamples[index](h)

        return check_finite(self.conv_out(F.silu(self.norm_out(h))), "out")


class Denoiser(nn.Module):
    """
    The noise predictor epsilon_theta(z_t, P, t) with text conditioning through recordable cross-attention.
    """

    def __init__(self, config: ModelConfig, vocabulary_size: int):
        """
        Constructor of the Denoiser class.

        Parameters
        ----------
        config : ModelConfig
            Architecture hyper-parameters.
        vocabulary_size : int
            Number of token ids, null token included.
        """
        super().__init__()
        self.config = config
        self.embedder = TokenEmbedder(vocabulary_size, config.context_dim, config.max_tokens)
        self.time_embedding = TimeEmbedding(config.time_dim)
        self.encoder = UNetEncoder(config)
        self.decoder = UNetDecoder(config, self.encoder.skip_channels)

    @property
    def block_resolutions(self) -> List[int]:
        """
        Resolution of every skip connection followed by the middle block's.
        """
        size = self.config.image_size
        return [size // scale for scale in self.encoder.skip_scales] + [size // self.encoder.mid_scale]

    def embed_tokens(self, tokens: Tokens) -> TextEmbedding:
        return self.embedder.embed(tokens)

    def timestep_tensor(self, t: Union[int, torch.Tensor], batch_size: int) -> torch.Tensor:
        if isinstance(t, torch.Tensor):
            return t.reshape(-1).expand(batch_size) if t.numel() == 1 else t
        return torch.full((batch_size,), int(t), dtype=torch.long)

    def forward(
            self,
            z_t: torch.Tensor,
            t: Union[int, torch.Tensor],
            embedding: TextEmbedding,
            residuals: Optional[Sequence[torch.Tensor]] = None,
            record: Optional[AttentionRecord] = None
    ) -> torch.Tensor:
        """
        Predict the noise of z_t. Control residuals, when given, are added to the skip connections and to the middle
        block output.

        Parameters
        ----------
        z_t : torch.Tensor
            Noisy images (B, C, H, W).
        t : Union[int, torch.Tensor]
            Training timestep, or one per batch element.
        embedding : TextEmbedding
            Prompt embedding.
        residuals : Optional[Sequence[torch.Tensor]]
            One residual per skip connection, then one for the middle block.
        record : Optional[AttentionRecord]
            Record collecting the cross-attention maps.

        Returns
        -------
        epsilon_hat : torch.Tensor
            Predicted noise (B, C, H, W).
        """
        time_embedding = self.time_embedding(self.timestep_tensor(t, z_t.shape[0]).to(z_t.device))
        skips, h = self.encoder(z_t, time_embedding, embedding, record)
        if residuals is not None:
            skips = [skip + residual for skip, residual in zip(skips, residuals[:-1])]
            h = h + residuals[-1]

        return self.decoder(h, skips, time_embedding, embedding, record)

    def unet_forward(
            self,
            z_t: torch.Tensor,
            embedding: TextEmbedding,
            t: Union[int, torch.Tensor],
            record_attention: bool = False
    ) -> Tuple[torch.Tensor, Optional[AttentionRecord]]:
        """
        Predict the noise of z_t, optionally recording the denoiser's cross-attention maps (A_s).

        Returns
        -------
        epsilon_hat, record : Tuple[torch.Tensor, Optional[AttentionRecord]]
            Predicted noise and attention record (None when not recording).
        """
        record = AttentionRecord(AttentionRecord.DENOISER) if record_attention else None

        return self(z_t, t, embedding, record=record), record
