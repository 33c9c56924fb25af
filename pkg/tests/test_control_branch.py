import numpy as np
import pytest
import torch

from mgpf.data_model import ObjectMask
from mgpf.errors import ShapeMismatch
from mgpf.models.attention import AttentionRecord
from mgpf.models.control_branch import control_forward, fused_forward, mask_residuals
from mgpf.processing.masks import build_mask_set

from .conftest import TOY_SIZE


@pytest.fixture
def embedding(toy_denoiser, toy_vocabulary):
    return toy_denoiser.embed_tokens([toy_vocabulary.token_id(word) for word in "a red circle".split()])


def _mask_set(grid, denoiser):
    return build_mask_set([ObjectMask("circle", grid)], denoiser.block_resolutions, shape=(TOY_SIZE, TOY_SIZE))


def test_branch_matches_denoiser_blocks(toy_denoiser, toy_branch):
    assert toy_branch.block_resolutions == toy_denoiser.block_resolutions
    assert len(toy_branch.zero_convs) == len(toy_denoiser.block_resolutions) - 1


def test_zero_initialized_branch_leaves_the_denoiser_unchanged(toy_denoiser, zero_branch, embedding, toy_latent,
                                                                toy_condition):
    with torch.no_grad():
        fused, _, _ = fused_forward(toy_denoiser, zero_branch, toy_latent, embedding, toy_condition, 7)
        alone, _ = toy_denoiser.unet_forward(toy_latent, embedding, 7)

    assert torch.equal(fused, alone)


def test_trained_branch_changes_the_prediction(toy_denoiser, toy_branch, embedding, toy_latent, toy_condition):
    with torch.no_grad():
        fused, _, _ = fused_forward(toy_denoiser, toy_branch, toy_latent, embedding, toy_condition, 7)
        alone, _ = toy_denoiser.unet_forward(toy_latent, embedding, 7)

    assert not torch.allclose(fused, alone)


def test_full_mask_equals_unmasked_control(toy_denoiser, toy_branch, embedding, toy_latent, toy_condition):
    mask_set = _mask_set(np.ones((TOY_SIZE, TOY_SIZE), dtype=np.uint8), toy_denoiser)
    with torch.no_grad():
        masked, _, _ = fused_forward(toy_denoiser, toy_branch, toy_latent, embedding, toy_condition, 7,
                                     mask_set=mask_set)
        unmasked, _, _ = fused_forward(toy_denoiser, toy_branch, toy_latent, embedding, toy_condition, 7)

    assert torch.equal(masked, unmasked)


def test_empty_mask_equals_denoiser_alone(toy_denoiser, toy_branch, embedding, toy_latent, toy_condition):
    mask_set = _mask_set(np.zeros((TOY_SIZE, TOY_SIZE), dtype=np.uint8), toy_denoiser)
    with torch.no_grad():
        masked, _, _ = fused_forward(toy_denoiser, toy_branch, toy_latent, embedding, toy_condition, 7,
                                     mask_set=mask_set)
        alone, _ = toy_denoiser.unet_forward(toy_latent, embedding, 7)

    assert torch.equal(masked, alone)


def test_masked_residuals_vanish_outside_the_mask(toy_denoiser, toy_branch, embedding, toy_latent, toy_condition):
    with torch.no_grad():
        residuals, _ = control_forward(toy_branch, toy_latent, embedding, toy_condition, 7)

    rng = np.random.default_rng(11)
    for _ in range(50):
        grid = (rng.random((TOY_SIZE, TOY_SIZE)) > 0.8).astype(np.uint8)
        mask_set = _mask_set(grid, toy_denoiser)
        masked = mask_residuals(residuals, mask_set)

        assert masked.resolutions == residuals.resolutions
        for original, gated, resolution in zip(residuals.residuals, masked.residuals, masked.resolutions):
            level = torch.as_tensor(mask_set.pyramid_level(resolution)).bool()
            assert bool((gated[..., ~level] == 0).all())
            assert torch.equal(gated[..., level], original[..., level])


def test_control_forward_records_branch_attention(toy_branch, embedding, toy_latent, toy_condition):
    with torch.no_grad():
        residuals, record = control_forward(toy_branch, toy_latent, embedding, toy_condition, 7)

    assert record.source == AttentionRecord.CONTROL
    assert set(record.layers) == {"down.0.attn", "down.1.attn", "down.2.attn", "mid.attn"}
    assert residuals.resolutions == [8, 8, 4, 4, 2, 2, 2]


def test_fused_forward_records_both_networks(toy_denoiser, toy_branch, embedding, toy_latent, toy_condition):
    with torch.no_grad():
        _, denoiser_record, control_record = fused_forward(toy_denoiser, toy_branch, toy_latent, embedding,
                                                           toy_condition, 7, record_attention=True)

    assert denoiser_record.source == AttentionRecord.DENOISER
    assert control_record.source == AttentionRecord.CONTROL
    assert "up.2.attn" in denoiser_record.layers
    assert "up.2.attn" not in control_record.layers


def test_condition_of_the_wrong_shape(toy_branch, embedding, toy_latent):
    with pytest.raises(ShapeMismatch):
        control_forward(toy_branch, toy_latent, embedding, torch.zeros(1, 1, TOY_SIZE // 2, TOY_SIZE // 2), 7)


def test_branch_without_condition_is_ignored(toy_denoiser, toy_branch, embedding, toy_latent):
    with torch.no_grad():
        fused, _, control_record = fused_forward(toy_denoiser, toy_branch, toy_latent, embedding, None, 7,
                                                 record_attention=True)
        alone, _ = toy_denoiser.unet_forward(toy_latent, embedding, 7)

    assert control_record is None
    assert torch.equal(fused, alone)
