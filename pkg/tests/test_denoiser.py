import pytest
import torch

from mgpf.errors import MissingLayer, MissingToken, NonFiniteActivation, UnknownToken
from mgpf.models.attention import AttentionRecord, normalize_maps

from .conftest import TOY_SIZE


def _tokens(vocabulary, prompt):
    return [vocabulary.token_id(word) for word in prompt.split()]


def test_output_has_the_shape_of_the_input(toy_denoiser, toy_vocabulary, toy_latent):
    embedding = toy_denoiser.embed_tokens(_tokens(toy_vocabulary, "a red circle"))
    with torch.no_grad():
        epsilon_hat, record = toy_denoiser.unet_forward(toy_latent, embedding, 5)

    assert epsilon_hat.shape == toy_latent.shape
    assert record is None


def test_block_resolutions(toy_denoiser):
    assert toy_denoiser.block_resolutions == [8, 8, 4, 4, 2, 2, 2]


def test_raw_attention_maps_sum_to_one_over_tokens(toy_denoiser, toy_vocabulary, toy_latent):
    tokens = _tokens(toy_vocabulary, "a red circle and a blue square")
    embedding = toy_denoiser.embed_tokens(tokens)
    with torch.no_grad():
        _, record = toy_denoiser.unet_forward(toy_latent, embedding, 5, record_attention=True)

    assert record.source == AttentionRecord.DENOISER
    assert set(record.layers) == {"down.0.attn", "down.1.attn", "down.2.attn", "mid.attn", "up.0.attn",
                                  "up.1.attn", "up.2.attn"}
    for layer in record.layers:
        maps = record.maps[layer]
        assert maps.shape[1] == len(tokens)
        assert torch.allclose(maps.sum(dim=1), torch.ones_like(maps.sum(dim=1)), atol=1e-6)
    assert sorted(record.coarsest_layers()) == ["down.2.attn", "mid.attn", "up.0.attn"]
    assert record.resolution_of("up.2.attn") == TOY_SIZE


def test_single_token_attention_is_one_everywhere(toy_denoiser, toy_latent):
    with torch.no_grad():
        _, record = toy_denoiser.unet_forward(toy_latent, toy_denoiser.embed_tokens(None), 5, record_attention=True)

    for maps in record.maps.values():
        assert torch.allclose(maps, torch.ones_like(maps))


def test_normalized_maps_are_distributions(toy_denoiser, toy_vocabulary, toy_latent):
    tokens = _tokens(toy_vocabulary, "a red circle")
    with torch.no_grad():
        _, record = toy_denoiser.unet_forward(toy_latent, toy_denoiser.embed_tokens(tokens), 5,
                                              record_attention=True)

    distributions = normalize_maps(record, [1, 2])
    for distribution in distributions.values():
        assert distribution.shape == (2, 2)
        assert torch.all(distribution > 0)
        assert float(distribution.sum()) == pytest.approx(1.0, abs=1e-9)

    finest = normalize_maps(record, [2], layer_selection=["up.2.attn", "mid.attn"])
    assert finest[2].shape == (TOY_SIZE, TOY_SIZE)


def test_normalized_uniform_and_one_hot_maps():
    record = AttentionRecord(AttentionRecord.CONTROL)
    one_hot = torch.zeros(1, 2, 4, 4, dtype=torch.float64)
    one_hot[0, 0, 1, 2] = 1.0
    one_hot[0, 1] = 0.5
    record.record("mid.attn", one_hot)

    distributions = normalize_maps(record, [0, 1], floor=1e-8)

    assert torch.allclose(distributions[1], torch.full((4, 4), 1 / 16, dtype=torch.float64))
    total = 1.0 + 16 * 1e-8
    assert float(distributions[0][1, 2]) == pytest.approx((1.0 + 1e-8) / total)
    assert float(distributions[0][0, 0]) == pytest.approx(1e-8 / total)


def test_normalize_maps_errors():
    record = AttentionRecord(AttentionRecord.DENOISER)
    with pytest.raises(MissingLayer):
        normalize_maps(record, [0])

    record.record("mid.attn", torch.full((1, 2, 2, 2), 0.5))
    with pytest.raises(MissingToken):
        normalize_maps(record, [2])
    with pytest.raises(MissingLayer):
        normalize_maps(record, [0], layer_selection=["up.9.attn"])


def test_null_prompt_is_the_single_null_token(toy_denoiser):
    for tokens in (None, []):
        embedding = toy_denoiser.embed_tokens(tokens)
        assert embedding.vectors.shape == (1, 1, toy_denoiser.config.context_dim)
        assert embedding.mask.tolist() == [[True]]


def test_embedding_is_deterministic_and_local(toy_denoiser, toy_vocabulary):
    first = toy_denoiser.embed_tokens(_tokens(toy_vocabulary, "a red circle"))
    again = toy_denoiser.embed_tokens(_tokens(toy_vocabulary, "a red circle"))
    other = toy_denoiser.embed_tokens(_tokens(toy_vocabulary, "a blue circle"))

    assert torch.equal(first.vectors, again.vectors)
    assert torch.equal(first.vectors[0, 0], other.vectors[0, 0])
    assert torch.equal(first.vectors[0, 2], other.vectors[0, 2])
    assert not torch.equal(first.vectors[0, 1], other.vectors[0, 1])


def test_batch_embedding_pads_shorter_prompts(toy_denoiser, toy_vocabulary):
    embedding = toy_denoiser.embedder.embed([_tokens(toy_vocabulary, "a red circle"), None])

    assert embedding.vectors.shape[:2] == (2, 3)
    assert embedding.mask.tolist() == [[True, True, True], [True, False, False]]


def test_unknown_token_id(toy_denoiser, toy_vocabulary):
    with pytest.raises(UnknownToken):
        toy_denoiser.embed_tokens([1, len(toy_vocabulary)])


def test_non_finite_input_is_reported(toy_denoiser, toy_vocabulary, toy_latent):
    z_t = toy_latent.clone()
    z_t[0, 0, 0, 0] = float("nan")
    embedding = toy_denoiser.embed_tokens(_tokens(toy_vocabulary, "a red circle"))

    with torch.no_grad(), pytest.raises(NonFiniteActivation):
        toy_denoiser(z_t, 5, embedding)
