import numpy as np
import pytest
import torch
from torch import nn

from mgpf.config import ModelConfig
from mgpf.data_model import ConditionImage, ObjectMask
from mgpf.grammar.vocabulary import Vocabulary
from mgpf.models.bundle import ModelBundle
from mgpf.models.control_branch import ControlBranch
from mgpf.models.denoiser import Denoiser
from mgpf.models.diffusion import NoiseSchedule

TOY_SIZE = 8


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: end-to-end runs of the full pipeline")


@pytest.fixture(scope="session")
def vocabulary() -> Vocabulary:
    return Vocabulary.default()


@pytest.fixture
def toy_vocabulary() -> Vocabulary:
    return Vocabulary([
        ("color", "red"), ("color", "blue"), ("object", "circle"), ("object", "square"), ("object", "star"),
        ("loc", "park"), ("prep", "in"), ("conn", "a"), ("conn", "and"), ("conn", "the"), ("conn", ",")
    ])


@pytest.fixture
def toy_model_config() -> ModelConfig:
    return ModelConfig(image_size=TOY_SIZE, in_channels=3, channels=[8, 8, 8], time_dim=8, context_dim=8,
                       attention_dim=8, norm_groups=4, max_tokens=16, condition_channels=1, hint_channels=8)


@pytest.fixture
def toy_schedule() -> NoiseSchedule:
    return NoiseSchedule.linear(20, 1e-3, 0.2)


def _perturb(module: nn.Module, generator: torch.Generator, std: float = 0.1) -> None:
    with torch.no_grad():
        for parameter in module.parameters():
            parameter.copy_(torch.randn(parameter.shape, generator=generator, dtype=parameter.dtype) * std)


@pytest.fixture
def toy_denoiser(toy_model_config, toy_vocabulary) -> Denoiser:
    torch.manual_seed(0)
    return Denoiser(toy_model_config, len(toy_vocabulary)).double().eval()


@pytest.fixture
def zero_branch(toy_denoiser) -> ControlBranch:
    return ControlBranch.from_denoiser(toy_denoiser).eval()


@pytest.fixture
def toy_branch(toy_denoiser) -> ControlBranch:
    """
    Control branch with nonzero output projections and condition input weights.
    """
    branch = ControlBranch.from_denoiser(toy_denoiser)
    generator = torch.Generator().manual_seed(1)
    for module in [*branch.zero_convs, branch.mid_zero_conv, branch.condition_encoder]:
        _perturb(module, generator)
    with torch.no_grad():
        branch.encoder.conv_in.weight.add_(
            torch.randn(branch.encoder.conv_in.weight.shape, generator=generator, dtype=torch.float64) * 0.1
        )

    return branch.eval()


@pytest.fixture
def toy_models(toy_denoiser, toy_branch, toy_schedule, toy_vocabulary) -> ModelBundle:
    return ModelBundle(denoiser=toy_denoiser, control_branch=toy_branch, schedule=toy_schedule,
                       vocabulary=toy_vocabulary).eval()


@pytest.fixture
def toy_masks():
    circle = np.zeros((TOY_SIZE, TOY_SIZE), dtype=np.uint8)
    circle[1:4, 1:4] = 1
    square = np.zeros((TOY_SIZE, TOY_SIZE), dtype=np.uint8)
    square[4:7, 4:8] = 1

    return [ObjectMask("circle", circle), ObjectMask("square", square)]


@pytest.fixture
def toy_condition() -> ConditionImage:
    rng = np.random.default_rng(3)
    return ConditionImage(grid=(rng.random((1, TOY_SIZE, TOY_SIZE)) > 0.5).astype(np.float64), kind="edge")


@pytest.fixture
def toy_latent() -> torch.Tensor:
    generator = torch.Generator().manual_seed(7)
    return torch.randn((1, 3, TOY_SIZE, TOY_SIZE), generator=generator, dtype=torch.float64)
