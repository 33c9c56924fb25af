from dataclasses import replace

import numpy as np
import pytest
import torch

from mgpf.benchmark import Palette
from mgpf.benchmark.generator import TRAIN, case_rng, draft_training_case
from mgpf.config import BenchmarkConfig, ModelConfig, OracleConfig, RunConfig, ScheduleConfig, TrainingConfig
from mgpf.data_model import BenchmarkCase
from mgpf.grammar import parse_prompt
from mgpf.models.control_branch import ControlBranch
from mgpf.models.denoiser import Denoiser
from mgpf.models.diffusion import NoiseSchedule
from mgpf.training.datasets import BenchmarkImageDataset, collate_cases
from mgpf.training.trainers import (NO_SKILL_MSE, predict_noise, train_control_branch, train_denoiser,
                                    train_shape_classifier)
from mgpf.utils import set_determinism

IMAGE_SIZE = 48


def _run_config(**training) -> RunConfig:
    return RunConfig(
        schedule=ScheduleConfig(num_train_timesteps=50, beta_start=1e-3, beta_end=0.2, num_inference_steps=5),
        model=ModelConfig(image_size=IMAGE_SIZE, channels=[8, 8], time_dim=8, context_dim=8, attention_dim=8,
                          norm_groups=4, hint_channels=8),
        training=TrainingConfig(**{"denoiser_steps": 2, "control_steps": 2, "batch_size": 4, "learning_rate": 1e-3,
                                   "held_out_fraction": 0.25, "classifier_steps": 2, "classifier_samples": 20,
                                   **training}),
        benchmark=BenchmarkConfig(image_size=IMAGE_SIZE, min_size=4.0, max_size=6.0, max_placement_attempts=1000),
        oracle=OracleConfig(min_blob_size=5, classifier_channels=[4])
    )


def _schedule(config: RunConfig) -> NoiseSchedule:
    return NoiseSchedule.linear(config.schedule.num_train_timesteps, config.schedule.beta_start,
                                config.schedule.beta_end)


def _training_cases(count, vocabulary):
    config, palette = _run_config().benchmark, Palette()
    cases = []
    for index in range(count):
        draft = draft_training_case(case_rng(0, TRAIN, index), config, vocabulary, palette)
        cases.append(BenchmarkCase(
            case_id=f"{TRAIN}_{index:05d}", split=TRAIN, image=draft.image, condition=draft.condition,
            masks=draft.masks, prompt=draft.prompt,
            parsed_prompt=parse_prompt(draft.prompt, [mask.name for mask in draft.masks], vocabulary),
            expected_pairs=draft.expected_pairs, expected_extra=draft.expected_extra
        ))

    return cases


@pytest.fixture(scope="module")
def dataset(vocabulary):
    return BenchmarkImageDataset(_training_cases(16, vocabulary))


@pytest.fixture(scope="module")
def trained_denoiser(dataset, vocabulary):
    config = _run_config()
    denoiser, _ = train_denoiser(dataset, vocabulary, _schedule(config), config)

    return denoiser


def _state(module):
    return {name: tensor.detach().clone() for name, tensor in module.state_dict().items()}


def _same_state(first, second):
    return first.keys() == second.keys() and all(torch.equal(first[name], second[name]) for name in first)


def _batch(dataset, size=4):
    return collate_cases([dataset[index] for index in range(size)])


class TestDenoiserTraining:

    def test_no_step_keeps_the_initial_weights(self, dataset, vocabulary):
        config = _run_config(denoiser_steps=0)
        denoiser, report = train_denoiser(dataset, vocabulary, _schedule(config), config)

        set_determinism(config.seed)
        initial = Denoiser(config.model, len(vocabulary))

        assert _same_state(_state(denoiser), _state(initial))
        assert report.steps == 0
        assert report.baseline_metric == NO_SKILL_MSE

    def test_one_step_updates_the_weights(self, dataset, vocabulary):
        config = _run_config(denoiser_steps=1)
        denoiser, report = train_denoiser(dataset, vocabulary, _schedule(config), config)

        set_determinism(config.seed)
        initial = Denoiser(config.model, len(vocabulary))

        assert not _same_state(_state(denoiser), _state(initial))
        assert np.isfinite(report.final_loss)

    def test_training_is_seed_deterministic(self, dataset, vocabulary):
        config = _run_config(denoiser_steps=3)
        first, first_report = train_denoiser(dataset, vocabulary, _schedule(config), config)
        second, second_report = train_denoiser(dataset, vocabulary, _schedule(config), config)

        assert _same_state(_state(first), _state(second))
        assert first_report.final_loss == second_report.final_loss
        assert first_report.held_out_metric == second_report.held_out_metric

    @pytest.mark.parametrize("max_held_out_mse, trusted", [(100.0, True), (1e-9, False)])
    def test_trusted_flag_follows_the_held_out_gate(self, dataset, vocabulary, max_held_out_mse, trusted):
        config = _run_config(denoiser_steps=1, max_held_out_mse=max_held_out_mse)
        _, report = train_denoiser(dataset, vocabulary, _schedule(config), config)

        assert report.held_out_metric is not None
        assert report.trusted is trusted
        assert report.to_dict()["trusted"] is trusted

    @pytest.mark.slow
    def test_held_out_mse_beats_the_no_skill_predictor(self, dataset, vocabulary):
        config = _run_config(denoiser_steps=400, batch_size=8, learning_rate=3e-3)
        _, report = train_denoiser(dataset, vocabulary, _schedule(config), config)

        assert report.held_out_metric < 0.5 * NO_SKILL_MSE
        assert report.trusted


class TestControlBranchTraining:

    def test_zero_initialized_branch_predicts_like_the_denoiser(self, dataset, trained_denoiser):
        config = _run_config()
        schedule = _schedule(config)
        branch = ControlBranch.from_denoiser(trained_denoiser).eval()
        trained_denoiser.eval()

        batch = _batch(dataset)
        t = torch.tensor([5, 20, 35, 50])
        noise = torch.randn(batch["image"].shape, generator=torch.Generator().manual_seed(0))
        z_t = schedule.add_noise(batch["image"], t, noise)
        with torch.no_grad():
            fused = predict_noise(trained_denoiser, branch, z_t, t, batch)
            alone = predict_noise(trained_denoiser, None, z_t, t, batch)

        assert torch.equal(fused, alone)
        assert torch.equal(torch.nn.functional.mse_loss(fused, noise), torch.nn.functional.mse_loss(alone, noise))

    def test_no_step_matches_the_denoiser_and_is_not_trusted(self, dataset, trained_denoiser):
        config = _run_config(control_steps=0, max_held_out_mse=100.0)
        _, report = train_control_branch(dataset, trained_denoiser, _schedule(config), config)

        assert report.held_out_metric == report.baseline_metric
        assert not report.trusted

    def test_one_step_updates_the_branch_and_freezes_the_denoiser(self, dataset, trained_denoiser):
        config = _run_config(control_steps=1)
        denoiser_before = _state(trained_denoiser)
        set_determinism(config.seed)
        initial = _state(ControlBranch.from_denoiser(trained_denoiser))

        branch, report = train_control_branch(dataset, trained_denoiser, _schedule(config), config)

        assert not _same_state(_state(branch), initial)
        assert _same_state(_state(trained_denoiser), denoiser_before)
        assert all(not parameter.requires_grad for parameter in trained_denoiser.parameters())
        assert report.kind == "control"

    def test_training_is_seed_deterministic(self, dataset, trained_denoiser):
        config = _run_config(control_steps=2)
        first, first_report = train_control_branch(dataset, trained_denoiser, _schedule(config), config)
        second, second_report = train_control_branch(dataset, trained_denoiser, _schedule(config), config)

        assert _same_state(_state(first), _state(second))
        assert first_report.held_out_metric == second_report.held_out_metric

    def test_branch_above_the_threshold_is_not_trusted(self, dataset, trained_denoiser):
        config = _run_config(control_steps=1, max_held_out_mse=1e-9)
        _, report = train_control_branch(dataset, trained_denoiser, _schedule(config), config)

        assert not report.trusted

    @pytest.mark.slow
    def test_branch_improves_over_the_frozen_denoiser(self, vocabulary):
        dataset = BenchmarkImageDataset(_training_cases(32, vocabulary))
        config = _run_config(denoiser_steps=400, control_steps=300, batch_size=8, learning_rate=3e-3)
        schedule = _schedule(config)
        denoiser, _ = train_denoiser(dataset, vocabulary, schedule, config)
        denoiser_before = _state(denoiser)

        _, report = train_control_branch(dataset, denoiser, schedule,
                                         replace(config, training=replace(config.training, learning_rate=1e-3)))

        assert report.held_out_metric < report.baseline_metric
        assert report.trusted
        assert _same_state(_state(denoiser), denoiser_before)


class TestShapeClassifierTraining:

    @pytest.mark.parametrize("min_accuracy, trusted", [(0.0, True), (1.01, False)])
    def test_trusted_flag_follows_the_accuracy_gate(self, vocabulary, min_accuracy, trusted):
        config = _run_config()
        config = replace(config, oracle=replace(config.oracle, min_accuracy=min_accuracy))

        _, report = train_shape_classifier(vocabulary, config)

        assert report.held_out_metric_name == "accuracy"
        assert 0.0 <= report.held_out_metric <= 1.0
        assert report.trusted is trusted
