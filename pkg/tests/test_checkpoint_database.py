import pytest
import torch

from mgpf.databases import CheckpointDatabase
from mgpf.errors import ConfigInvalid, MissingCheckpoint
from mgpf.grammar import Vocabulary
from mgpf.models.bundle import (checkpoint_is_trusted, load_classifier, load_control_branch, load_denoiser,
                                save_classifier, save_control_branch, save_denoiser)
from mgpf.models.diffusion import NoiseSchedule
from mgpf.models.shape_classifier import ShapeClassifier


class TestCheckpointDatabase:

    def test_extension_is_added(self, tmp_path):
        assert CheckpointDatabase(str(tmp_path / "weights")).path_to_database.endswith("weights.h5")

    def test_create_and_load(self, tmp_path):
        database = CheckpointDatabase(str(tmp_path / "nested" / "weights.h5"))
        state_dict = {"layer.weight": torch.arange(6, dtype=torch.float64).reshape(2, 3), "layer.bias": torch.ones(2)}

        database.create({"kind": "test", "steps": 3}, state_dict)
        header, loaded = database.load()

        assert header == {"kind": "test", "steps": 3}
        assert database.header == header
        assert set(loaded) == set(state_dict)
        for name, tensor in state_dict.items():
            assert torch.equal(loaded[name], tensor)
            assert loaded[name].dtype == tensor.dtype

    def test_existing_checkpoint_is_protected(self, tmp_path):
        database = CheckpointDatabase(str(tmp_path / "weights.h5"))
        database.create({"kind": "test"}, {"w": torch.zeros(1)})

        with pytest.raises(FileExistsError):
            database.create({"kind": "test"}, {"w": torch.ones(1)})

        database.create({"kind": "test"}, {"w": torch.ones(1)}, overwrite_database=True)
        assert torch.equal(database.load()[1]["w"], torch.ones(1))

    def test_missing_checkpoint(self, tmp_path):
        with pytest.raises(MissingCheckpoint):
            CheckpointDatabase(str(tmp_path / "missing.h5")).load()


class TestModelCheckpoints:

    def test_denoiser_round_trip(self, tmp_path, toy_denoiser, toy_schedule, toy_vocabulary, toy_latent):
        path = save_denoiser(str(tmp_path / "denoiser.h5"), toy_denoiser, toy_schedule, toy_vocabulary)
        loaded = load_denoiser(path, toy_schedule, toy_vocabulary).eval()

        with torch.no_grad():
            expected = toy_denoiser(toy_latent, 4, toy_denoiser.embed_tokens([1, 3]))
            assert torch.equal(loaded(toy_latent, 4, loaded.embed_tokens([1, 3])), expected)

    def test_denoiser_with_another_schedule_or_vocabulary(self, tmp_path, toy_denoiser, toy_schedule,
                                                          toy_vocabulary):
        path = save_denoiser(str(tmp_path / "denoiser.h5"), toy_denoiser, toy_schedule, toy_vocabulary)

        with pytest.raises(ConfigInvalid):
            load_denoiser(path, NoiseSchedule.linear(30, 1e-3, 0.2), toy_vocabulary)
        with pytest.raises(ConfigInvalid):
            load_denoiser(path, toy_schedule, Vocabulary([("color", "red"), ("object", "circle")]))

    def test_control_branch_is_tied_to_its_denoiser(self, tmp_path, toy_denoiser, toy_branch):
        path = save_control_branch(str(tmp_path / "control.h5"), toy_branch, toy_denoiser)
        loaded = load_control_branch(path, toy_denoiser)

        for name, tensor in toy_branch.state_dict().items():
            assert torch.equal(loaded.state_dict()[name], tensor)

        with torch.no_grad():
            toy_denoiser.encoder.conv_in.bias.add_(1.0)
        with pytest.raises(ConfigInvalid):
            load_control_branch(path, toy_denoiser)

    def test_wrong_checkpoint_kind(self, tmp_path, toy_denoiser, toy_branch, toy_schedule, toy_vocabulary):
        path = save_control_branch(str(tmp_path / "control.h5"), toy_branch, toy_denoiser)

        with pytest.raises(ConfigInvalid):
            load_denoiser(path, toy_schedule, toy_vocabulary)

    def test_classifier_round_trip(self, tmp_path, toy_vocabulary):
        classifier = ShapeClassifier(toy_vocabulary.objects, crop_size=8, channels=[4])
        path = save_classifier(str(tmp_path / "classifier.h5"), classifier, extra={"accuracy": 1.0})

        loaded = load_classifier(path)

        assert loaded.shapes == toy_vocabulary.objects
        assert CheckpointDatabase(path).header["accuracy"] == 1.0
        crops = torch.rand(2, 1, 8, 8)
        with torch.no_grad():
            assert torch.equal(loaded(crops), classifier.eval()(crops))

    @pytest.mark.parametrize("extra, trusted", [
        ({"report": {"trusted": True}}, True),
        ({"report": {"trusted": False}}, False),
        ({"report": {}}, False),
        (None, False)
    ])
    def test_trusted_flag(self, tmp_path, toy_vocabulary, extra, trusted):
        classifier = ShapeClassifier(toy_vocabulary.objects, crop_size=8, channels=[4])
        path = save_classifier(str(tmp_path / "classifier.h5"), classifier, extra=extra)

        assert checkpoint_is_trusted(path) is trusted

    def test_trusted_flag_of_missing_checkpoint(self, tmp_path):
        with pytest.raises(MissingCheckpoint):
            checkpoint_is_trusted(str(tmp_path / "missing.h5"))
