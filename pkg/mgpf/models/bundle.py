"""
    @file:              bundle.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the ModelBundle grouping the networks used at sampling time, and the
                        functions that save and load each network as a CheckpointDatabase. Headers carry the digests
                        that tie a checkpoint to its vocabulary, its schedule and, for the control branch, its frozen
                        denoiser.
"""

from dataclasses import asdict, dataclass
import logging
from typing import Any, Dict, Optional

from mgpf.config import ModelConfig
from mgpf.databases.checkpoint_database import CheckpointDatabase
from mgpf.errors import ConfigInvalid
from mgpf.grammar.vocabulary import Vocabulary
from mgpf.models.control_branch import ControlBranch
from mgpf.models.denoiser import Denoiser
from mgpf.models.diffusion import NoiseSchedule
from mgpf.models.shape_classifier import ShapeClassifier
from mgpf.utils import state_dict_digest

_logger = logging.getLogger(__name__)

DENOISER = "denoiser"
CONTROL = "control"
CLASSIFIER = "classifier"


@dataclass
class ModelBundle:
    """
    Networks and schedule used at sampling time. Weights are read-only once bundled.
    """
    denoiser: Denoiser
    control_branch: Optional[ControlBranch]
    schedule: NoiseSchedule
    vocabulary: Vocabulary
    classifier: Optional[ShapeClassifier] = None

    def eval(self) -> "ModelBundle":
        for network in (self.denoiser, self.control_branch, self.classifier):
            if network is not None:
                network.eval()
                network.requires_grad_(False)

        return self


def _check_header(header: Dict[str, Any], kind: str, path: str) -> None:
    if header.get("kind") != kind:
        raise ConfigInvalid(f"Checkpoint {path} holds a {header.get('kind')} while a {kind} was expected.",
                            path=path)


def save_denoiser(
        path: str,
        denoiser: Denoiser,
        schedule: NoiseSchedule,
        vocabulary: Vocabulary,
        extra: Optional[Dict[str, Any]] = None,
        overwrite: bool = False
) -> str:
    """
    Save a denoiser checkpoint.

    Parameters
    ----------
    path : str
        Path to the checkpoint.
    denoiser : Denoiser
        Trained denoiser.
    schedule : NoiseSchedule
        Training schedule.
    vocabulary : Vocabulary
        Vocabulary of the token embedder.
    extra : Optional[Dict[str, Any]]
        Additional header entries (ex: training report).
    overwrite : bool, default = False.
        Overwrite an existing checkpoint.

    Returns
    -------
    path : str
        Path to the written checkpoint.
    """
    state_dict = denoiser.state_dict()
    header = {
        "kind": DENOISER,
        "model": asdict(denoiser.config),
        "vocabulary_digest": vocabulary.digest(),
        "schedule_digest": schedule.digest(),
        "weights_digest": state_dict_digest(state_dict),
        **(extra or {})
    }
    database = CheckpointDatabase(path)
    database.create(header, state_dict, overwrite_database=overwrite)

    return database.path_to_database


def load_denoiser(path: str, schedule: NoiseSchedule, vocabulary: Vocabulary) -> Denoiser:
    """
    Load a denoiser checkpoint, checking that it was trained with the given vocabulary and schedule.

    Parameters
    ----------
    path : str
        Path to the checkpoint.
    schedule : NoiseSchedule
        Training schedule.
    vocabulary : Vocabulary
        Vocabulary.

    Returns
    -------
    denoiser : Denoiser
        Denoiser.
    """
    database = CheckpointDatabase(path)
    header, state_dict = database.load()
    _check_header(header, DENOISER, database.path_to_database)

    if header["vocabulary_digest"] != vocabulary.digest():
        raise ConfigInvalid(f"Checkpoint {database.path_to_database} was trained with another vocabulary.",
                            path=database.path_to_database)
    if header["schedule_digest"] != schedule.digest():
        raise ConfigInvalid(f"Checkpoint {database.path_to_database} was trained with another noise schedule.",
                            key="schedule", path=database.path_to_database)

    denoiser = Denoiser(ModelConfig(**header["model"]), vocabulary_size=len(vocabulary))
    denoiser = denoiser.to(dtype=next(iter(state_dict.values())).dtype)
    denoiser.load_state_dict(state_dict)
    _logger.info(f"Loaded denoiser from {database.path_to_database}.")

    return denoiser


def save_control_branch(
        path: str,
        branch: ControlBranch,
        denoiser: Denoiser,
        extra: Optional[Dict[str, Any]] = None,
        overwrite: bool = False
) -> str:
    state_dict = branch.state_dict()
    header = {
        "kind": CONTROL,
        "model": asdict(branch.config),
        "denoiser_digest": state_dict_digest(denoiser.state_dict()),
        "weights_digest": state_dict_digest(state_dict),
        **(extra or {})
    }
    database = CheckpointDatabase(path)
    database.create(header, state_dict, overwrite_database=overwrite)

    return database.path_to_database


def load_control_branch(path: str, denoiser: Denoiser) -> ControlBranch:
    """
    Load a control branch checkpoint, checking that it was trained against the given frozen denoiser.

    Parameters
    ----------
    path : str
        Path to the checkpoint.
    denoiser : Denoiser
        Frozen denoiser.

    Returns
    -------
    control_branch : ControlBranch
        Control branch.
    """
    database = CheckpointDatabase(path)
    header, state_dict = database.load()
    _check_header(header, CONTROL, database.path_to_database)

    if header["denoiser_digest"] != state_dict_digest(denoiser.state_dict()):
        raise ConfigInvalid(f"Control branch {database.path_to_database} was trained against another denoiser.",
                            path=database.path_to_database)

    branch = ControlBranch(ModelConfig(**header["model"]))
    branch = branch.to(dtype=next(iter(state_dict.values())).dtype)
    branch.load_state_dict(state_dict)
    _logger.info(f"Loaded control branch from {database.path_to_database}.")

    return branch


def save_classifier(
        path: str,
        classifier: ShapeClassifier,
        extra: Optional[Dict[str, Any]] = None,
        overwrite: bool = False
) -> str:
    header = {
        "kind": CLASSIFIER,
        "shapes": classifier.shapes,
        "crop_size": classifier.crop_size,
        "channels": classifier.channels,
        **(extra or {})
    }
    database = CheckpointDatabase(path)
    database.create(header, classifier.state_dict(), overwrite_database=overwrite)

    return database.path_to_database


def load_classifier(path: str) -> ShapeClassifier:
    database = CheckpointDatabase(path)
    header, state_dict = database.load()
    _check_header(header, CLASSIFIER, database.path_to_database)

    classifier = ShapeClassifier(header["shapes"], crop_size=header["crop_size"], channels=header["channels"])
    classifier.load_state_dict(state_dict)
    classifier.eval()

    return classifier


def checkpoint_is_trusted(path: str) -> bool:
    """
    Whether a checkpoint passed the held-out gate of its trainer. Checkpoints without a training report are not
    trusted.

    Parameters
    ----------
    path : str
        Path to the checkpoint.

    Returns
    -------
    trusted : bool
        Trusted flag of the training report stored in the header.
    """
    report = CheckpointDatabase(path).header.get("report") or {}

    return bool(report.get("trusted", False))
