"""
    @file:              trainers.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the training loops of the denoiser (noise prediction with prompt dropout for
                        classifier-free guidance), of the control branch (same objective through the fused prediction,
                        denoiser frozen) and of the shape classifier used by the object generation oracle.
"""

from dataclasses import asdict, dataclass, field
import logging
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn.functional as F
from torch.utils.data import DataLoader, Subset
from tqdm import tqdm

from mgpf.benchmark.oracles import largest_blob_crop
from mgpf.benchmark.scenes import Palette, place_objects, render_scene
from mgpf.config import RunConfig
from mgpf.errors import DivergedLoss
from mgpf.grammar.vocabulary import Vocabulary
from mgpf.models.control_branch import ControlBranch, fused_forward
from mgpf.models.denoiser import Denoiser
from mgpf.models.diffusion import NoiseSchedule
from mgpf.models.shape_classifier import ShapeClassifier
from mgpf.training.datasets import BenchmarkImageDataset, collate_cases
from mgpf.utils import set_determinism

_logger = logging.getLogger(__name__)

CLASSIFIER_STREAM = 2
# Held-out MSE of always predicting zero noise.
NO_SKILL_MSE = 1.0
_LOG_EVERY = 100


@dataclass
class TrainingReport:
    """
    Summary of a training run, stored in the checkpoint header. A checkpoint is trusted when its held-out metric passed
    the gate of its kind. Scoring commands refuse untrusted checkpoints.
    """
    kind: str
    seed: int
    steps: int
    final_loss: float
    held_out_metric: Optional[float] = None
    held_out_metric_name: Optional[str] = None
    baseline_metric: Optional[float] = None
    trusted: bool = False
    loss_curve: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _split_indices(size: int, held_out_fraction: float, generator: torch.Generator) -> Tuple[List[int], List[int]]:
    permutation = torch.randperm(size, generator=generator).tolist()
    held_out_count = int(round(size * held_out_fraction)) if size > 1 else 0
    held_out_count = min(max(held_out_count, 1 if held_out_fraction > 0 and size > 1 else 0), size - 1)

    return permutation[held_out_count:], permutation[:held_out_count]


def _cycle(loader: DataLoader) -> Iterator[Dict[str, Any]]:
    while True:
        for batch in loader:
            yield batch


def _drop_prompts(tokens: Sequence[List[int]], probability: float, generator: torch.Generator) -> List[Any]:
    drops = torch.rand(len(tokens), generator=generator) < probability
    return [None if drop else row for row, drop in zip(tokens, drops.tolist())]


def _noise_batch(
        batch: Dict[str, Any],
        schedule: NoiseSchedule,
        generator: torch.Generator
) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    x0 = batch["image"]
    t = torch.randint(1, schedule.T + 1, (x0.shape[0],), generator=generator)
    noise = torch.randn(x0.shape, generator=generator, dtype=x0.dtype)

    return schedule.add_noise(x0, t, noise), t, noise


def _check_loss(loss: torch.Tensor, step: int, kind: str) -> float:
    value = float(loss.detach())
    if not np.isfinite(value):
        raise DivergedLoss(f"The {kind} training loss diverged at step {step}.", step=step, loss=value)

    return value


def predict_noise(
        denoiser: Denoiser,
        branch: Optional[ControlBranch],
        z_t: torch.Tensor,
        t: torch.Tensor,
        batch: Dict[str, Any],
        tokens: Optional[Sequence[Any]] = None
) -> torch.Tensor:
    """
    Noise prediction of the denoiser alone, or the fused prediction when a control branch is given.

    Parameters
    ----------
    denoiser : Denoiser
        Denoiser.
    branch : Optional[ControlBranch]
        Control branch, or None for the denoiser alone.
    z_t : torch.Tensor
        Noisy images.
    t : torch.Tensor
        Training timesteps.
    batch : Dict[str, Any]
        Collated batch, with the prompts and the conditions.
    tokens : Optional[Sequence[Any]]
        Prompts replacing those of the batch. None entries are null prompts.

    Returns
    -------
    epsilon_hat : torch.Tensor
        Predicted noise.
    """
    embedding = denoiser.embedder.embed(batch["tokens"] if tokens is None else tokens)
    if branch is None:
        return denoiser(z_t, t, embedding)

    return fused_forward(denoiser, branch, z_t, embedding, batch["condition"], t)[0]


def _held_out_mse(
        predict,
        dataset: BenchmarkImageDataset,
        indices: List[int],
        schedule: NoiseSchedule,
        batch_size: int,
        seed: int
) -> Optional[float]:
    if not indices:
        return None

    generator = torch.Generator().manual_seed(seed)
    loader = DataLoader(Subset(dataset, indices), batch_size=batch_size, shuffle=False, collate_fn=collate_cases)
    errors, count = 0.0, 0
    with torch.no_grad():
        for batch in loader:
            z_t, t, noise = _noise_batch(batch, schedule, generator)
            errors += float(F.mse_loss(predict(z_t, t, batch), noise, reduction="sum"))
            count += noise.numel()

    return errors / count


def train_denoiser(
        dataset: BenchmarkImageDataset,
        vocabulary: Vocabulary,
        schedule: NoiseSchedule,
        config: RunConfig
) -> Tuple[Denoiser, TrainingReport]:
    """
    Train the prompt-conditioned denoiser on the noise prediction objective. The prompt is replaced by the null prompt
    with probability cfg_dropout so that the same network also gives the unconditional prediction.

    Parameters
    ----------
    dataset : BenchmarkImageDataset
        Aligned training cases.
    vocabulary : Vocabulary
        Closed vocabulary.
    schedule : NoiseSchedule
        Training schedule.
    config : RunConfig
        Run configuration.

    Returns
    -------
    denoiser, report : Tuple[Denoiser, TrainingReport]
        Trained denoiser and training report.
    """
    training = config.training
    set_determinism(config.seed)
    generator = torch.Generator().manual_seed(config.seed)
    train_indices, held_out_indices = _split_indices(len(dataset), training.held_out_fraction, generator)

    denoiser = Denoiser(config.model, len(vocabulary))
    optimizer = torch.optim.Adam(denoiser.parameters(), lr=training.learning_rate)
    loader = DataLoader(Subset(dataset, train_indices), batch_size=training.batch_size, shuffle=True,
                        generator=generator, collate_fn=collate_cases)
    batches = _cycle(loader)

    _logger.info(f"Training denoiser for {training.denoiser_steps} steps on {len(train_indices)} cases.")
    denoiser.train()
    curve, value = [], float("nan")
    for step in tqdm(range(training.denoiser_steps), desc="denoiser", disable=not _logger.isEnabledFor(logging.INFO)):
        batch = next(batches)
        z_t, t, noise = _noise_batch(batch, schedule, generator)
        tokens = _drop_prompts(batch["tokens"], training.cfg_dropout, generator)

        loss = F.mse_loss(predict_noise(denoiser, None, z_t, t, batch, tokens), noise)
        value = _check_loss(loss, step, "denoiser")

        optimizer.zero_grad()
        loss.backward()
        optimizer.step()

        if step % _LOG_EVERY == 0:
            curve.append(value)
            _logger.debug(f"Denoiser step {step} : loss {value:.5f}")

    denoiser.eval()
    held_out = _held_out_mse(
        lambda z_t, t, batch: predict_noise(denoiser, None, z_t, t, batch),
        dataset, held_out_indices, schedule, training.batch_size, config.seed
    )
    trusted = held_out is not None and held_out <= training.max_held_out_mse
    if not trusted:
        _logger.warning(f"Denoiser held-out MSE {held_out} is not below {training.max_held_out_mse}. The checkpoint "
                        f"is marked untrusted.")

    report = TrainingReport(kind="denoiser", seed=config.seed, steps=training.denoiser_steps, final_loss=value,
                            held_out_metric=held_out, held_out_metric_name="mse", baseline_metric=NO_SKILL_MSE,
                            trusted=trusted, loss_curve=curve)

    return denoiser, report


def train_control_branch(
        dataset: BenchmarkImageDataset,
        denoiser: Denoiser,
        schedule: NoiseSchedule,
        config: RunConfig
) -> Tuple[ControlBranch, TrainingReport]:
    """
    Train the control branch through the fused prediction, the denoiser being frozen. The branch starts as a copy of
    the denoiser's encoder with zero output convolutions, so training starts from the denoiser's predictions.

    Parameters
    ----------
    dataset : BenchmarkImageDataset
        Aligned training cases, with their conditions.
    denoiser : Denoiser
        Trained denoiser.
    schedule : NoiseSchedule
        Training schedule.
    config : RunConfig
        Run configuration.

    Returns
    -------
    control_branch, report : Tuple[ControlBranch, TrainingReport]
        Trained control branch and training report.
    """
    training = config.training
    set_determinism(config.seed)
    generator = torch.Generator().manual_seed(config.seed + 1)
    train_indices, held_out_indices = _split_indices(len(dataset), training.held_out_fraction, generator)

    denoiser.eval()
    denoiser.requires_grad_(False)
    branch = ControlBranch.from_denoiser(denoiser)
    optimizer = torch.optim.Adam(branch.parameters(), lr=training.learning_rate)
    loader = DataLoader(Subset(dataset, train_indices), batch_size=training.batch_size, shuffle=True,
                        generator=generator, collate_fn=collate_cases)
    batches = _cycle(loader)

    _logger.info(f"Training control branch for {training.control_steps} steps on {len(train_indices)} cases.")
    branch.train()
    curve, value = [], float("nan")
    for step in tqdm(range(training.control_steps), desc="control", disable=not _logger.isEnabledFor(logging.INFO)):
        batch = next(batches)
        z_t, t, noise = _noise_batch(batch, schedule, generator)

        tokens = _drop_prompts(batch["tokens"], training.cfg_dropout, generator)

        loss = F.mse_loss(predict_noise(denoiser, branch, z_t, t, batch, tokens), noise)
        value = _check_loss(loss, step, "control branch")

        optimizer.zero_grad()
        loss.backward()
        optimizer.step()

        if step % _LOG_EVERY == 0:
            curve.append(value)
            _logger.debug(f"Control branch step {step} : loss {value:.5f}")

    branch.eval()
    held_out = _held_out_mse(
        lambda z_t, t, batch: predict_noise(denoiser, branch, z_t, t, batch),
        dataset, held_out_indices, schedule, training.batch_size, config.seed
    )
    denoiser_only = _held_out_mse(
        lambda z_t, t, batch: predict_noise(denoiser, None, z_t, t, batch),
        dataset, held_out_indices, schedule, training.batch_size, config.seed
    )
    trusted = held_out is not None and held_out <= training.max_held_out_mse and held_out < denoiser_only
    if not trusted:
        _logger.warning(f"Control branch held-out MSE {held_out} does not improve on the denoiser alone "
                        f"({denoiser_only}) below {training.max_held_out_mse}. The checkpoint is marked untrusted.")

    report = TrainingReport(kind="control", seed=config.seed, steps=training.control_steps, final_loss=value,
                            held_out_metric=held_out, held_out_metric_name="mse", baseline_metric=denoiser_only,
                            trusted=trusted, loss_curve=curve)

    return branch, report


def render_classifier_samples(
        count: int,
        seed: int,
        config: RunConfig,
        vocabulary: Vocabulary,
        palette: Optional[Palette] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Render single-object scenes and crop their silhouettes. The random stream is separate from the benchmark splits.

    Returns
    -------
    crops, labels : Tuple[np.ndarray, np.ndarray]
        (N, crop_size, crop_size) silhouettes and (N,) indexes into vocabulary.objects.
    """
    palette = Palette() if palette is None else palette
    rng = np.random.default_rng([seed, CLASSIFIER_STREAM])
    shapes = vocabulary.objects

    crops, labels = [], []
    for _ in range(count):
        label = int(rng.integers(len(shapes)))
        color = str(rng.choice(palette.names))
        objects = place_objects(rng, [(shapes[label], color)], config.benchmark)
        crop = largest_blob_crop(render_scene(objects, config.benchmark.image_size, palette).image, palette,
                                 config.oracle)
        if crop is not None:
            crops.append(crop)
            labels.append(label)

    return np.stack(crops).astype(np.float32), np.asarray(labels, dtype=np.int64)


def classifier_accuracy(classifier: ShapeClassifier, crops: np.ndarray, labels: np.ndarray) -> float:
    if len(crops) == 0:
        return float("nan")

    with torch.no_grad():
        logits = classifier(torch.from_numpy(crops)[:, None])

    return float((logits.argmax(dim=-1).numpy() == labels).mean())


def train_shape_classifier(
        vocabulary: Vocabulary,
        config: RunConfig,
        palette: Optional[Palette] = None
) -> Tuple[ShapeClassifier, TrainingReport]:
    """
    Train the shape classifier of the object generation oracle on rendered silhouettes and measure its held-out
    accuracy, which should reach oracle.min_accuracy before the oracle is trusted.

    Parameters
    ----------
    vocabulary : Vocabulary
        Closed vocabulary, providing the shapes.
    config : RunConfig
        Run configuration.
    palette : Optional[Palette]
        Color palette.

    Returns
    -------
    classifier, report : Tuple[ShapeClassifier, TrainingReport]
        Trained classifier and training report.
    """
    training = config.training
    set_determinism(config.seed)
    crops, labels = render_classifier_samples(training.classifier_samples, config.seed, config, vocabulary, palette)

    held_out_count = max(1, len(crops) // 5)
    train_crops, train_labels = crops[held_out_count:], labels[held_out_count:]
    held_out_crops, held_out_labels = crops[:held_out_count], labels[:held_out_count]

    classifier = ShapeClassifier(vocabulary.objects, crop_size=config.oracle.crop_size,
                                 channels=config.oracle.classifier_channels)
    optimizer = torch.optim.Adam(classifier.parameters(), lr=training.classifier_learning_rate)
    generator = torch.Generator().manual_seed(config.seed + CLASSIFIER_STREAM)
    inputs, targets = torch.from_numpy(train_crops)[:, None], torch.from_numpy(train_labels)

    _logger.info(f"Training shape classifier for {training.classifier_steps} steps on {len(train_crops)} crops.")
    classifier.train()
    curve, value = [], float("nan")
    for step in tqdm(range(training.classifier_steps), desc="classifier",
                     disable=not _logger.isEnabledFor(logging.INFO)):
        batch = torch.randint(0, len(inputs), (training.batch_size,), generator=generator)
        loss = F.cross_entropy(classifier(inputs[batch]), targets[batch])
        value = _check_loss(loss, step, "shape classifier")

        optimizer.zero_grad()
        loss.backward()
        optimizer.step()

        if step % _LOG_EVERY == 0:
            curve.append(value)

    classifier.eval()
    accuracy = classifier_accuracy(classifier, held_out_crops, held_out_labels)
    trusted = bool(accuracy >= config.oracle.min_accuracy)
    if not trusted:
        _logger.warning(f"Shape classifier held-out accuracy {accuracy:.4f} is below {config.oracle.min_accuracy}. "
                        f"The checkpoint is marked untrusted.")
    else:
        _logger.info(f"Shape classifier held-out accuracy : {accuracy:.4f}")

    report = TrainingReport(kind="classifier", seed=config.seed, steps=training.classifier_steps, final_loss=value,
                            held_out_metric=accuracy, held_out_metric_name="accuracy", trusted=trusted,
                            loss_curve=curve)

    return classifier, report
