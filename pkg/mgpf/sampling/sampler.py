"""
    @file:              sampler.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the MGPFSampler class. It runs the dual-trajectory sampling loop : a source
                        trajectory stepped with the prompt-only denoiser, and a guided trajectory whose latent is
                        updated by the guidance losses before being stepped with classifier-free guided, mask-gated
                        control. The plain ControlNet-style and denoiser-only loops are kept as references.
"""

from dataclasses import asdict, dataclass, field
import json
import logging
import os
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import torch

from mgpf.config import GuidanceConfig
from mgpf.data_model import ConditionImage, ObjectMask, ParsedPrompt
from mgpf.data_readers.image_reader import write_image
from mgpf.errors import MGPFError
from mgpf.grammar.prompt_parser import parse_prompt
from mgpf.guidance.latent_update import (LossRecord, control_token_positions, denoiser_token_positions,
                                         guidance_objective, scaled_alpha, update_latent)
from mgpf.models.attention import normalize_maps
from mgpf.models.bundle import ModelBundle
from mgpf.models.control_branch import control_forward, fused_forward
from mgpf.processing.masks import MaskSet, build_mask_set

_logger = logging.getLogger(__name__)


@dataclass
class SampleRequest:
    """
    A sampling request.

    Elements
    --------
    prompt : str
        Prompt text.
    condition : ConditionImage
        Visual control.
    masks : List[ObjectMask]
        Masks of the prompt objects aligned with the visual control.
    seed : int
        Seed of the initial noise.
    config : GuidanceConfig
        Guidance configuration.
    case_id : Optional[str]
        Benchmark case identifier.
    """
    prompt: str
    condition: ConditionImage
    masks: List[ObjectMask]
    seed: int = 0
    config: GuidanceConfig = field(default_factory=GuidanceConfig)
    case_id: Optional[str] = None


@dataclass
class SamplingTrace:
    seed: int
    prompt: str
    config: Dict[str, Any]
    alpha: float = 0.0
    steps: List[LossRecord] = field(default_factory=list)
    snapshots: Dict[int, Dict[str, np.ndarray]] = field(default_factory=dict)
    case_id: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "case_id": self.case_id,
            "seed": self.seed,
            "prompt": self.prompt,
            "config": self.config,
            "alpha": self.alpha,
            "steps": [record._asdict() for record in self.steps],
            "snapshot_steps": sorted(self.snapshots)
        }


@dataclass
class SampleResult:
    source_image: np.ndarray
    guided_image: np.ndarray
    trace: SamplingTrace


def combine_guidance(epsilon_uncond: torch.Tensor, epsilon_cond: torch.Tensor, w: float) -> torch.Tensor:
    """
    Classifier-free guidance, written w * epsilon_cond + (1 - w) * epsilon_uncond so that w = 1 and w = 0 return one
    of the predictions exactly.
    """
    return w * epsilon_cond + (1.0 - w) * epsilon_uncond


def cfg_epsilon(
        z_t: torch.Tensor,
        parsed_prompt: ParsedPrompt,
        condition: Optional[ConditionImage],
        mask_set: Optional[MaskSet],
        t: int,
        w: float,
        models: ModelBundle,
        enable_mc: bool = True
) -> torch.Tensor:
    """
    Classifier-free guided noise prediction. The conditional branch is the fused prediction, with masked control
    residuals when enable_mc is set. The unconditional branch uses the null prompt and no control.

    Parameters
    ----------
    z_t : torch.Tensor
        Latent (1, C, H, W).
    parsed_prompt : ParsedPrompt
        Parsed prompt.
    condition : Optional[ConditionImage]
        Visual control. None disables the control branch.
    mask_set : Optional[MaskSet]
        Object masks.
    t : int
        Training timestep.
    w : float
        Guidance scale.
    models : ModelBundle
        Networks.
    enable_mc : bool, default = True.
        Whether to gate the control residuals with the masks.

    Returns
    -------
    epsilon : torch.Tensor
        Guided noise prediction.
    """
    denoiser = models.denoiser
    epsilon_cond, _, _ = fused_forward(
        denoiser,
        models.control_branch,
        z_t,
        denoiser.embed_tokens(parsed_prompt.tokens),
        condition,
        t,
        mask_set=mask_set if enable_mc else None
    )
    epsilon_uncond = denoiser(z_t, t, denoiser.embed_tokens(None))

    return combine_guidance(epsilon_uncond, epsilon_cond, w)


def latent_to_image(z: torch.Tensor) -> np.ndarray:
    """
    Latent in [-1, 1] to an H x W x C image in [0, 1].
    """
    return ((z[0].detach().clamp(-1.0, 1.0) + 1.0) / 2.0).permute(1, 2, 0).cpu().numpy().astype(np.float64)


class MGPFSampler:
    """
    A class used to sample images with mask-guided prompt following.
    """

    def __init__(self, models: ModelBundle, num_steps: int = 50):
        """
        Constructor of the MGPFSampler class.

        Parameters
        ----------
        models : ModelBundle
            Networks and training schedule.
        num_steps : int, default = 50.
            Number of inference steps.
        """
        self.models = models
        self.schedule = models.schedule.respaced(num_steps)

    @property
    def dtype(self) -> torch.dtype:
        return next(self.models.denoiser.parameters()).dtype

    @property
    def image_shape(self) -> tuple:
        config = self.models.denoiser.config
        return 1, config.in_channels, config.image_size, config.image_size

    def initial_noise(self, seed: int) -> torch.Tensor:
        generator = torch.Generator().manual_seed(seed)
        noise = torch.randn(self.image_shape, generator=generator, dtype=torch.float32)

        return noise.to(self.dtype)

    def prepare(self, request: SampleRequest) -> Tuple[ParsedPrompt, MaskSet]:
        """
        Parse the prompt against the mask names and build the mask set at the denoiser's block resolutions.
        """
        size = self.models.denoiser.config.image_size
        parsed_prompt = parse_prompt(request.prompt, [mask.name for mask in request.masks], self.models.vocabulary)
        mask_set = build_mask_set(request.masks, set(self.models.denoiser.block_resolutions), shape=(size, size))

        return parsed_prompt, mask_set

    def _new_trace(self, request: SampleRequest) -> SamplingTrace:
        return SamplingTrace(seed=request.seed, prompt=request.prompt, config=asdict(request.config),
                             case_id=request.case_id)

    def _snapshot(
            self,
            z: torch.Tensor,
            parsed_prompt: ParsedPrompt,
            request: SampleRequest,
            mask_set: MaskSet,
            model_timestep: int
    ) -> Dict[str, np.ndarray]:
        config = request.config
        positions = sorted(set(denoiser_token_positions(parsed_prompt)) | set(parsed_prompt.free_objects))
        _, denoiser_record, _ = fused_forward(
            self.models.denoiser, self.models.control_branch, z,
            self.models.denoiser.embed_tokens(parsed_prompt.tokens), request.condition, model_timestep,
            mask_set=mask_set if config.enable_mc else None, record_attention=True
        )
        maps = normalize_maps(denoiser_record, positions, config.attention_layers, config.attention_floor)

        snapshot = {}
        for position, word_map in maps.items():
            word = parsed_prompt.words[position]
            key = word if word not in snapshot else f"{word}_{position}"
            snapshot[key] = word_map.cpu().numpy()

        return snapshot

    def sample(self, request: SampleRequest) -> SampleResult:
        """
        Dual-trajectory sampling. At each timestep from T to 1, the source latent is stepped with the prompt-only
        denoiser prediction, the guided latent is updated by the guidance losses inside the guided window and then
        stepped with the classifier-free guided fused prediction. Both trajectories start from the same noise.

        Parameters
        ----------
        request : SampleRequest
            Sampling request.

        Returns
        -------
        result : SampleResult
            Source image, guided image and trace.
        """
        config = request.config
        parsed_prompt, mask_set = self.prepare(request)
        denoiser, schedule = self.models.denoiser, self.schedule
        embedding = denoiser.embed_tokens(parsed_prompt.tokens)
        window = config.window(schedule.T) if not config.is_identity else set()

        z = self.initial_noise(request.seed)
        z_source = z.clone()
        trace = self._new_trace(request)
        alpha = None

        t = schedule.T
        try:
            for t in range(schedule.T, 0, -1):
                model_timestep = schedule.model_timestep(t)
                reference_control_maps = None

                with torch.no_grad():
                    epsilon_source, _ = denoiser.unet_forward(z_source, embedding, model_timestep)
                    if t in window and config.attention_source == "source" and parsed_prompt.s1:
                        _, control_record = control_forward(
                            self.models.control_branch, z_source, embedding, request.condition, model_timestep
                        )
                        reference_control_maps = normalize_maps(
                            control_record, control_token_positions(parsed_prompt, config),
                            config.control_attention_layers, config.attention_floor
                        )
                z_source = schedule.denoise_step(z_source, epsilon_source, t)

                if t in window:
                    if alpha is None:
                        first_loss = None
                        if config.alpha_scaling == "first_loss":
                            with torch.no_grad():
                                first_loss = float(guidance_objective(
                                    z, parsed_prompt, request.condition, mask_set, model_timestep, config,
                                    self.models, reference_control_maps=reference_control_maps
                                )[0])
                        alpha = scaled_alpha(config, first_loss)
                        trace.alpha = alpha
                        _logger.debug(f"Guidance step size : {alpha:.6f}.")

                    result = update_latent(
                        z, parsed_prompt, request.condition, mask_set, t, config, self.models, schedule,
                        alpha=alpha, reference_control_maps=reference_control_maps
                    )
                    z = result.z
                    trace.steps.extend(result.losses[:1])

                with torch.no_grad():
                    if t in config.snapshot_steps:
                        trace.snapshots[t] = self._snapshot(z, parsed_prompt, request, mask_set, model_timestep)
                    epsilon = cfg_epsilon(
                        z, parsed_prompt, request.condition, mask_set, model_timestep, config.cfg_scale,
                        self.models, enable_mc=config.enable_mc
                    )
                z = schedule.denoise_step(z, epsilon, t)
        except MGPFError as error:
            error.details.setdefault("timestep", t)
            _logger.error(f"Sampling aborted at timestep {t} : {error}")
            raise

        return SampleResult(source_image=latent_to_image(z_source), guided_image=latent_to_image(z), trace=trace)

    def _single_trajectory(self, request: SampleRequest, condition: Optional[ConditionImage]) -> SampleResult:
        parsed_prompt, mask_set = self.prepare(request)
        z = self.initial_noise(request.seed)
        with torch.no_grad():
            for t in range(self.schedule.T, 0, -1):
                epsilon = cfg_epsilon(
                    z, parsed_prompt, condition, mask_set, self.schedule.model_timestep(t),
                    request.config.cfg_scale, self.models, enable_mc=False
                )
                z = self.schedule.denoise_step(z, epsilon, t)

        image = latent_to_image(z)

        return SampleResult(source_image=image, guided_image=image, trace=self._new_trace(request))

    def sample_controlnet(self, request: SampleRequest) -> SampleResult:
        """
        ControlNet-style baseline : classifier-free guidance with unmasked control, no source trajectory and no latent
        update.
        """
        return self._single_trajectory(request, request.condition)

    def sample_denoiser_only(self, request: SampleRequest) -> SampleResult:
        """
        Classifier-free guided sampling without the control branch.
        """
        return self._single_trajectory(request, None)


def write_sample_outputs(result: SampleResult, path_to_folder: str) -> Dict[str, str]:
    """
    Write source.png, guided.png, trace.json and the attention heat maps attn/<t>_<token>.png of a sample.

    Parameters
    ----------
    result : SampleResult
        Sampling result.
    path_to_folder : str
        Output folder.

    Returns
    -------
    paths : Dict[str, str]
        Paths to the written files.
    """
    os.makedirs(path_to_folder, exist_ok=True)
    paths = {
        "source": os.path.join(path_to_folder, "source.png"),
        "guided": os.path.join(path_to_folder, "guided.png"),
        "trace": os.path.join(path_to_folder, "trace.json")
    }
    write_image(result.source_image, paths["source"])
    write_image(result.guided_image, paths["guided"])
    with open(paths["trace"], "w", encoding="utf-8") as trace_file:
        json.dump(result.trace.to_dict(), trace_file, ensure_ascii=False, indent=4, sort_keys=True)

    for t, snapshot in sorted(result.trace.snapshots.items()):
        for token, heat_map in snapshot.items():
            path = os.path.join(path_to_folder, "attn", f"{t}_{token}.png")
            write_image(heat_map / max(float(heat_map.max()), 1e-12), path)

    return paths
