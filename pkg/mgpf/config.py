"""
    @file:              config.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the run configuration of the mgpf package. The configuration is a tree of
                        data classes with defaults for every field, serialized as UTF-8 JSON. Unknown keys are rejected
                        with the dotted name of the offending key.
"""

from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
import json
import logging
import os
from typing import Any, Dict, List, Optional, Set, Type, TypeVar

from mgpf.errors import ConfigInvalid
from mgpf.utils import canonical_digest

_logger = logging.getLogger(__name__)

T = TypeVar("T")

MGPF_HOME = "MGPF_HOME"


def _default_root() -> str:
    return os.environ.get(MGPF_HOME, os.path.join(os.getcwd(), "mgpf_home"))


@dataclass
class PathsConfig:
    """
    Paths used by the commands. Relative paths are resolved against the root.
    """
    root: str = field(default_factory=_default_root)
    dataset: str = "data"
    checkpoints: str = "checkpoints"
    runs: str = "runs"

    def resolve(self, path: str) -> str:
        return path if os.path.isabs(path) else os.path.join(self.root, path)

    @property
    def dataset_dir(self) -> str:
        return self.resolve(self.dataset)

    @property
    def checkpoints_dir(self) -> str:
        return self.resolve(self.checkpoints)

    @property
    def runs_dir(self) -> str:
        return self.resolve(self.runs)


@dataclass
class ScheduleConfig:
    num_train_timesteps: int = 400
    beta_start: float = 1e-4
    beta_end: float = 3e-2
    num_inference_steps: int = 50


@dataclass
class ModelConfig:
    image_size: int = 64
    in_channels: int = 3
    channels: List[int] = field(default_factory=lambda: [32, 64, 64])
    time_dim: int = 128
    context_dim: int = 64
    attention_dim: int = 64
    norm_groups: int = 8
    max_tokens: int = 16
    condition_channels: int = 1
    hint_channels: int = 16


@dataclass
class TrainingConfig:
    denoiser_steps: int = 4000
    control_steps: int = 2000
    batch_size: int = 32
    learning_rate: float = 2e-4
    cfg_dropout: float = 0.1
    held_out_fraction: float = 0.05
    max_held_out_mse: float = 0.5
    classifier_steps: int = 1500
    classifier_samples: int = 3000
    classifier_learning_rate: float = 1e-3


@dataclass
class GuidanceConfig:
    """
    Guidance parameters. The guided window defaults to the first (noisiest) guided_fraction of the inference steps.
    """
    alpha: float = 10.0
    lambda_i: float = 1.0
    lambda_m: float = 0.5
    guided_fraction: float = 0.5
    guided_window: Optional[List[int]] = None
    inner_iters: int = 1
    cfg_scale: float = 5.0
    enable_mc: bool = True
    enable_ll: bool = True
    enable_ml: bool = True
    attention_layers: Optional[List[str]] = None
    control_attention_layers: Optional[List[str]] = None
    attention_floor: float = 1e-8
    attention_source: str = "current"
    alpha_scaling: str = "first_loss"
    unrelated_includes_content_tokens: bool = False
    snapshot_steps: List[int] = field(default_factory=list)

    def window(self, num_steps: int) -> Set[int]:
        """
        Inference timesteps where latent updates apply.

        Parameters
        ----------
        num_steps : int
            Number of inference steps T.

        Returns
        -------
        window : Set[int]
            Guided timesteps, a subset of [1, T].
        """
        if self.guided_window is not None:
            return {t for t in self.guided_window if 1 <= t <= num_steps}

        guided_steps = int(round(num_steps * self.guided_fraction))

        return set(range(num_steps - guided_steps + 1, num_steps + 1))

    @property
    def is_identity(self) -> bool:
        """
        Whether latent updates leave the latent unchanged.
        """
        return self.alpha == 0 or not (self.enable_ll or self.enable_ml)


@dataclass
class BenchmarkConfig:
    train_count: int = 2000
    eval_count: int = 200
    image_size: int = 64
    condition_kind: str = "edge"
    min_size: float = 7.0
    max_size: float = 11.0
    min_gap: float = 3.0
    max_iou: float = 0.0
    max_placement_attempts: int = 200
    trailing_clause_probability: float = 0.5
    attribute_in_clause_probability: float = 0.5


@dataclass
class OracleConfig:
    erosion_radius: int = 2
    background_threshold: float = 0.17
    min_blob_size: int = 20
    confidence_threshold: float = 0.5
    crop_size: int = 24
    classifier_channels: List[int] = field(default_factory=lambda: [16, 32])
    min_accuracy: float = 0.95


@dataclass
class RunConfig:
    paths: PathsConfig = field(default_factory=PathsConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    guidance: GuidanceConfig = field(default_factory=GuidanceConfig)
    benchmark: BenchmarkConfig = field(default_factory=BenchmarkConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    seed: int = 0
    ablation_cases: int = 50
    ablation_seeds: List[int] = field(default_factory=lambda: [0, 1, 2])
    sample_seeds: List[int] = field(default_factory=lambda: [0])
    workers: int = 1

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        """
        Build a run configuration from a (possibly partial) dictionary.

        Parameters
        ----------
        data : Dict[str, Any]
            Configuration dictionary.

        Returns
        -------
        config : RunConfig
            Validated run configuration.
        """
        config = _from_dict(cls, data, prefix="")
        config.validate()

        return config

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        """
        Load a run configuration from a JSON file.

        Parameters
        ----------
        path : str
            Path to the JSON file.

        Returns
        -------
        config : RunConfig
            Validated run configuration.
        """
        if not os.path.exists(path):
            raise ConfigInvalid(f"Given config path {path} does not exist.", path=path)

        with open(path, "r", encoding="utf-8") as json_file:
            try:
                data = json.load(json_file)
            except json.JSONDecodeError as error:
                raise ConfigInvalid(f"Config file {path} is not valid JSON : {error}", path=path) from error

        return cls.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def save(self, path: str) -> None:
        """
        Save the configuration snapshot as UTF-8 JSON.

        Parameters
        ----------
        path : str
            Path to the JSON file.
        """
        with open(path, "w", encoding="utf-8") as json_file:
            json.dump(self.to_dict(), json_file, ensure_ascii=False, indent=4, sort_keys=True)

    def digest(self) -> str:
        return canonical_digest(self.to_dict())

    def replace_guidance(self, **changes: Any) -> "RunConfig":
        return replace(self, guidance=replace(self.guidance, **changes))

    def validate(self) -> None:
        """
        Check the values of the configuration.
        """
        from mgpf.processing.conditions.condition_strategy import ConditionStrategies

        checks = [
            ("schedule.num_train_timesteps", self.schedule.num_train_timesteps >= 1),
            ("schedule.beta_start", 0.0 < self.schedule.beta_start < 1.0),
            ("schedule.beta_end", 0.0 < self.schedule.beta_end < 1.0),
            ("schedule.num_inference_steps",
             1 <= self.schedule.num_inference_steps <= self.schedule.num_train_timesteps),
            ("model.channels", len(self.model.channels) >= 1),
            ("model.image_size", self.model.image_size % (2 ** (len(self.model.channels) - 1)) == 0),
            ("model.max_tokens", self.model.max_tokens >= 1),
            ("guidance.alpha", self.guidance.alpha >= 0),
            ("guidance.lambda_i", self.guidance.lambda_i >= 0),
            ("guidance.lambda_m", self.guidance.lambda_m >= 0),
            ("guidance.cfg_scale", self.guidance.cfg_scale >= 0),
            ("guidance.inner_iters", self.guidance.inner_iters >= 1),
            ("guidance.guided_fraction", 0.0 <= self.guidance.guided_fraction <= 1.0),
            ("guidance.attention_source", self.guidance.attention_source in ("current", "source")),
            ("guidance.alpha_scaling", self.guidance.alpha_scaling in ("first_loss", "none")),
            ("benchmark.condition_kind",
             self.benchmark.condition_kind in ConditionStrategies.get_available_kinds()),
            ("benchmark.min_size", 0 < self.benchmark.min_size <= self.benchmark.max_size),
            ("benchmark.image_size", self.benchmark.image_size == self.model.image_size),
            ("oracle.confidence_threshold", 0.0 <= self.oracle.confidence_threshold <= 1.0),
            ("workers", self.workers >= 1),
            ("ablation_seeds", len(self.ablation_seeds) >= 1),
            ("sample_seeds", len(self.sample_seeds) >= 1)
        ]
        for key, valid in checks:
            if not valid:
                raise ConfigInvalid(f"Invalid value for config key {key}.", key=key)


def _from_dict(cls: Type[T], data: Dict[str, Any], prefix: str) -> T:
    if not isinstance(data, dict):
        raise ConfigInvalid(f"Config key {prefix or '<root>'} must be an object.", key=prefix or "<root>")

    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        dotted_key = f"{prefix}{key}"
        if key not in known:
            raise ConfigInvalid(f"Unknown config key {dotted_key}.", key=dotted_key)

        default = getattr(cls(), key) if not is_dataclass(known[key].type) else None
        if is_dataclass(known[key].type):
            kwargs[key] = _from_dict(known[key].type, value, prefix=f"{dotted_key}.")
        else:
            kwargs[key] = _coerce(value, default, dotted_key)

    return cls(**kwargs)


def _coerce(value: Any, default: Any, key: str) -> Any:
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigInvalid(f"Config key {key} must be a boolean.", key=key)
        return value
    if isinstance(default, int) and not isinstance(value, bool) and isinstance(value, (int, float)):
        if isinstance(value, float) and not value.is_integer():
            raise ConfigInvalid(f"Config key {key} must be an integer.", key=key)
        return int(value)
    if isinstance(default, float) and not isinstance(value, bool) and isinstance(value, (int, float)):
        return float(value)
    if isinstance(default, str) and not isinstance(value, str):
        raise ConfigInvalid(f"Config key {key} must be a string.", key=key)
    if isinstance(default, list) and not isinstance(value, list):
        raise ConfigInvalid(f"Config key {key} must be a list.", key=key)
    if isinstance(default, (int, float)) and not isinstance(value, (int, float)):
        raise ConfigInvalid(f"Config key {key} must be a number.", key=key)

    return value
