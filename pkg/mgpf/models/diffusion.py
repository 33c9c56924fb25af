"""
    @file:              diffusion.py
    @Author:            Maxence Larose

    @Creation Date:     10/2026
    @Last modification: 10/2026

    @Description:       This file contains the NoiseSchedule class : the variance schedule, the forward noising used by
                        training and the deterministic reverse step used by sampling. Timesteps run from 1 to T and the
                        cumulative product of alphas at timestep 0 is 1.
"""

import logging
import math
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np
import torch

from mgpf.errors import ConfigInvalid, NonFiniteInput, TimestepOutOfRange
from mgpf.utils import canonical_digest

_logger = logging.getLogger(__name__)

Timestep = Union[int, torch.Tensor]


class NoiseSchedule:
    """
    A variance schedule. Respaced schedules keep a map from their timesteps to the training timesteps.
    """

    def __init__(
            self,
            betas: Sequence[float],
            timestep_map: Optional[Sequence[int]] = None
    ):
        """
        Constructor of the NoiseSchedule class.

        Parameters
        ----------
        betas : Sequence[float]
            Length-T variances, strictly in (0, 1).
        timestep_map : Optional[Sequence[int]]
            Length-(T + 1) map from the schedule's timesteps to the training timesteps. Defaults to the identity.
        """
        betas = np.asarray(betas, dtype=np.float64)
        if betas.ndim != 1 or len(betas) == 0 or np.any(betas <= 0) or np.any(betas >= 1):
            raise ConfigInvalid("Betas must be a nonempty list of variances strictly in (0, 1).", key="schedule")

        self._betas = betas
        self._alpha_bars = np.concatenate([[1.0], np.cumprod(1.0 - betas)])

        if timestep_map is None:
            timestep_map = list(range(len(betas) + 1))
        if len(timestep_map) != len(betas) + 1:
            raise ConfigInvalid("The timestep map must hold one entry per timestep, timestep 0 included.",
                                key="schedule")
        self._timestep_map = [int(t) for t in timestep_map]

    @classmethod
    def linear(
            cls,
            num_timesteps: int = 400,
            beta_start: float = 1e-4,
            beta_end: float = 3e-2
    ) -> "NoiseSchedule":
        """
        Linear beta schedule.

        Parameters
        ----------
        num_timesteps : int, default = 400.
            Number of timesteps T.
        beta_start : float, default = 1e-4.
            First variance.
        beta_end : float, default = 3e-2.
            Last variance.

        Returns
        -------
        schedule : NoiseSchedule
            Schedule.
        """
        return cls(np.linspace(beta_start, beta_end, num_timesteps))

    def respaced(self, num_steps: int) -> "NoiseSchedule":
        """
        Strided schedule for sampling with fewer steps. Step k maps to an evenly spaced training timestep, and the new
        betas keep the cumulative products of the training schedule at the kept timesteps.

        Parameters
        ----------
        num_steps : int
            Number of inference steps.

        Returns
        -------
        schedule : NoiseSchedule
            Respaced schedule.
        """
        if not 1 <= num_steps <= self.T:
            raise ConfigInvalid(f"Cannot respace a schedule of {self.T} timesteps to {num_steps} steps.",
                                key="schedule.num_inference_steps")

        kept_timesteps = np.unique(np.round(np.linspace(1, self.T, num_steps)).astype(np.int64))
        kept_alpha_bars = np.concatenate([[1.0], self._alpha_bars[kept_timesteps]])
        betas = 1.0 - kept_alpha_bars[1:] / kept_alpha_bars[:-1]
        timestep_map = [self._timestep_map[0]] + [self._timestep_map[t] for t in kept_timesteps]

        return NoiseSchedule(betas, timestep_map=timestep_map)

    @property
    def T(self) -> int:
        return len(self._betas)

    @property
    def betas(self) -> np.ndarray:
        return self._betas.copy()

    @property
    def alpha_bars(self) -> np.ndarray:
        """
        Cumulative products of alphas for timesteps 0..T.
        """
        return self._alpha_bars.copy()

    @property
    def timestep_map(self) -> list:
        return list(self._timestep_map)

    def alpha_bar(self, t: int) -> float:
        return float(self._alpha_bars[t])

    def model_timestep(self, t: int) -> int:
        """
        Training timestep fed to the networks at this schedule's timestep t.
        """
        return self._timestep_map[t]

    def digest(self) -> str:
        return canonical_digest({"betas": self._betas.tolist(), "timestep_map": self._timestep_map})

    def to_dict(self) -> Dict[str, Any]:
        return {"T": self.T, "alpha_bar_T": self.alpha_bar(self.T), "digest": self.digest()}

    def _check_timestep(self, t: Timestep) -> None:
        if isinstance(t, torch.Tensor):
            low, high = int(t.min()), int(t.max())
        else:
            low = high = int(t)
        if low < 1 or high > self.T:
            raise TimestepOutOfRange(f"Timestep {t} is outside [1, {self.T}].", timestep=t, T=self.T)

    def _alpha_bar_like(self, t: Timestep, reference: Any) -> Any:
        if isinstance(t, torch.Tensor):
            alpha_bars = torch.as_tensor(self._alpha_bars, dtype=reference.dtype, device=reference.device)
            return alpha_bars[t.long()].reshape(-1, *([1] * (reference.dim() - 1)))

        return self.alpha_bar(int(t))

    def add_noise(self, x0: Any, t: Timestep, noise: Any) -> Any:
        """
        Forward process : z_t = sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * noise.

        Parameters
        ----------
        x0 : Any
            Clean image array (numpy array or torch tensor).
        t : Timestep
            Timestep in [1, T], or a tensor of one timestep per batch element.
        noise : Any
            Standard-normal array of the same shape.

        Returns
        -------
        z_t : Any
            Noisy array.
        """
        self._check_timestep(t)
        if tuple(x0.shape) != tuple(noise.shape):
            raise ValueError(f"Shapes of x0 {tuple(x0.shape)} and noise {tuple(noise.shape)} do not match.")

        alpha_bar = self._alpha_bar_like(t, x0)
        if isinstance(alpha_bar, float):
            return math.sqrt(alpha_bar) * x0 + math.sqrt(1.0 - alpha_bar) * noise

        return alpha_bar.sqrt() * x0 + (1.0 - alpha_bar).sqrt() * noise

    def predict_x0(self, z_t: Any, epsilon_hat: Any, t: int) -> Any:
        alpha_bar = self.alpha_bar(t)
        return (z_t - math.sqrt(1.0 - alpha_bar) * epsilon_hat) / math.sqrt(alpha_bar)

    def denoise_step(self, z_t: Any, epsilon_hat: Any, t: int) -> Any:
        """
        Deterministic reverse step from timestep t to t - 1.

        Parameters
        ----------
        z_t : Any
            Noisy array at timestep t.
        epsilon_hat : Any
            Predicted noise.
        t : int
            Timestep in [1, T].

        Returns
        -------
        z_previous : Any
            Array at timestep t - 1.
        """
        self._check_timestep(t)
        for name, array in (("z_t", z_t), ("epsilon_hat", epsilon_hat)):
            finite = torch.isfinite(array).all() if isinstance(array, torch.Tensor) else np.isfinite(array).all()
            if not bool(finite):
                raise NonFiniteInput(f"Non-finite values in {name} at timestep {t}.", name=name, timestep=t)

        x0_hat = self.predict_x0(z_t, epsilon_hat, t)
        alpha_bar_previous = self.alpha_bar(t - 1)

        return math.sqrt(alpha_bar_previous) * x0_hat + math.sqrt(1.0 - alpha_bar_previous) * epsilon_hat
