"""Linear variance schedule and the closed-form forward noising process.

All schedule arrays are float64; per-step quantities follow the usual
DDPM conventions: ``alphas[t] = 1 - betas[t]`` and ``alpha_bars`` is the
running product of ``alphas``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from .errors import ParameterError, ShapeError
from .types import ImageBatch, NoiseBatch


@dataclass(frozen=True)
class NoiseSchedule:
    betas: np.ndarray
    alphas: np.ndarray = field(init=False)
    alpha_bars: np.ndarray = field(init=False)

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=np.float64)
        if betas.ndim != 1 or betas.size < 2:
            raise ParameterError("schedule needs at least two timesteps")
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "alphas", 1.0 - betas)
        object.__setattr__(self, "alpha_bars", np.cumprod(1.0 - betas))

    @property
    def T(self) -> int:
        return int(self.betas.size)

    def as_dict(self) -> dict:
        return {"betas": self.betas.tolist()}

    @staticmethod
    def from_dict(d: dict) -> "NoiseSchedule":
        return NoiseSchedule(np.asarray(d["betas"], dtype=np.float64))


def make_linear_schedule(T: int, beta_start: float, beta_end: float) -> NoiseSchedule:
    """Evenly spaced betas from ``beta_start`` to ``beta_end`` over T steps."""
    if T < 2:
        raise ParameterError(f"T must be >= 2, got {T}")
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ParameterError(
            f"betas must satisfy 0 < start <= end < 1, got ({beta_start}, {beta_end})"
        )
    return NoiseSchedule(np.linspace(beta_start, beta_end, T, dtype=np.float64))


def _per_sample_coeffs(sched: NoiseSchedule, t, batch: int):
    """sqrt(abar_t) and sqrt(1 - abar_t) broadcast to (batch, 1, 1, 1)."""
    t_arr = np.asarray(t, dtype=np.int64)
    if t_arr.ndim == 0:
        t_arr = np.full(batch, int(t_arr))
    if t_arr.shape != (batch,):
        raise ShapeError(f"t must be scalar or length-{batch}, got shape {t_arr.shape}")
    if (t_arr < 0).any() or (t_arr >= sched.T).any():
        raise ParameterError(f"timesteps must lie in [0, {sched.T - 1})")
    abar = sched.alpha_bars[t_arr]
    sq = np.sqrt(abar).astype(np.float32).reshape(-1, 1, 1, 1)
    sq1m = np.sqrt(1.0 - abar).astype(np.float32).reshape(-1, 1, 1, 1)
    return torch.from_numpy(sq), torch.from_numpy(sq1m)


def q_sample(x0: ImageBatch, t, eps: NoiseBatch, sched: NoiseSchedule) -> ImageBatch:
    """Noised sample ``sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps``.

    ``t`` may be a single timestep or one timestep per batch item.
    """
    if x0.data.shape != eps.data.shape:
        raise ShapeError(f"x0 {tuple(x0.data.shape)} vs eps {tuple(eps.data.shape)}")
    sq, sq1m = _per_sample_coeffs(sched, t, x0.data.shape[0])
    return ImageBatch(sq * x0.data + sq1m * eps.data, clamp=False)
