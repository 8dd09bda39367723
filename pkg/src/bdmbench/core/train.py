"""Plain denoising training loop (the clean, utility-only baseline).

The loop is bit-reproducible for a fixed seed: every random draw comes
from one local generator and the input model is never mutated (training
operates on a clone).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import torch

from .condition import encode_prompt_batch
from .errors import ParameterError, TrainingDivergedError
from .model import Denoiser
from .schedule import NoiseSchedule
from .text import TextEncoder, TextPrompt
from .types import ImageBatch


@dataclass
class OptimizerConfig:
    lr: float = 2e-3
    betas: tuple = (0.9, 0.999)
    batch_size: int = 32
    weight_decay: float = 0.0


@dataclass
class TrainResult:
    model: Denoiser
    encoder: TextEncoder | None
    history: list = field(default_factory=list)


def _draw_batch(images: torch.Tensor, batch_size: int, generator) -> torch.Tensor:
    n = images.shape[0]
    return torch.randint(0, n, (min(batch_size, n),), generator=generator)


def denoising_loss(model: Denoiser, x0: torch.Tensor, sched: NoiseSchedule,
                   generator, cond=None) -> torch.Tensor:
    """One-batch epsilon-prediction MSE at uniformly drawn timesteps."""
    b = x0.shape[0]
    t = torch.randint(0, sched.T, (b,), generator=generator)
    eps = torch.randn(x0.shape, generator=generator)
    abar = torch.from_numpy(sched.alpha_bars).to(torch.float32)[t]
    x_t = abar.sqrt().view(-1, 1, 1, 1) * x0 + (1 - abar).sqrt().view(-1, 1, 1, 1) * eps
    seq = pooled = mask = None
    if cond is not None:
        seq, pooled, mask = cond
    pred = model(x_t, t.to(torch.float32), text_seq=seq, text_pooled=pooled, text_mask=mask)
    return torch.mean((pred - eps) ** 2)


def train_denoiser(model: Denoiser, dataset, sched: NoiseSchedule, steps: int,
                   optimizer_config: OptimizerConfig | None = None,
                   seed: int = 35,
                   encoder: TextEncoder | None = None,
                   prompts: list[TextPrompt] | None = None) -> TrainResult:
    """Train a clone of ``model`` on clean data for ``steps`` steps.

    ``dataset`` is an ImageBatch; conditional models additionally take the
    aligned ``prompts`` list and a text ``encoder`` (trained jointly).
    Raises TrainingDivergedError (with the step index) on a non-finite loss.
    """
    if steps < 1:
        raise ParameterError("steps must be >= 1")
    if not isinstance(dataset, ImageBatch) or len(dataset) == 0:
        raise ParameterError("dataset must be a non-empty ImageBatch")
    cfg = optimizer_config or OptimizerConfig()
    if model.conditional:
        if encoder is None or prompts is None or len(prompts) != len(dataset):
            raise ParameterError("conditional training needs aligned prompts and an encoder")
        encoder = encoder if steps == 0 else _clone_encoder(encoder)

    trained = model.clone()
    params = list(trained.parameters())
    if trained.conditional:
        params += list(encoder.parameters())
    opt = torch.optim.Adam(params, lr=cfg.lr, betas=cfg.betas,
                           weight_decay=cfg.weight_decay)
    generator = torch.Generator().manual_seed(seed)
    images = dataset.data
    history: list[float] = []

    trained.train()
    for step in range(steps):
        idx = _draw_batch(images, cfg.batch_size, generator)
        x0 = images[idx]
        cond = None
        if trained.conditional:
            cond = encode_prompt_batch([prompts[i] for i in idx.tolist()], encoder)
        loss = denoising_loss(trained, x0, sched, generator, cond=cond)
        if not math.isfinite(loss.item()):
            raise TrainingDivergedError(f"loss became non-finite at step {step}", step)
        opt.zero_grad()
        loss.backward()
        opt.step()
        history.append(float(loss.item()))
    trained.eval()
    return TrainResult(model=trained, encoder=encoder if trained.conditional else None,
                       history=history)


def _clone_encoder(encoder: TextEncoder) -> TextEncoder:
    import copy

    return copy.deepcopy(encoder)
