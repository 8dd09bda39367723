"""Ancestral (DDPM) and DDIM samplers for the toy denoiser.

Sampling is deterministic given (seed, model, config): all randomness is
drawn from a local torch.Generator. When ``init_noise`` is supplied it is
consumed verbatim as the starting x_T, which is how noise-trigger attacks
inject their triggers at inference time.
"""

from __future__ import annotations

import numpy as np
import torch

from .condition import broadcast_condition
from .errors import ParameterError, ShapeError
from .model import Denoiser
from .schedule import NoiseSchedule
from .text import TextEncoder, TextPrompt
from .types import ImageBatch, NoiseBatch

SAMPLERS = ("ancestral", "ddim")


def _prepare_noise(model, sched, n, init_noise, generator):
    size = (n, model.arch.channels, model.arch.image_size, model.arch.image_size)
    if init_noise is not None:
        if init_noise.shape[0] != n:
            raise ShapeError(f"init_noise batch {init_noise.shape[0]} != n {n}")
        if tuple(init_noise.shape) != size:
            raise ShapeError(f"init_noise shape {init_noise.shape} != {size}")
        return init_noise.data.clone()
    return torch.randn(size, generator=generator)


@torch.no_grad()
def sample(model: Denoiser, sched: NoiseSchedule, n: int,
           sampler: str = "ancestral",
           init_noise: NoiseBatch | None = None,
           cond: TextPrompt | None = None,
           encoder: TextEncoder | None = None,
           seed: int = 0,
           ddim_steps: int = 50,
           step_callback=None) -> ImageBatch:
    """Draw n images from the model; see module docstring for contracts."""
    if sampler not in SAMPLERS:
        raise ParameterError(f"unknown sampler {sampler!r}, expected one of {SAMPLERS}")
    if n < 0:
        raise ParameterError("n must be >= 0")
    if n == 0:
        size = (0, model.arch.channels, model.arch.image_size, model.arch.image_size)
        return ImageBatch(torch.zeros(size), clamp=False)
    if cond is not None and not model.conditional:
        raise ParameterError("cond given but model is unconditional")

    generator = torch.Generator().manual_seed(seed)
    x = _prepare_noise(model, sched, n, init_noise, generator)
    seq, pooled, mask = broadcast_condition(cond, encoder, n)
    was_training = model.training
    model.eval()
    try:
        if sampler == "ancestral":
            x = _ancestral(model, sched, x, seq, pooled, mask, generator, step_callback)
        else:
            x = _ddim(model, sched, x, seq, pooled, mask, ddim_steps, step_callback)
    finally:
        model.train(was_training)
    return ImageBatch(x.clamp(-1.0, 1.0))


def _predict(model, x, t_idx, seq, pooled, mask):
    t = torch.full((x.shape[0],), float(t_idx))
    return model(x, t, text_seq=seq, text_pooled=pooled, text_mask=mask)


def _ancestral(model, sched, x, seq, pooled, mask, generator, step_callback):
    betas = sched.betas
    alphas = sched.alphas
    abars = sched.alpha_bars
    for t in range(sched.T - 1, -1, -1):
        eps_hat = _predict(model, x, t, seq, pooled, mask)
        coef = betas[t] / np.sqrt(1.0 - abars[t])
        mean = (x - float(coef) * eps_hat) / float(np.sqrt(alphas[t]))
        if t > 0:
            var = betas[t] * (1.0 - abars[t - 1]) / (1.0 - abars[t])
            noise = torch.randn(x.shape, generator=generator)
            x = mean + float(np.sqrt(var)) * noise
        else:
            x = mean
        if step_callback is not None:
            step_callback(t, x)
    return x


def _ddim(model, sched, x, seq, pooled, mask, steps, step_callback):
    if steps < 1:
        raise ParameterError("ddim_steps must be >= 1")
    steps = min(steps, sched.T)
    ts = np.linspace(0, sched.T - 1, steps).round().astype(int)[::-1]
    abars = sched.alpha_bars
    for i, t in enumerate(ts):
        eps_hat = _predict(model, x, int(t), seq, pooled, mask)
        abar_t = float(abars[t])
        x0_hat = (x - np.sqrt(1.0 - abar_t) * eps_hat) / np.sqrt(abar_t)
        if i + 1 < len(ts):
            abar_prev = float(abars[ts[i + 1]])
            x = np.sqrt(abar_prev) * x0_hat + np.sqrt(1.0 - abar_prev) * eps_hat
        else:
            x = x0_hat
        if step_callback is not None:
            step_callback(int(t), x)
    return x
