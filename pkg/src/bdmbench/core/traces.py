"""Hook-based trace recording for attention maps and conv activations.

Recording is pure: hooks only copy tensors, never mutate them, and the
sampler's random stream is untouched, so traced and untraced runs emit
identical images.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
from torch import nn
from torch.nn import functional as F

from .errors import ParameterError
from .model import Denoiser
from .sampler import sample
from .schedule import NoiseSchedule
from .text import TextEncoder, TextPrompt
from .types import ImageBatch, NoiseBatch

TRACE_KINDS = ("attention", "activations", "pre_activations")


@dataclass
class SamplingRun:
    """Inputs for one traced sampling run."""

    sched: NoiseSchedule
    n: int = 1
    sampler: str = "ancestral"
    init_noise: NoiseBatch | None = None
    cond: TextPrompt | None = None
    encoder: TextEncoder | None = None
    seed: int = 0
    ddim_steps: int = 50


@dataclass
class CrossAttentionTrace:
    maps: torch.Tensor            # (T_rec, B, HW, L)
    timesteps: list
    token_count: int
    spatial: tuple
    images: ImageBatch | None = None

    @property
    def timestep_count(self) -> int:
        return len(self.timesteps)

    def token_map(self, t_index: int, batch_index: int, token: int) -> torch.Tensor:
        h, w = self.spatial
        return self.maps[t_index, batch_index, :, token].reshape(h, w)


@dataclass
class ActivationTrace:
    records: dict                 # layer name -> (T_rec, B, C, H, W)
    timesteps: list
    kind: str = "activations"
    images: ImageBatch | None = None


def default_probe_layers(model: Denoiser) -> list[str]:
    """First three conv layers along the downsampling path."""
    return ["conv_in", "down1.conv1", "down1.conv2"]


def _resolve_layers(model: Denoiser, layers) -> dict:
    available = dict(model.named_modules())
    resolved = {}
    for name in layers:
        if name not in available or not isinstance(available[name], nn.Conv2d):
            raise ParameterError(f"unknown conv layer {name!r}")
        resolved[name] = available[name]
    return resolved


def record_traces(model: Denoiser, inputs: SamplingRun, which: str,
                  timesteps, layers=None):
    """Run a traced sampling pass and return the requested trace."""
    if which not in TRACE_KINDS:
        raise ParameterError(f"unknown trace kind {which!r}")
    wanted = sorted(set(int(t) for t in timesteps), reverse=True)
    if not wanted:
        raise ParameterError("at least one timestep must be requested")
    if min(wanted) < 0 or max(wanted) >= inputs.sched.T:
        raise ParameterError("requested timesteps outside schedule range")

    if which == "attention":
        if model.attn is None:
            raise ParameterError("model has no cross-attention layer")
        if inputs.cond is None or len(inputs.cond.tokens) == 0:
            raise ParameterError("attention traces need a non-empty prompt")
        return _record_attention(model, inputs, wanted)
    layer_names = layers if layers is not None else default_probe_layers(model)
    modules = _resolve_layers(model, layer_names)
    return _record_activations(model, inputs, wanted, modules, which)


def _record_attention(model, inputs, wanted):
    frames = []
    seen = []
    model.attn.record = True

    def callback(t, _x):
        if t in wanted and model.attn.last_map is not None:
            frames.append(model.attn.last_map.clone())
            seen.append(t)

    try:
        images = _run(model, inputs, callback)
    finally:
        model.attn.record = False
        model.attn.last_map = None
    _check_covered(wanted, seen)
    maps = torch.stack(frames, dim=0)
    hw = maps.shape[2]
    side = int(round(hw ** 0.5))
    return CrossAttentionTrace(maps=maps, timesteps=seen,
                               token_count=maps.shape[-1], spatial=(side, side),
                               images=images)


def _record_activations(model, inputs, wanted, modules, which):
    staged: dict = {}
    collected: dict = {name: [] for name in modules}
    seen = []

    def make_hook(name):
        def hook(_m, _inp, out):
            val = out.detach()
            if which == "activations":
                val = F.silu(val)
            staged[name] = val.clone()
        return hook

    handles = [m.register_forward_hook(make_hook(n)) for n, m in modules.items()]

    def callback(t, _x):
        if t in wanted:
            for name in modules:
                collected[name].append(staged[name])
            seen.append(t)

    try:
        images = _run(model, inputs, callback)
    finally:
        for h in handles:
            h.remove()
    _check_covered(wanted, seen)
    records = {name: torch.stack(v, dim=0) for name, v in collected.items()}
    return ActivationTrace(records=records, timesteps=seen, kind=which, images=images)


def _run(model, inputs: SamplingRun, callback) -> ImageBatch:
    return sample(model, inputs.sched, inputs.n, sampler=inputs.sampler,
                  init_noise=inputs.init_noise, cond=inputs.cond,
                  encoder=inputs.encoder, seed=inputs.seed,
                  ddim_steps=inputs.ddim_steps, step_callback=callback)


def _check_covered(wanted, seen):
    if sorted(seen, reverse=True) != wanted:
        missing = sorted(set(wanted) - set(seen))
        raise ParameterError(
            f"sampler did not visit requested timesteps {missing}; "
            "use timesteps on the sampler's trajectory")
