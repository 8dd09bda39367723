"""Tiny convolutional denoiser with optional single cross-attention block.

The network predicts the noise component of x_t. Activations are applied
functionally so that forward hooks on the conv submodules observe
pre-activation values. Layer names are stable and used by the trace and
sensitivity tooling: conv_in, down1.conv1/.conv2, downsample,
down2.conv1/.conv2, attn, mid.conv1/.conv2, upsample, up1.conv1/.conv2,
conv_out.
"""

from __future__ import annotations

import copy
import io
import json
import math
from dataclasses import asdict, dataclass, field

import torch
from torch import nn
from torch.nn import functional as F

from .errors import ParameterError, ShapeError
from .schedule import NoiseSchedule


@dataclass(frozen=True)
class DenoiserArch:
    channels: int = 3
    image_size: int = 16
    base_width: int = 32
    time_dim: int = 64
    conditional: bool = False
    text_dim: int = 128
    cross_attention: bool = False
    attn_dim: int = 32

    def validate(self):
        if self.image_size % 2 != 0:
            raise ParameterError("image_size must be even (one downsample level)")
        if self.cross_attention and not self.conditional:
            raise ParameterError("cross attention requires a conditional model")


def sinusoidal_embedding(t: torch.Tensor, dim: int) -> torch.Tensor:
    """Standard sin/cos timestep features, shape (B, dim)."""
    half = dim // 2
    freqs = torch.exp(-math.log(10000.0) * torch.arange(half, dtype=torch.float32) / max(half - 1, 1))
    angles = t.to(torch.float32)[:, None] * freqs[None, :]
    emb = torch.cat([torch.sin(angles), torch.cos(angles)], dim=-1)
    if dim % 2 == 1:
        emb = F.pad(emb, (0, 1))
    return emb


def _init_conv(conv: nn.Module, generator, zero: bool = False):
    with torch.no_grad():
        if zero:
            conv.weight.zero_()
        else:
            fan_in = conv.weight[0].numel()
            conv.weight.copy_(torch.randn(conv.weight.shape, generator=generator)
                              * math.sqrt(2.0 / fan_in))
        if conv.bias is not None:
            conv.bias.zero_()


class ResBlock(nn.Module):
    def __init__(self, c_in: int, c_out: int, time_dim: int):
        super().__init__()
        self.conv1 = nn.Conv2d(c_in, c_out, 3, padding=1)
        self.conv2 = nn.Conv2d(c_out, c_out, 3, padding=1)
        self.emb_proj = nn.Linear(time_dim, c_out)
        self.skip = nn.Conv2d(c_in, c_out, 1) if c_in != c_out else nn.Identity()

    def forward(self, x: torch.Tensor, emb: torch.Tensor) -> torch.Tensor:
        h = self.conv1(x)
        h = h + self.emb_proj(emb)[:, :, None, None]
        h = F.silu(h)
        h = F.silu(self.conv2(h))
        return h + self.skip(x)


class CrossAttention(nn.Module):
    """Single-head cross attention over a token sequence.

    When ``self.record`` is set, the last softmax map (B, HW, L) is kept
    in ``self.last_map`` without altering the output.
    """

    def __init__(self, c: int, text_dim: int, attn_dim: int):
        super().__init__()
        self.to_q = nn.Conv2d(c, attn_dim, 1)
        self.to_k = nn.Linear(text_dim, attn_dim, bias=False)
        self.to_v = nn.Linear(text_dim, attn_dim, bias=False)
        self.to_out = nn.Conv2d(attn_dim, c, 1)
        self.scale = attn_dim ** -0.5
        self.record = False
        self.last_map: torch.Tensor | None = None

    def forward(self, x, text_seq, text_mask):
        b, _, h, w = x.shape
        q = self.to_q(x).reshape(b, -1, h * w).transpose(1, 2)          # (B, HW, A)
        k = self.to_k(text_seq)                                          # (B, L, A)
        v = self.to_v(text_seq)
        logits = torch.bmm(q, k.transpose(1, 2)) * self.scale            # (B, HW, L)
        if text_mask is not None:
            logits = logits.masked_fill(~text_mask[:, None, :], float("-inf"))
        attn = torch.softmax(logits, dim=-1)
        if self.record:
            self.last_map = attn.detach().clone()
        out = torch.bmm(attn, v).transpose(1, 2).reshape(b, -1, h, w)
        return x + self.to_out(out)


class Denoiser(nn.Module):
    """Noise-prediction network; output shape always equals input shape."""

    def __init__(self, arch: DenoiserArch, seed: int = 0):
        super().__init__()
        arch.validate()
        self.arch = arch
        w = arch.base_width
        td = arch.time_dim
        self.time_mlp = nn.Sequential(nn.Linear(td, td), nn.SiLU(), nn.Linear(td, td))
        self.text_proj = nn.Linear(arch.text_dim, td) if arch.conditional else None
        self.conv_in = nn.Conv2d(arch.channels, w, 3, padding=1)
        self.down1 = ResBlock(w, w, td)
        self.downsample = nn.Conv2d(w, 2 * w, 3, stride=2, padding=1)
        self.down2 = ResBlock(2 * w, 2 * w, td)
        self.attn = (CrossAttention(2 * w, arch.text_dim, arch.attn_dim)
                     if arch.cross_attention else None)
        self.mid = ResBlock(2 * w, 2 * w, td)
        self.upsample = nn.ConvTranspose2d(2 * w, w, 4, stride=2, padding=1)
        self.up1 = ResBlock(2 * w, w, td)
        self.conv_out = nn.Conv2d(w, arch.channels, 3, padding=1)
        self._reset(seed)

    def _reset(self, seed: int):
        g = torch.Generator().manual_seed(seed)
        for m in self.modules():
            if isinstance(m, (nn.Conv2d, nn.ConvTranspose2d)):
                _init_conv(m, g, zero=(m is self.conv_out))
            elif isinstance(m, nn.Linear):
                with torch.no_grad():
                    fan_in = m.weight.shape[1]
                    m.weight.copy_(torch.randn(m.weight.shape, generator=g)
                                   / math.sqrt(fan_in))
                    if m.bias is not None:
                        m.bias.zero_()

    @property
    def conditional(self) -> bool:
        return self.arch.conditional

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())

    def time_embedding(self, t, text_pooled=None):
        emb = self.time_mlp(sinusoidal_embedding(t, self.arch.time_dim))
        if self.text_proj is not None and text_pooled is not None:
            emb = emb + self.text_proj(text_pooled)
        return emb

    def forward(self, x: torch.Tensor, t: torch.Tensor,
                text_seq: torch.Tensor | None = None,
                text_pooled: torch.Tensor | None = None,
                text_mask: torch.Tensor | None = None) -> torch.Tensor:
        if x.ndim != 4 or x.shape[1] != self.arch.channels:
            raise ShapeError(f"expected (B,{self.arch.channels},H,W), got {tuple(x.shape)}")
        if t.ndim == 0:
            t = t.expand(x.shape[0])
        emb = self.time_embedding(t, text_pooled)
        h0 = F.silu(self.conv_in(x))
        h1 = self.down1(h0, emb)
        h2 = F.silu(self.downsample(h1))
        h2 = self.down2(h2, emb)
        if self.attn is not None and text_seq is not None and text_seq.shape[1] > 0:
            h2 = self.attn(h2, text_seq, text_mask)
        h2 = self.mid(h2, emb)
        h3 = F.silu(self.upsample(h2))
        h3 = self.up1(torch.cat([h3, h1], dim=1), emb)
        return self.conv_out(h3)

    def clone(self) -> "Denoiser":
        return copy.deepcopy(self)

    def conv_layer_names(self) -> list[str]:
        return [name for name, m in self.named_modules() if isinstance(m, nn.Conv2d)]


def save_checkpoint(path, model: Denoiser, sched: NoiseSchedule,
                    extra: dict | None = None) -> None:
    payload = {
        "arch": asdict(model.arch),
        "state": {k: v.clone() for k, v in model.state_dict().items()},
        "schedule": sched.as_dict(),
        "extra": extra or {},
    }
    torch.save(payload, path)


def load_checkpoint(path):
    payload = torch.load(path, map_location="cpu", weights_only=False)
    arch = DenoiserArch(**payload["arch"])
    model = Denoiser(arch, seed=0)
    expected = model.state_dict()
    for key, tensor in payload["state"].items():
        if key not in expected:
            raise ShapeError(f"checkpoint has unexpected tensor {key!r}")
        if tuple(expected[key].shape) != tuple(tensor.shape):
            raise ShapeError(
                f"checkpoint tensor {key!r} has shape {tuple(tensor.shape)}, "
                f"arch expects {tuple(expected[key].shape)}")
    model.load_state_dict(payload["state"])
    sched = NoiseSchedule.from_dict(payload["schedule"])
    return model, sched, payload["extra"]
