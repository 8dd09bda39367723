"""Array carrier types for images and noise.

Model space is [-1, 1]; metric code converts to [0, 1] pixel space at its
own boundary (see :mod:`bdmbench.metrics`). Both carriers are thin wrappers
around a rank-4 float32 torch tensor shaped (batch, channels, height, width).
"""

from __future__ import annotations

import numpy as np
import torch

from .errors import ShapeError


def _as_rank4(data) -> torch.Tensor:
    if isinstance(data, np.ndarray):
        data = torch.from_numpy(np.ascontiguousarray(data))
    if not isinstance(data, torch.Tensor):
        raise ShapeError(f"expected array data, got {type(data).__name__}")
    if data.ndim != 4:
        raise ShapeError(f"expected rank-4 (B,C,H,W) data, got rank {data.ndim}")
    data = data.to(torch.float32)
    if not torch.isfinite(data).all():
        raise ShapeError("batch contains non-finite values")
    return data


class ImageBatch:
    """Rank-4 pixel batch in model space.

    ``clamp`` controls the [-1, 1] range check: raw x0 images keep it on,
    intermediate x_t states disable it (noised values legitimately exceed
    the model-space box).
    """

    def __init__(self, data, clamp: bool = True):
        data = _as_rank4(data)
        if clamp and (data.min() < -1.0 - 1e-5 or data.max() > 1.0 + 1e-5):
            raise ShapeError("image values outside model space [-1, 1]")
        self.data = data

    @property
    def shape(self) -> tuple:
        return tuple(self.data.shape)

    def __len__(self) -> int:
        return self.data.shape[0]

    def to_unit(self) -> torch.Tensor:
        """Convert to [0, 1] pixel space (the metric boundary convention)."""
        return ((self.data.clamp(-1.0, 1.0) + 1.0) / 2.0).to(torch.float32)

    @staticmethod
    def from_unit(pixels) -> "ImageBatch":
        t = _as_rank4(pixels)
        return ImageBatch(t * 2.0 - 1.0)


class NoiseBatch:
    """Rank-4 noise batch, nominally standard normal, same shape contract."""

    def __init__(self, data):
        self.data = _as_rank4(data)

    @property
    def shape(self) -> tuple:
        return tuple(self.data.shape)

    def __len__(self) -> int:
        return self.data.shape[0]

    @staticmethod
    def standard(n: int, channels: int, height: int, width: int,
                 generator: torch.Generator) -> "NoiseBatch":
        return NoiseBatch(torch.randn(n, channels, height, width, generator=generator))
