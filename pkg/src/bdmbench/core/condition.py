"""Batch conditioning helpers: pad prompt batches and build attention masks."""

from __future__ import annotations

import torch

from .text import TextEncoder, TextPrompt


def encode_prompt_batch(prompts: list[TextPrompt], encoder: TextEncoder):
    """Encode a list of prompts into padded (seq, pooled, mask) tensors.

    seq: (B, L_max, D) with padding positions zeroed; mask: (B, L_max) bool.
    """
    lengths = torch.tensor([len(p.tokens) for p in prompts], dtype=torch.long)
    l_max = max(1, int(lengths.max().item()) if len(prompts) else 1)
    tokens = torch.zeros(len(prompts), l_max, dtype=torch.long)
    for i, p in enumerate(prompts):
        if p.tokens:
            tokens[i, : len(p.tokens)] = torch.tensor(p.tokens, dtype=torch.long)
    seq, pooled = encoder(tokens, lengths)
    mask = torch.arange(l_max)[None, :] < lengths[:, None]
    return seq, pooled, mask


def broadcast_condition(prompt: TextPrompt | None, encoder: TextEncoder | None, n: int):
    """Encode a single prompt and broadcast it across a batch of size n."""
    if prompt is None or encoder is None:
        return None, None, None
    seq, pooled, mask = encode_prompt_batch([prompt], encoder)
    return (seq.expand(n, -1, -1).contiguous(),
            pooled.expand(n, -1).contiguous(),
            mask.expand(n, -1).contiguous())
