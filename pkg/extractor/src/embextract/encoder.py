"""Waveform token encoders and the model registry.

Each encoder patchifies a 1-D waveform into non-overlapping windows,
projects them to the embedding width, and contextualizes them with a
small transformer stack. The output is the token matrix [p, q] the
interchange corpus stores; pooling is deliberately left to consumers so
one inference pass serves several pooling strategies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn

from .errors import ValidationError


@dataclass(frozen=True)
class EncoderSpec:
    """Architecture hyperparameters for one registry entry."""

    embed_dim: int
    patch: int
    heads: int
    layers: int
    ffn_dim: int


MODEL_REGISTRY: dict[str, EncoderSpec] = {
    "wave-transformer-768": EncoderSpec(
        embed_dim=768, patch=16, heads=8, layers=1, ffn_dim=1024),
    "wave-transformer-128": EncoderSpec(
        embed_dim=128, patch=16, heads=4, layers=1, ffn_dim=256),
}

PREPROCESSING_VERSION = "raw-waveform/patch-windows/v1"


def _sinusoidal_positions(n: int, dim: int) -> torch.Tensor:
    position = torch.arange(n, dtype=torch.float32).unsqueeze(1)
    div = torch.exp(torch.arange(0, dim, 2, dtype=torch.float32)
                    * (-math.log(10000.0) / dim))
    table = torch.zeros(n, dim)
    table[:, 0::2] = torch.sin(position * div)
    table[:, 1::2] = torch.cos(position * div)
    return table


class WaveEncoder(nn.Module):
    """Patch projection + sinusoidal positions + transformer encoder."""

    def __init__(self, spec: EncoderSpec):
        super().__init__()
        self.spec = spec
        self.patchify = nn.Conv1d(1, spec.embed_dim, kernel_size=spec.patch,
                                  stride=spec.patch)
        layer = nn.TransformerEncoderLayer(
            d_model=spec.embed_dim, nhead=spec.heads,
            dim_feedforward=spec.ffn_dim, dropout=0.0, batch_first=True,
        )
        self.blocks = nn.TransformerEncoder(layer, num_layers=spec.layers)
        self.norm = nn.LayerNorm(spec.embed_dim)

    def forward(self, waveform: torch.Tensor) -> torch.Tensor:
        """[t] float waveform -> [p, embed_dim] token matrix, p = t // patch."""
        if waveform.ndim != 1:
            raise ValidationError(
                f"waveform must be 1-D, got shape {tuple(waveform.shape)}")
        if waveform.shape[0] < self.spec.patch:
            raise ValidationError(
                f"waveform has {waveform.shape[0]} samples; the {self.spec.patch}"
                f"-sample patch window needs at least one full window")
        tokens = self.patchify(waveform.view(1, 1, -1)).transpose(1, 2)
        tokens = tokens + _sinusoidal_positions(tokens.shape[1],
                                                self.spec.embed_dim)
        return self.norm(self.blocks(tokens)).squeeze(0)


def build_encoder(model_id: str) -> WaveEncoder:
    if model_id not in MODEL_REGISTRY:
        known = ", ".join(sorted(MODEL_REGISTRY))
        raise ValidationError(f"unknown model {model_id!r}; registry has: {known}")
    return WaveEncoder(MODEL_REGISTRY[model_id])
