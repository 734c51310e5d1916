# services/infill/model.py

import math
from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np
import torch
import torch.nn as nn

from config import TTSConfig
from models.infill import ExtendedCharSeq
from services.errors import ShapeError
from services.flow.base import TimeLike, VelocityModel
from services.infill.vocab import FILLER_ID


class TimestepEmbedding(nn.Module):
    """Sinusoidal features of the flow step followed by a small MLP."""

    def __init__(self, dim: int, freq_dim: int = 256, scale: float = 1000.0):
        super().__init__()
        self.freq_dim = freq_dim
        self.scale = scale
        self.mlp = nn.Sequential(nn.Linear(freq_dim, dim), nn.SiLU(), nn.Linear(dim, dim))

    def forward(self, t: torch.Tensor) -> torch.Tensor:
        half = self.freq_dim // 2
        exponent = torch.arange(half, dtype=t.dtype, device=t.device) / (half - 1)
        freqs = torch.exp(-math.log(10000.0) * exponent)
        args = self.scale * t.unsqueeze(-1) * freqs
        return self.mlp(torch.cat([args.sin(), args.cos()], dim=-1))


class ConvPositionEmbedding(nn.Module):
    def __init__(self, dim: int, kernel_size: int, groups: int):
        super().__init__()
        self.conv = nn.Sequential(
            nn.Conv1d(dim, dim, kernel_size, groups=groups, padding=kernel_size // 2),
            nn.Mish(),
            nn.Conv1d(dim, dim, kernel_size, groups=groups, padding=kernel_size // 2),
            nn.Mish(),
        )

    def forward(self, x: torch.Tensor, padding_mask: Optional[torch.Tensor] = None) -> torch.Tensor:
        if padding_mask is not None:
            x = x.masked_fill(padding_mask.unsqueeze(-1), 0.0)
        out = self.conv(x.transpose(1, 2)).transpose(1, 2)
        if padding_mask is not None:
            out = out.masked_fill(padding_mask.unsqueeze(-1), 0.0)
        return out


class InfillTransformer(nn.Module):
    """
    Text-guided infilling network.

    [x_t ; acoustic context ; embedded z] -> linear -> conv positions
    -> transformer encoder with the flow step added to every frame -> mel velocity.
    """

    def __init__(self, n_mels: int, vocab_size: int, config: TTSConfig):
        super().__init__()
        self.n_mels = n_mels
        self.vocab_size = vocab_size
        self.config = config
        d_model = config.d_model

        self.text_embed = nn.Embedding(vocab_size, config.text_dim)
        self.input_proj = nn.Linear(2 * n_mels + config.text_dim, d_model)
        self.conv_pos = ConvPositionEmbedding(d_model, config.conv_pos_kernel, groups=config.n_heads)
        self.time_embed = TimestepEmbedding(d_model)
        layer = nn.TransformerEncoderLayer(
            d_model=d_model,
            nhead=config.n_heads,
            dim_feedforward=4 * d_model,
            dropout=config.dropout,
            activation="gelu",
            batch_first=True,
            norm_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, config.n_layers, enable_nested_tensor=False)
        self.norm = nn.LayerNorm(d_model)
        self.output = nn.Linear(d_model, n_mels)

    def forward(
        self,
        x_t: torch.Tensor,
        context: torch.Tensor,
        text_ids: torch.Tensor,
        t: TimeLike,
        padding_mask: Optional[torch.Tensor] = None,
    ) -> torch.Tensor:
        if x_t.shape != context.shape or text_ids.shape != x_t.shape[:2]:
            raise ShapeError(
                "x_t, context and text ids must cover the same frames",
                {
                    "x_t": tuple(x_t.shape),
                    "context": tuple(context.shape),
                    "text_ids": tuple(text_ids.shape),
                },
            )
        if not torch.is_tensor(t) or t.ndim == 0:
            t = torch.full((x_t.shape[0],), float(t), dtype=x_t.dtype, device=x_t.device)

        h = self.input_proj(torch.cat([x_t, context, self.text_embed(text_ids)], dim=-1))
        h = h + self.conv_pos(h, padding_mask)
        h = h + self.time_embed(t.to(x_t.dtype)).unsqueeze(1)
        h = self.encoder(h, src_key_padding_mask=padding_mask)
        return self.output(self.norm(h))


@dataclass(frozen=True)
class InfillCondition:
    context: torch.Tensor
    text_ids: torch.Tensor
    padding_mask: Optional[torch.Tensor] = None

    def drop_text(self, which: Optional[torch.Tensor] = None) -> "InfillCondition":
        """Replace the text ids with filler, for all items or the ones flagged in `which`."""
        if which is None:
            return replace(self, text_ids=torch.full_like(self.text_ids, FILLER_ID))
        dropped = self.text_ids.masked_fill(which.to(torch.bool).unsqueeze(-1), FILLER_ID)
        return replace(self, text_ids=dropped)


class InfillVelocityModel(VelocityModel):
    """Adapts InfillTransformer to the solver; the null branch keeps audio and drops text."""

    def __init__(self, network: InfillTransformer):
        self.network = network

    def evaluate(self, x_t: torch.Tensor, t: TimeLike, cond: InfillCondition) -> torch.Tensor:
        return self.network(x_t, cond.context, cond.text_ids, t, cond.padding_mask)

    def null_condition(self, cond: InfillCondition) -> InfillCondition:
        return cond.drop_text()


@torch.no_grad()
def infill_forward(
    model: InfillTransformer,
    x_t: torch.Tensor,
    acoustic_context: torch.Tensor,
    z: Union[ExtendedCharSeq, np.ndarray, torch.Tensor],
    t: TimeLike,
) -> torch.Tensor:
    """Velocity for one example (T x n_mels) or a batch (B x T x n_mels), in inference mode."""
    ids = z.ids if isinstance(z, ExtendedCharSeq) else z
    ids = torch.as_tensor(ids, dtype=torch.long)
    single = x_t.ndim == 2
    if single:
        x_t, acoustic_context, ids = x_t.unsqueeze(0), acoustic_context.unsqueeze(0), ids.unsqueeze(0)
    if ids.shape[-1] != x_t.shape[-2]:
        raise ShapeError(
            "extended character sequence length differs from the frame count",
            {"z": ids.shape[-1], "frames": x_t.shape[-2]},
        )
    model.eval()
    velocity = model(x_t, acoustic_context, ids, t)
    return velocity[0] if single else velocity
