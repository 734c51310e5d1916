# services/rate/model.py

from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.nn as nn

from config import MelConfig, PredictorConfig
from models.audio import MelSpectrogram
from models.rate import Granularity, RateCategorySet
from services.errors import ConfigMismatch
from services.rate.categories import build_category_set


def pool_with_scores(
    seq: torch.Tensor, scores: torch.Tensor, padding_mask: Optional[torch.Tensor] = None
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Softmax the per-frame scores over time and return the weighted average of frames."""
    if padding_mask is not None:
        scores = scores.masked_fill(padding_mask, float("-inf"))
    weights = torch.softmax(scores, dim=-1)
    return (seq * weights.unsqueeze(-1)).sum(dim=-2), weights


class AttentionPool(nn.Module):
    def __init__(self, d_model: int, dropout: float = 0.0):
        super().__init__()
        self.score = nn.Sequential(
            nn.Linear(d_model, d_model),
            nn.Tanh(),
            nn.Dropout(dropout),
            nn.Linear(d_model, 1),
        )

    def forward(
        self, seq: torch.Tensor, padding_mask: Optional[torch.Tensor] = None
    ) -> torch.Tensor:
        scores = self.score(seq).squeeze(-1)
        pooled, _ = pool_with_scores(seq, scores, padding_mask)
        return pooled


def attention_pool(
    pool: AttentionPool, seq: torch.Tensor, padding_mask: Optional[torch.Tensor] = None
) -> torch.Tensor:
    """Pool a T x d_model sequence (or a batch of them) into one d_model vector each."""
    return pool(seq, padding_mask)


class RatePredictorModel(nn.Module):
    """
    Speaking-rate classifier over log-mel input.

    mel projection -> two same-padded 1-D convolutions -> transformer encoder
    -> attention pooling -> linear classifier over the rate grid.
    """

    def __init__(
        self,
        n_mels: int,
        categories: RateCategorySet,
        config: PredictorConfig,
        log_floor: float = MelConfig.log_floor,
    ):
        super().__init__()
        self.n_mels = n_mels
        self.categories = categories
        self.config = config
        d_model = config.d_model
        padding = config.conv_kernel // 2

        # maps the log floor to 0 and 0 dB to 1
        self.register_buffer("mel_floor", torch.tensor(float(log_floor)))
        self.mel_proj = nn.Linear(n_mels, d_model)
        self.conv1 = nn.Conv1d(d_model, d_model, config.conv_kernel, padding=padding)
        self.conv2 = nn.Conv1d(d_model, d_model, config.conv_kernel, padding=padding)
        self.activation = nn.GELU()
        layer = nn.TransformerEncoderLayer(
            d_model=d_model,
            nhead=config.n_heads,
            dim_feedforward=4 * d_model,
            dropout=config.dropout,
            batch_first=True,
            norm_first=True,
        )
        self.encoder = nn.TransformerEncoder(
            layer, config.n_layers, enable_nested_tensor=False
        )
        self.norm = nn.LayerNorm(d_model)
        self.pool = AttentionPool(d_model, config.dropout)
        self.classifier = nn.Linear(d_model, categories.n_classes)

    @property
    def granularity(self) -> Granularity:
        return self.categories.granularity

    def logits(
        self, mel: torch.Tensor, padding_mask: Optional[torch.Tensor] = None
    ) -> torch.Tensor:
        if mel.shape[-1] != self.n_mels:
            raise ConfigMismatch(
                "mel width does not match the predictor input",
                {"width": mel.shape[-1], "n_mels": self.n_mels},
            )
        keep = None if padding_mask is None else (~padding_mask).unsqueeze(-1).to(mel.dtype)

        x = (mel - self.mel_floor) / (-self.mel_floor)
        x = self.mel_proj(x)
        if keep is not None:
            x = x * keep
        x = x.transpose(1, 2)
        for conv in (self.conv1, self.conv2):
            x = self.activation(conv(x))
            if keep is not None:
                x = x * keep.transpose(1, 2)
        x = x.transpose(1, 2)

        x = self.encoder(x, src_key_padding_mask=padding_mask)
        x = self.norm(x)
        return self.classifier(self.pool(x, padding_mask))

    def forward(
        self, mel: torch.Tensor, padding_mask: Optional[torch.Tensor] = None
    ) -> torch.Tensor:
        return torch.softmax(self.logits(mel, padding_mask), dim=-1)


def build_rate_predictor(
    granularity: Granularity, config: PredictorConfig, mel_config: MelConfig
) -> RatePredictorModel:
    return RatePredictorModel(
        n_mels=mel_config.n_mels,
        categories=build_category_set(granularity),
        config=config,
        log_floor=mel_config.log_floor,
    )


def collate_mels(
    mels: Sequence[np.ndarray], pad_value: float = 0.0, dtype: torch.dtype = torch.float32
) -> Tuple[torch.Tensor, torch.Tensor]:
    """Right-pad T x n_mels arrays into a batch; the mask is True on padding."""
    lengths = [m.shape[0] for m in mels]
    batch = torch.full((len(mels), max(lengths), mels[0].shape[1]), pad_value, dtype=dtype)
    padding_mask = torch.ones((len(mels), max(lengths)), dtype=torch.bool)
    for i, m in enumerate(mels):
        batch[i, : m.shape[0]] = torch.as_tensor(m, dtype=dtype)
        padding_mask[i, : m.shape[0]] = False
    return batch, padding_mask


@torch.no_grad()
def predict_proba(model: RatePredictorModel, mels: List[MelSpectrogram]) -> np.ndarray:
    """Class probabilities for each mel, batched, in inference mode."""
    model.eval()
    dtype = next(model.parameters()).dtype
    batch, padding_mask = collate_mels(
        [m.data for m in mels], pad_value=float(model.mel_floor), dtype=dtype
    )
    return model(batch, padding_mask).cpu().numpy()


def predict_rate(
    model: RatePredictorModel, mel: MelSpectrogram, categories: Optional[RateCategorySet] = None
) -> float:
    """Grid center of the most probable class; ties go to the lowest index."""
    categories = categories or model.categories
    probs = predict_proba(model, [mel])[0]
    return categories.centers[int(np.argmax(probs))]
