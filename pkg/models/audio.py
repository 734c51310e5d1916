# models/audio.py

from dataclasses import dataclass

import numpy as np

from config import MelConfig
from services.errors import InvalidInput


@dataclass(frozen=True)
class AudioClip:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise InvalidInput("sample_rate must be positive", {"sample_rate": self.sample_rate})
        if self.samples.ndim != 1:
            raise InvalidInput("AudioClip samples must be mono", {"shape": self.samples.shape})
        if not np.all(np.isfinite(self.samples)):
            raise InvalidInput("AudioClip samples must be finite")

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class MelSpectrogram:
    """Frame-major log-mel matrix (T x n_mels) plus the config that produced it."""

    data: np.ndarray
    config: MelConfig

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[0] < 1:
            raise InvalidInput("mel data must be a non-empty T x n_mels matrix", {"shape": self.data.shape})
        if self.data.shape[1] != self.config.n_mels:
            raise InvalidInput(
                "mel width does not match config.n_mels",
                {"width": self.data.shape[1], "n_mels": self.config.n_mels},
            )
        if not np.all(np.isfinite(self.data)):
            raise InvalidInput("mel entries must be finite")

    @property
    def n_frames(self) -> int:
        return int(self.data.shape[0])

    @property
    def n_mels(self) -> int:
        return int(self.data.shape[1])

    @property
    def floor(self) -> np.float32:
        return np.float32(self.config.log_floor)

    def slice_frames(self, start: int, end: int) -> "MelSpectrogram":
        return MelSpectrogram(data=self.data[start:end].copy(), config=self.config)
