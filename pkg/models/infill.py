# models/infill.py

from dataclasses import dataclass

import numpy as np

from models.audio import MelSpectrogram


@dataclass(frozen=True)
class ExtendedCharSeq:
    """One token id per mel frame; prompt and padding positions hold the filler id."""

    ids: np.ndarray
    filler_id: int

    def __len__(self) -> int:
        return int(self.ids.shape[0])


@dataclass(frozen=True)
class MaskSpec:
    """True on frames the model must predict."""

    mask: np.ndarray

    @property
    def start(self) -> int:
        return int(np.argmax(self.mask)) if self.mask.any() else len(self.mask)

    @property
    def n_masked(self) -> int:
        return int(self.mask.sum())


@dataclass(frozen=True)
class TTSTrainExample:
    mel: MelSpectrogram
    z: ExtendedCharSeq
    mask: MaskSpec
    utt_id: str = ""
