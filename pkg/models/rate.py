# models/rate.py

from dataclasses import dataclass
from enum import Enum
from typing import Tuple

from models.alignment import Language
from models.audio import MelSpectrogram


class Granularity(str, Enum):
    PHONEME = "phoneme"
    SYLLABLE = "syllable"
    WORD = "word"


@dataclass(frozen=True)
class RateCategorySet:
    granularity: Granularity
    delta: float
    min_rate: float
    max_rate: float
    n_classes: int
    centers: Tuple[float, ...]


@dataclass(frozen=True)
class RateExample:
    mel: MelSpectrogram
    true_rate: float
    granularity: Granularity
    language: Language = Language.OTHER
    utt_id: str = ""
