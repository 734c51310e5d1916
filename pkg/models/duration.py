# models/duration.py

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from models.alignment import Language
from models.audio import MelSpectrogram


class DurationMethod(str, Enum):
    RATE_PHONEME = "rate_phoneme"
    RATE_SYLLABLE = "rate_syllable"
    RATE_WORD = "rate_word"
    LENGTH_RATIO = "length_ratio"
    GROUND_TRUTH = "ground_truth"


@dataclass(frozen=True)
class DurationEstimate:
    seconds: float
    frames: int
    method: DurationMethod
    predicted_rate: Optional[float] = None
    unit_count: Optional[int] = None


@dataclass(frozen=True)
class DurationEvalRecord:
    utt_id: str
    predicted_seconds: float
    ground_truth_seconds: float
    method: str


@dataclass(frozen=True)
class SyntheticRateSpec:
    rate: float
    duration: float
    pattern: str = "pulse_train"
    noise_level: float = 0.0


@dataclass(frozen=True)
class EvalItem:
    utt_id: str
    prompt_mel: MelSpectrogram
    target_text: str
    gt_duration: float
    lang: Language
    ref_text: Optional[str] = None
    prompt_duration: Optional[float] = None
