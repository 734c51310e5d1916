# models/alignment.py

from dataclasses import dataclass
from enum import Enum
from typing import List, Tuple


class Language(str, Enum):
    EN = "en"
    ZH = "zh"
    OTHER = "other"


@dataclass(frozen=True)
class AlignedToken:
    text: str
    end_time: float


@dataclass(frozen=True)
class AlignedUtterance:
    utt_id: str
    audio_path: str
    language: Language
    tokens: Tuple[AlignedToken, ...]
    total_duration: float

    @property
    def end_times(self) -> List[float]:
        return [token.end_time for token in self.tokens]

    def to_record(self) -> dict:
        """Manifest line in the aligner contract format."""
        return {
            "utt_id": self.utt_id,
            "audio": self.audio_path,
            "lang": self.language.value,
            "dur": self.total_duration,
            "words": [[token.text, token.end_time] for token in self.tokens],
        }


@dataclass(frozen=True)
class BoundarySplit:
    utt_id: str
    boundary_index: int
    boundary_time: float
    total_duration: float
    target_text: str

    @property
    def prompt_interval(self) -> Tuple[float, float]:
        return (0.0, self.boundary_time)

    @property
    def target_interval(self) -> Tuple[float, float]:
        return (self.boundary_time, self.total_duration)


@dataclass(frozen=True)
class ManifestIssue:
    line: int
    utt_id: str
    message: str
