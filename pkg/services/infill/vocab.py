# services/infill/vocab.py

from dataclasses import dataclass, field
from typing import Dict, Iterable, List

FILLER_ID = 0
BYTE_OFFSET = 1
FIRST_CHAR_ID = BYTE_OFFSET + 256


@dataclass
class CharVocab:
    """
    Character vocabulary over a byte-level fallback.

    id 0 is the filler token, ids 1..256 are raw UTF-8 bytes, and characters
    seen in the training corpus get their own ids from 257 upwards.
    """

    chars: Dict[str, int] = field(default_factory=dict)

    @classmethod
    def build(cls, texts: Iterable[str]) -> "CharVocab":
        alphabet = sorted({ch for text in texts for ch in text})
        return cls({ch: FIRST_CHAR_ID + i for i, ch in enumerate(alphabet)})

    @property
    def size(self) -> int:
        return FIRST_CHAR_ID + len(self.chars)

    def encode_char(self, ch: str) -> List[int]:
        if ch in self.chars:
            return [self.chars[ch]]
        return [BYTE_OFFSET + b for b in ch.encode("utf-8")]

    def encode(self, text: str) -> List[int]:
        return [i for ch in text for i in self.encode_char(ch)]

    def to_dict(self) -> Dict[str, int]:
        return dict(sorted(self.chars.items(), key=lambda item: item[1]))

    @classmethod
    def from_dict(cls, chars: Dict[str, int]) -> "CharVocab":
        return cls({ch: int(i) for ch, i in chars.items()})
