# services/units/base.py

import re
from abc import ABC, abstractmethod
from typing import Dict, Optional

from models.rate import Granularity
from services.errors import InvalidInput
from .lexicon import Lexicon

_VOWEL_GROUP = re.compile(r"[aeiouy]+")
_SILENT_E = re.compile(r"[^aeiouy]e$")
HAN_CHARACTER = re.compile(r"[\u3400-\u4DBF\u4E00-\u9FFF]")

CHINESE_PHONE_FALLBACK = 3


class BaseUnitCounter(ABC):
    """Counts linguistic units in target text for one language family."""

    @abstractmethod
    def count_words(self, text: str) -> int:
        pass

    @abstractmethod
    def count_syllables(self, text: str) -> int:
        pass

    @abstractmethod
    def count_phonemes(self, text: str) -> int:
        pass

    def count(self, text: str, granularity: Granularity) -> int:
        text = text.strip()
        if not text:
            raise InvalidInput("Cannot count units of empty text")
        granularity = Granularity(granularity)
        if granularity == Granularity.WORD:
            return self.count_words(text)
        if granularity == Granularity.SYLLABLE:
            return self.count_syllables(text)
        return self.count_phonemes(text)


def english_syllables(word: str) -> int:
    """Vowel groups (aeiouy), minus a silent final 'e', at least one."""
    letters = re.sub(r"[^a-z]", "", word.lower())
    groups = len(_VOWEL_GROUP.findall(letters))
    if groups > 1 and _SILENT_E.search(letters):
        groups -= 1
    return max(groups, 1)


def english_fallback_phonemes(word: str) -> int:
    """One phoneme per consonant letter plus one per vowel group."""
    letters = re.sub(r"[^a-z]", "", word.lower())
    consonants = len(re.sub(r"[aeiouy]", "", letters))
    return consonants + len(_VOWEL_GROUP.findall(letters))


class EnglishUnitCounter(BaseUnitCounter):
    def __init__(self, lexicon: Optional[Lexicon] = None):
        self.lexicon = lexicon or Lexicon()

    def count_words(self, text: str) -> int:
        return len(text.split())

    def count_syllables(self, text: str) -> int:
        return sum(english_syllables(word) for word in text.split())

    def count_phonemes(self, text: str) -> int:
        total = 0
        for word in text.split():
            key = re.sub(r"[^a-z']", "", word.lower())
            pronunciation = self.lexicon.lookup(key) if key else None
            phonemes = len(pronunciation) if pronunciation else english_fallback_phonemes(word)
            # floor keeps word <= syllable <= phoneme for every word
            total += max(phonemes, english_syllables(word))
        return total


class ChineseUnitCounter(BaseUnitCounter):
    """One word and one syllable per Han character; phones from a pinyin table."""

    def __init__(self, pinyin_table: Optional[Dict[str, int]] = None):
        self.pinyin_table = pinyin_table or {}

    def _han(self, text: str):
        characters = HAN_CHARACTER.findall(text)
        if not characters:
            raise InvalidInput("Chinese text contains no Han characters", {"text": text})
        return characters

    def count_words(self, text: str) -> int:
        return len(self._han(text))

    def count_syllables(self, text: str) -> int:
        return len(self._han(text))

    def count_phonemes(self, text: str) -> int:
        return sum(
            self.pinyin_table.get(ch, CHINESE_PHONE_FALLBACK) for ch in self._han(text)
        )
