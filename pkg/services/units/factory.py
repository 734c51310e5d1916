# services/units/factory.py

from typing import Dict, Optional

from models.alignment import AlignedUtterance, Language
from models.rate import Granularity
from services.alignment.boundary import join_tokens
from services.errors import InvalidInput
from .base import HAN_CHARACTER, BaseUnitCounter, ChineseUnitCounter, EnglishUnitCounter
from .lexicon import Lexicon


class UnitCounterFactory:
    """Pick the counting rules for a language; anything but zh uses the English rules."""

    @staticmethod
    def create(
        language: Language,
        lexicon: Optional[Lexicon] = None,
        pinyin_table: Optional[Dict[str, int]] = None,
    ) -> BaseUnitCounter:
        language = Language(language)
        if language == Language.ZH:
            return ChineseUnitCounter(pinyin_table)
        return EnglishUnitCounter(lexicon)


def count_units(
    text: str,
    language: Language,
    granularity: Granularity,
    lexicon: Optional[Lexicon] = None,
    pinyin_table: Optional[Dict[str, int]] = None,
) -> int:
    if not text or not text.strip():
        raise InvalidInput("Cannot count units of empty text")
    counter = UnitCounterFactory.create(language, lexicon, pinyin_table)
    return counter.count(text, granularity)


def text_length(text: str, language: Language) -> int:
    """Character length used by the length-ratio baseline; whitespace never counts."""
    if Language(language) == Language.ZH:
        han = len(HAN_CHARACTER.findall(text))
        if han:
            return han
    return len("".join(text.split()))


def utterance_rate(
    utt: AlignedUtterance,
    granularity: Granularity,
    counter: Optional[BaseUnitCounter] = None,
) -> float:
    """Units per second over the whole utterance (all tokens / total duration)."""
    counter = counter or UnitCounterFactory.create(utt.language)
    text = join_tokens([token.text for token in utt.tokens], utt.language)
    return counter.count(text, granularity) / utt.total_duration
