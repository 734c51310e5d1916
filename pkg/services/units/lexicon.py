# services/units/lexicon.py

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Tuple, Union

import nltk

from models.alignment import Language
from services.errors import InvalidInput, ParseError

logger = logging.getLogger(__name__)

_VARIANT_SUFFIX = re.compile(r"\(\d+\)$")


@dataclass(frozen=True)
class Lexicon:
    entries: Dict[str, Tuple[str, ...]] = field(default_factory=dict)
    language: Language = Language.EN

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, word: str):
        return self.entries.get(word.lower())


def load_lexicon(path: Union[str, Path], language: Language = Language.EN) -> Lexicon:
    """
    Load a pronouncing dictionary of "WORD  PH1 PH2 ..." lines.

    Keys are lowercased, CMU-style variant markers ("WORD(2)") are folded
    into the base word and the first pronunciation of a word wins.
    Lines starting with ";;;" are comments.
    """
    path = Path(path)
    if not path.is_file():
        raise InvalidInput(f"Lexicon not found: {path}", {"path": str(path)})

    entries: Dict[str, Tuple[str, ...]] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith(";;;"):
                continue
            parts = stripped.split()
            if len(parts) < 2:
                raise ParseError(f"Lexicon line {line_no} has no phonemes", line=line_no)
            word = _VARIANT_SUFFIX.sub("", parts[0]).lower()
            entries.setdefault(word, tuple(parts[1:]))
    logger.info(f"Loaded {len(entries)} lexicon entries from {path}")
    return Lexicon(entries=entries, language=language)


def load_cmudict_lexicon() -> Lexicon:
    """English lexicon from nltk's copy of the CMU pronouncing dictionary."""
    try:
        nltk.data.find("corpora/cmudict")
    except LookupError:
        nltk.download("cmudict", quiet=True)
    from nltk.corpus import cmudict

    entries = {word.lower(): tuple(prons[0]) for word, prons in cmudict.dict().items() if prons}
    return Lexicon(entries=entries, language=Language.EN)


def load_pinyin_table(path: Union[str, Path]) -> Dict[str, int]:
    """Two-column table: Han character, number of phones (initial + final)."""
    path = Path(path)
    if not path.is_file():
        raise InvalidInput(f"Pinyin table not found: {path}", {"path": str(path)})

    table: Dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            parts = stripped.split()
            if len(parts) != 2 or len(parts[0]) != 1:
                raise ParseError(f"Pinyin table line {line_no} is malformed", line=line_no)
            try:
                phones = int(parts[1])
            except ValueError:
                raise ParseError(f"Pinyin table line {line_no} has a non-integer count", line=line_no)
            if phones < 1:
                raise ParseError(f"Pinyin table line {line_no} has a non-positive count", line=line_no)
            table.setdefault(parts[0], phones)
    return table
