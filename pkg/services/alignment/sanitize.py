# services/alignment/sanitize.py

import logging
import re
import unicodedata
from dataclasses import replace

from models.alignment import AlignedUtterance, Language
from services.errors import EmptyAfterSanitize

logger = logging.getLogger(__name__)

_SCRIPT_PATTERNS = {
    Language.EN: re.compile(r"^[A-Za-z'\-]+$"),
    Language.ZH: re.compile(r"^[\u3400-\u4DBF\u4E00-\u9FFF]+$"),
}


def _has_digit(text: str) -> bool:
    return any(unicodedata.category(ch) == "Nd" for ch in text)


def _is_symbol_only(text: str) -> bool:
    return all(unicodedata.category(ch)[0] in "PSZ" for ch in text)


def is_anomalous(text: str, language: Language) -> bool:
    """Tokens the aligner cannot place reliably: digits, bare symbols, foreign script."""
    if _has_digit(text) or _is_symbol_only(text):
        return True
    pattern = _SCRIPT_PATTERNS.get(language)
    return pattern is not None and not pattern.match(text)


def sanitize_tokens(utt: AlignedUtterance) -> AlignedUtterance:
    """
    Drop anomalous tokens together with their end times, so they never serve
    as word boundaries. Survivors keep their original timing.
    """
    kept = tuple(token for token in utt.tokens if not is_anomalous(token.text, utt.language))
    if not kept:
        raise EmptyAfterSanitize("every token was anomalous", utt_id=utt.utt_id)
    dropped = len(utt.tokens) - len(kept)
    if dropped:
        logger.debug(f"{utt.utt_id}: dropped {dropped} anomalous tokens")
    return replace(utt, tokens=kept)


def is_misclassified(
    original: AlignedUtterance, sanitized: AlignedUtterance, max_drop_fraction: float
) -> bool:
    """True when sanitizing removed too much of the transcript to trust its language label."""
    dropped = len(original.tokens) - len(sanitized.tokens)
    return dropped / len(original.tokens) > max_drop_fraction
