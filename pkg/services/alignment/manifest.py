# services/alignment/manifest.py

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Tuple, Union

from models.alignment import AlignedToken, AlignedUtterance, Language, ManifestIssue
from services.errors import InvalidInput, ParseError, ValidationError

logger = logging.getLogger(__name__)


def _positive_number(value: Any) -> bool:
    return (
        isinstance(value, (int, float))
        and not isinstance(value, bool)
        and math.isfinite(value)
        and value > 0
    )


def parse_record(record: Dict[str, Any], line: Optional[int] = None) -> AlignedUtterance:
    """
    Validate one aligner record
    {"utt_id", "audio", "lang", "dur", "words": [[text, end_time], ...]}.
    """
    utt_id = record.get("utt_id")
    if not isinstance(utt_id, str) or not utt_id:
        raise ValidationError("utt_id must be a non-empty string", utt_id=None, line=line)
    # utt_id names files under prepared/mels
    if "/" in utt_id or "\\" in utt_id or utt_id in (".", ".."):
        raise ValidationError(f"utt_id {utt_id!r} is not a plain file name", utt_id=utt_id, line=line)

    audio = record.get("audio")
    if not isinstance(audio, str) or not audio:
        raise ValidationError("audio must be a non-empty string", utt_id=utt_id, line=line)

    try:
        language = Language(record.get("lang"))
    except ValueError:
        raise ValidationError(
            f"Unsupported language {record.get('lang')!r}", utt_id=utt_id, line=line
        )

    duration = record.get("dur")
    if not _positive_number(duration):
        raise ValidationError("dur must be a positive finite number", utt_id=utt_id, line=line)

    words = record.get("words")
    if not isinstance(words, list) or not words:
        raise ValidationError("words must be a non-empty list", utt_id=utt_id, line=line)

    tokens: List[AlignedToken] = []
    previous_end = 0.0
    for position, word in enumerate(words):
        if not isinstance(word, (list, tuple)) or len(word) != 2:
            raise ValidationError(
                f"word {position} must be a [text, end_time] pair", utt_id=utt_id, line=line
            )
        text, end_time = word
        if not isinstance(text, str) or not text.strip():
            raise ValidationError(f"word {position} has empty text", utt_id=utt_id, line=line)
        if not _positive_number(end_time):
            raise ValidationError(
                f"word {position} end time must be a positive finite number", utt_id=utt_id, line=line
            )
        if end_time <= previous_end:
            raise ValidationError(
                f"end times are not strictly increasing at word {position}",
                utt_id=utt_id,
                line=line,
            )
        previous_end = float(end_time)
        tokens.append(AlignedToken(text=text, end_time=float(end_time)))

    if previous_end > duration:
        raise ValidationError("last end time exceeds dur", utt_id=utt_id, line=line)

    return AlignedUtterance(
        utt_id=utt_id,
        audio_path=audio,
        language=language,
        tokens=tuple(tokens),
        total_duration=float(duration),
    )


def parse_manifest(
    path: Union[str, Path],
    skip_invalid: bool = False,
    issues: Optional[List[ManifestIssue]] = None,
) -> List[AlignedUtterance]:
    """
    Parse a JSON Lines alignment manifest.

    By default the first bad line raises (ParseError for malformed JSON,
    ValidationError for invariant violations and repeated utt_ids). With
    skip_invalid the line is logged with its number, recorded in `issues`
    and skipped; the first occurrence of a repeated utt_id is kept.
    """
    path = Path(path)
    if not path.is_file():
        raise InvalidInput(f"Manifest not found: {path}", {"path": str(path)})

    utterances: List[AlignedUtterance] = []
    seen: Dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as e:
                    raise ParseError(f"Malformed JSON on line {line_no}: {e.msg}", line=line_no)
                if not isinstance(record, dict):
                    raise ParseError(f"Line {line_no} is not a JSON object", line=line_no)
                utt = parse_record(record, line=line_no)
                if utt.utt_id in seen:
                    raise ValidationError(
                        f"Duplicate utt_id {utt.utt_id!r} (first on line {seen[utt.utt_id]})",
                        utt_id=utt.utt_id,
                        line=line_no,
                    )
                seen[utt.utt_id] = line_no
                utterances.append(utt)
            except (ParseError, ValidationError) as e:
                if not skip_invalid:
                    raise
                utt_id = e.details.get("utt_id") or ""
                logger.warning(f"Skipping manifest line {line_no} ({utt_id}): {e}")
                if issues is not None:
                    issues.append(ManifestIssue(line=line_no, utt_id=utt_id, message=str(e)))
    logger.info(f"Parsed {len(utterances)} utterances from {path}")
    return utterances


def write_manifest(
    path: Union[str, Path], records: Iterable[Dict[str, Any]]
) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
            count += 1
    return count


def read_jsonl(path: Union[str, Path]) -> Iterator[Tuple[int, Dict[str, Any]]]:
    """Yield (line number, object) from a JSON Lines file; blank lines are skipped."""
    path = Path(path)
    if not path.is_file():
        raise InvalidInput(f"File not found: {path}", {"path": str(path)})
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"Malformed JSON on line {line_no} of {path}: {e.msg}", line=line_no)
            if not isinstance(record, dict):
                raise ParseError(f"Line {line_no} of {path} is not a JSON object", line=line_no)
            yield line_no, record
