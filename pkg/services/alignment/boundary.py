# services/alignment/boundary.py

from typing import List

import numpy as np

from models.alignment import AlignedUtterance, BoundarySplit, Language
from services.errors import InvalidBoundary, NoEligibleBoundary


def eligible_boundaries(
    utt: AlignedUtterance, min_prompt: float, min_target: float
) -> List[int]:
    """Indices whose end time leaves at least min_prompt before and min_target after."""
    return [
        index
        for index, token in enumerate(utt.tokens[:-1])
        if token.end_time >= min_prompt and utt.total_duration - token.end_time >= min_target
    ]


def select_boundary(
    utt: AlignedUtterance,
    rng: np.random.Generator,
    min_prompt: float = 1.0,
    min_target: float = 1.0,
) -> int:
    candidates = eligible_boundaries(utt, min_prompt, min_target)
    if not candidates:
        raise NoEligibleBoundary(
            "no word boundary satisfies the prompt/target minimums",
            utt_id=utt.utt_id,
            min_prompt=min_prompt,
            min_target=min_target,
        )
    return candidates[int(rng.integers(len(candidates)))]


def join_tokens(texts: List[str], language: Language) -> str:
    separator = "" if language == Language.ZH else " "
    return separator.join(texts)


def partition(utt: AlignedUtterance, boundary_index: int) -> BoundarySplit:
    """
    Split at the end of token `boundary_index`. Only the text after the
    boundary is carried; the prompt side keeps its audio interval and nothing else.
    """
    if not 0 <= boundary_index < len(utt.tokens) - 1:
        raise InvalidBoundary(
            f"boundary index {boundary_index} leaves no target text",
            {"utt_id": utt.utt_id, "n_tokens": len(utt.tokens)},
        )
    boundary_time = utt.tokens[boundary_index].end_time
    target_text = join_tokens(
        [token.text for token in utt.tokens[boundary_index + 1 :]], utt.language
    )
    return BoundarySplit(
        utt_id=utt.utt_id,
        boundary_index=boundary_index,
        boundary_time=boundary_time,
        total_duration=utt.total_duration,
        target_text=target_text,
    )
