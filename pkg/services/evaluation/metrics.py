# services/evaluation/metrics.py

import math
from typing import Sequence

from models.duration import DurationEvalRecord
from services.errors import InvalidInput


def _check(records: Sequence[DurationEvalRecord]) -> None:
    if not records:
        raise InvalidInput("no duration records to score")
    for record in records:
        if not record.ground_truth_seconds > 0:
            raise InvalidInput(
                "ground-truth duration must be positive",
                {"utt_id": record.utt_id, "ground_truth_seconds": record.ground_truth_seconds},
            )


def mae(records: Sequence[DurationEvalRecord]) -> float:
    """Mean absolute duration error in seconds."""
    _check(records)
    return math.fsum(abs(r.predicted_seconds - r.ground_truth_seconds) for r in records) / len(records)


def mre(records: Sequence[DurationEvalRecord]) -> float:
    """Mean relative duration error, |pred - gt| / gt, in percent."""
    _check(records)
    relative = math.fsum(
        abs(r.predicted_seconds - r.ground_truth_seconds) / r.ground_truth_seconds for r in records
    )
    return relative / len(records) * 100.0
