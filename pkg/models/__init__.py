from .alignment import AlignedToken, AlignedUtterance, BoundarySplit, Language, ManifestIssue
from .audio import AudioClip, MelSpectrogram
from .duration import (
    DurationEstimate,
    DurationEvalRecord,
    DurationMethod,
    EvalItem,
    SyntheticRateSpec,
)
from .infill import ExtendedCharSeq, MaskSpec, TTSTrainExample
from .rate import Granularity, RateCategorySet, RateExample

__all__ = [
    "AlignedToken",
    "AlignedUtterance",
    "AudioClip",
    "BoundarySplit",
    "DurationEstimate",
    "DurationEvalRecord",
    "DurationMethod",
    "EvalItem",
    "ExtendedCharSeq",
    "Granularity",
    "Language",
    "ManifestIssue",
    "MaskSpec",
    "MelSpectrogram",
    "RateCategorySet",
    "RateExample",
    "SyntheticRateSpec",
    "TTSTrainExample",
]
