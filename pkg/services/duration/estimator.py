# services/duration/estimator.py

import logging
from typing import Optional, Union

from config import MelConfig
from models.alignment import Language
from models.audio import MelSpectrogram
from models.duration import DurationEstimate, DurationMethod
from models.rate import Granularity, RateCategorySet
from services.audio.frontend import seconds_to_frames
from services.errors import ConfigMismatch, DurationOutOfRange, InvalidInput
from services.rate.estimators import BaseRateEstimator, PredictorRateEstimator
from services.rate.model import RatePredictorModel
from services.units.base import BaseUnitCounter
from services.units.factory import UnitCounterFactory

logger = logging.getLogger(__name__)

RATE_METHODS = {
    Granularity.PHONEME: DurationMethod.RATE_PHONEME,
    Granularity.SYLLABLE: DurationMethod.RATE_SYLLABLE,
    Granularity.WORD: DurationMethod.RATE_WORD,
}


def to_frames(seconds: float, mel_config: MelConfig) -> int:
    if not seconds > 0:
        raise InvalidInput(f"duration must be positive, got {seconds}")
    return max(1, seconds_to_frames(seconds, mel_config))


def estimate_duration(
    model: Union[RatePredictorModel, BaseRateEstimator],
    categories: RateCategorySet,
    prompt_mel: MelSpectrogram,
    text: str,
    granularity: Granularity,
    language: Language,
    max_duration: float = 60.0,
    counter: Optional[BaseUnitCounter] = None,
) -> DurationEstimate:
    """Target duration = unit count of `text` / speaking rate predicted from the prompt."""
    estimator = PredictorRateEstimator(model) if isinstance(model, RatePredictorModel) else model
    granularity = Granularity(granularity)
    if not estimator.granularity == categories.granularity == granularity:
        raise ConfigMismatch(
            "rate model, category grid and requested granularity disagree",
            {
                "model": estimator.granularity.value,
                "categories": categories.granularity.value,
                "requested": granularity.value,
            },
        )
    if not text or not text.strip():
        raise InvalidInput("target text is empty")

    counter = counter or UnitCounterFactory.create(language)
    unit_count = counter.count(text, granularity)
    rate = estimator.predict_rate(prompt_mel)
    seconds = unit_count / rate
    if seconds > max_duration:
        raise DurationOutOfRange(
            f"{unit_count} {granularity.value}s at {rate} per second exceeds {max_duration}s",
            {"seconds": seconds, "unit_count": unit_count, "rate": rate},
        )
    logger.debug(f"{unit_count} {granularity.value}s / {rate} per second = {seconds:.3f}s")
    return DurationEstimate(
        seconds=seconds,
        frames=to_frames(seconds, prompt_mel.config),
        method=RATE_METHODS[granularity],
        predicted_rate=rate,
        unit_count=unit_count,
    )


def length_ratio_duration(
    prompt_duration: float,
    ref_text_len: int,
    target_text_len: int,
    mel_config: Optional[MelConfig] = None,
) -> DurationEstimate:
    """Prompt duration scaled by target/reference text length (needs the prompt transcript)."""
    if ref_text_len <= 0:
        raise InvalidInput("reference text length must be positive", {"ref_text_len": ref_text_len})
    if target_text_len <= 0 or not prompt_duration > 0:
        raise InvalidInput(
            "prompt duration and target text length must be positive",
            {"prompt_duration": prompt_duration, "target_text_len": target_text_len},
        )
    seconds = prompt_duration * target_text_len / ref_text_len
    return DurationEstimate(
        seconds=seconds,
        frames=to_frames(seconds, mel_config or MelConfig()),
        method=DurationMethod.LENGTH_RATIO,
        unit_count=target_text_len,
    )


def ground_truth_duration(seconds: float, mel_config: Optional[MelConfig] = None) -> DurationEstimate:
    return DurationEstimate(
        seconds=seconds,
        frames=to_frames(seconds, mel_config or MelConfig()),
        method=DurationMethod.GROUND_TRUTH,
    )
