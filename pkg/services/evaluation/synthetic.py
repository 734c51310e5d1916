# services/evaluation/synthetic.py

import logging
import math
from typing import List, Optional, Sequence

import numpy as np

from config import MelConfig
from models.alignment import Language
from models.audio import MelSpectrogram
from models.duration import EvalItem, SyntheticRateSpec
from models.rate import Granularity, RateExample
from services.audio.frontend import mel_duration_seconds, seconds_to_frames
from services.errors import InvalidInput, InvalidRate
from services.units.factory import UnitCounterFactory

logger = logging.getLogger(__name__)

BURST_FRAMES = 2
BURST_LEVEL = 0.0
SPECTRAL_TILT = 2.0
MIN_DURATION = 3.0
MAX_DURATION = 8.0
# one syllable, one word, two fallback phonemes
SYNTHETIC_WORD = "ba"


def _validate(spec: SyntheticRateSpec) -> int:
    if spec.pattern != "pulse_train":
        raise InvalidInput(f"unknown synthetic pattern {spec.pattern!r}")
    if not spec.rate > 0 or not math.isfinite(spec.rate):
        raise InvalidRate(f"synthetic rate must be positive, got {spec.rate}", {"rate": spec.rate})
    if not MIN_DURATION <= spec.duration <= MAX_DURATION:
        raise InvalidInput(
            f"synthetic duration must lie in [{MIN_DURATION}, {MAX_DURATION}] s",
            {"duration": spec.duration},
        )
    if spec.noise_level < 0:
        raise InvalidInput("noise_level must be non-negative", {"noise_level": spec.noise_level})
    return max(1, int(math.floor(spec.rate * spec.duration + 0.5)))


def pulse_train_mel(
    spec: SyntheticRateSpec, rng: np.random.Generator, mel_config: MelConfig
) -> MelSpectrogram:
    """
    Floor-level background with round(rate * duration) evenly spaced broadband
    bursts, a random phase offset and optional Gaussian noise.
    """
    n_events = _validate(spec)
    n_frames = seconds_to_frames(spec.duration, mel_config)
    spacing = n_frames / n_events
    if spacing < BURST_FRAMES + 1:
        raise InvalidRate(
            f"rate {spec.rate} leaves no gap between bursts at hop {mel_config.hop}",
            {"rate": spec.rate},
        )
    floor = mel_config.log_floor
    data = np.full((n_frames, mel_config.n_mels), floor, dtype=np.float64)
    burst = BURST_LEVEL - SPECTRAL_TILT * np.arange(mel_config.n_mels) / mel_config.n_mels

    offset = rng.uniform(0.0, spacing - BURST_FRAMES)
    onsets = np.floor(offset + spacing * np.arange(n_events)).astype(int)
    for onset in onsets:
        data[onset : onset + BURST_FRAMES] = burst

    if spec.noise_level > 0:
        scale = spec.noise_level * (BURST_LEVEL - floor)
        data = data + rng.normal(0.0, scale, size=data.shape)
    data = np.maximum(data.astype(np.float32), np.float32(floor))
    return MelSpectrogram(data=data, config=mel_config)


def generate_synthetic_rate_corpus(
    specs: Sequence[SyntheticRateSpec],
    seed: int = 0,
    granularity: Granularity = Granularity.SYLLABLE,
    mel_config: Optional[MelConfig] = None,
) -> List[RateExample]:
    mel_config = mel_config or MelConfig()
    rng = np.random.default_rng(seed)
    examples = [
        RateExample(
            mel=pulse_train_mel(spec, rng, mel_config),
            true_rate=spec.rate,
            granularity=Granularity(granularity),
            language=Language.EN,
            utt_id=f"syn{index:05d}",
        )
        for index, spec in enumerate(specs)
    ]
    logger.info(f"Generated {len(examples)} synthetic pulse-train examples (seed {seed})")
    return examples


def sample_rate_specs(
    n: int,
    seed: int = 0,
    min_rate: float = 1.0,
    max_rate: float = 7.0,
    noise_level: float = 0.1,
) -> List[SyntheticRateSpec]:
    """Uniform rates in [min_rate, max_rate] and durations in [3, 8] s."""
    rng = np.random.default_rng(seed)
    rates = rng.uniform(min_rate, max_rate, size=n)
    durations = rng.uniform(MIN_DURATION, MAX_DURATION, size=n)
    return [
        SyntheticRateSpec(rate=float(r), duration=float(d), noise_level=noise_level)
        for r, d in zip(rates, durations)
    ]


def onset_frames(mel: MelSpectrogram, threshold: Optional[float] = None) -> np.ndarray:
    """Frames where the mean log energy crosses `threshold` upwards."""
    energy = mel.data.mean(axis=1)
    if threshold is None:
        threshold = (float(energy.min()) + float(energy.max())) / 2.0
    active = energy > threshold
    rising = active & ~np.concatenate([[False], active[:-1]])
    return np.flatnonzero(rising)


def count_onsets(mel: MelSpectrogram, threshold: Optional[float] = None) -> int:
    return int(len(onset_frames(mel, threshold)))


def build_duration_eval_corpus(
    examples: Sequence[RateExample],
    seed: int = 0,
    min_target_s: float = 2.0,
    max_target_s: float = 6.0,
) -> List[EvalItem]:
    """
    Pair each synthetic prompt with a target text of repeated syllables.

    The ground-truth duration is the text's unit count (at the examples'
    granularity) divided by the prompt's true rate, so counting is exact
    and an oracle rate recovers it.
    The reference text mirrors the prompt's burst count for the length-ratio baseline.
    """
    rng = np.random.default_rng(seed)
    counter = UnitCounterFactory.create(Language.EN)
    items = []
    for index, ex in enumerate(examples):
        target_s = rng.uniform(min_target_s, max_target_s)
        n_words = max(1, int(math.floor(ex.true_rate * target_s + 0.5)))
        target_text = " ".join([SYNTHETIC_WORD] * n_words)
        ref_text = " ".join([SYNTHETIC_WORD] * max(1, count_onsets(ex.mel)))
        items.append(
            EvalItem(
                utt_id=ex.utt_id or f"syn{index:05d}",
                prompt_mel=ex.mel,
                target_text=target_text,
                gt_duration=counter.count(target_text, ex.granularity) / ex.true_rate,
                lang=Language.EN,
                ref_text=ref_text,
                prompt_duration=mel_duration_seconds(ex.mel),
            )
        )
    return items
