import os
import sys

_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, _ROOT)

import numpy as np
import pytest
import soundfile as sf

from config import MelConfig, PredictorConfig, TTSConfig
from models.alignment import AlignedToken, AlignedUtterance, Language
from models.audio import AudioClip, MelSpectrogram


def make_utterance(words, duration, lang=Language.EN, utt_id="utt0", audio="utt0.wav"):
    """words: [(text, end_time), ...]"""
    return AlignedUtterance(
        utt_id=utt_id,
        audio_path=audio,
        language=Language(lang),
        tokens=tuple(AlignedToken(text, float(end)) for text, end in words),
        total_duration=float(duration),
    )


def tone(freq, seconds, sample_rate=24000, amplitude=0.5):
    t = np.arange(int(round(seconds * sample_rate))) / sample_rate
    samples = (amplitude * np.sin(2 * np.pi * freq * t)).astype(np.float32)
    return AudioClip(samples=samples, sample_rate=sample_rate)


def floor_mel(n_frames, mel_config):
    data = np.full((n_frames, mel_config.n_mels), mel_config.log_floor, dtype=np.float32)
    return MelSpectrogram(data=data, config=mel_config)


def write_wav(path, clip):
    path.parent.mkdir(parents=True, exist_ok=True)
    sf.write(str(path), clip.samples, clip.sample_rate, subtype="PCM_16")
    return path


@pytest.fixture
def mel_config():
    return MelConfig()


@pytest.fixture
def small_mel_config():
    return MelConfig(sample_rate=8000, n_fft=256, hop=64, n_mels=16, fmax=4000.0)


@pytest.fixture
def tiny_predictor():
    return PredictorConfig(
        n_layers=1,
        n_heads=2,
        d_model=32,
        dropout=0.0,
        batch_size=4,
        epochs=2,
        learning_rate=1e-3,
        warmup_fraction=0.1,
    )


@pytest.fixture
def tiny_tts():
    return TTSConfig(
        n_layers=1,
        n_heads=2,
        d_model=32,
        text_dim=8,
        conv_pos_kernel=3,
        batch_size=2,
        epochs=2,
        learning_rate=1e-3,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
