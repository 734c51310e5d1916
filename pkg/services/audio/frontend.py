# services/audio/frontend.py

import logging
import math
from pathlib import Path
from typing import Union

import librosa
import numpy as np
import soundfile as sf

from config import MelConfig
from models.audio import AudioClip, MelSpectrogram
from services.errors import ConfigMismatch, InvalidInput

logger = logging.getLogger(__name__)


def seconds_to_frames(seconds: float, cfg: MelConfig) -> int:
    """Round-half-up conversion of seconds onto the hop grid."""
    return int(math.floor(seconds * cfg.sample_rate / cfg.hop + 0.5))


def mel_filterbank(cfg: MelConfig) -> np.ndarray:
    return librosa.filters.mel(
        sr=cfg.sample_rate,
        n_fft=cfg.n_fft,
        n_mels=cfg.n_mels,
        fmin=cfg.fmin,
        fmax=cfg.fmax,
    )


def _power_spectrogram(samples: np.ndarray, cfg: MelConfig) -> np.ndarray:
    stft = librosa.stft(
        samples.astype(np.float64),
        n_fft=cfg.n_fft,
        hop_length=cfg.hop,
        win_length=cfg.n_fft,
        window="hann",
        center=True,
        pad_mode="reflect",
    )
    return np.abs(stft) ** 2


def compute_mel(clip: AudioClip, cfg: MelConfig) -> MelSpectrogram:
    """
    Log-mel spectrogram with center (reflect) padding.

    T = floor(len(samples) / hop) + 1. Entries are log mel power clamped
    from below at cfg.log_floor.
    """
    if clip.samples.size == 0:
        raise InvalidInput("Cannot compute a mel spectrogram of an empty clip")
    if clip.sample_rate != cfg.sample_rate:
        raise ConfigMismatch(
            "Clip sample rate does not match MelConfig",
            {"clip": clip.sample_rate, "config": cfg.sample_rate},
        )

    power = _power_spectrogram(clip.samples, cfg)
    mel_power = mel_filterbank(cfg) @ power
    with np.errstate(divide="ignore"):
        log_mel = np.log(mel_power).T
    floor = np.float32(cfg.log_floor)
    data = np.maximum(log_mel.astype(np.float32), floor)
    data[~np.isfinite(data)] = floor
    return MelSpectrogram(data=np.ascontiguousarray(data), config=cfg)


def mel_duration_seconds(mel: MelSpectrogram) -> float:
    return mel.n_frames * mel.config.hop / mel.config.sample_rate


def griffin_lim_invert(mel: MelSpectrogram, iters: int = 32, seed: int = 0) -> AudioClip:
    """
    Approximate waveform from a log-mel spectrogram.

    Entries at the floor are treated as silence. Uses classic Griffin-Lim
    (no momentum) from a seeded random phase, so the output is deterministic
    and the consistency error does not grow with iterations.
    """
    if iters < 1:
        raise InvalidInput("iters must be >= 1", {"iters": iters})
    cfg = mel.config
    data = mel.data.astype(np.float64)
    power = np.where(data > mel.floor, np.exp(data), 0.0).T
    if not power.any():
        length = (mel.n_frames - 1) * cfg.hop
        return AudioClip(samples=np.zeros(max(length, 1), dtype=np.float32), sample_rate=cfg.sample_rate)

    magnitude = librosa.feature.inverse.mel_to_stft(
        power,
        sr=cfg.sample_rate,
        n_fft=cfg.n_fft,
        power=2.0,
        fmin=cfg.fmin,
        fmax=cfg.fmax,
    )
    samples = librosa.griffinlim(
        magnitude,
        n_iter=iters,
        hop_length=cfg.hop,
        win_length=cfg.n_fft,
        n_fft=cfg.n_fft,
        window="hann",
        center=True,
        momentum=0.0,
        init="random",
        random_state=seed,
    )
    samples = np.clip(np.nan_to_num(samples), -1.0, 1.0).astype(np.float32)
    return AudioClip(samples=samples, sample_rate=cfg.sample_rate)


def load_wav(path: Union[str, Path]) -> AudioClip:
    """Read a PCM16/float32 WAV; multi-channel audio is averaged to mono."""
    try:
        samples, sample_rate = sf.read(str(path), dtype="float32", always_2d=True)
    except RuntimeError as e:
        raise InvalidInput(f"Cannot decode audio file {path}: {e}", {"path": str(path)})
    if samples.shape[1] > 1:
        logger.info(f"Down-mixing {samples.shape[1]} channels of {path}")
    mono = samples.mean(axis=1).astype(np.float32)
    return AudioClip(samples=mono, sample_rate=int(sample_rate))


def save_wav(path: Union[str, Path], clip: AudioClip) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    sf.write(str(path), clip.samples, clip.sample_rate, subtype="FLOAT")


def resample_clip(clip: AudioClip, sample_rate: int) -> AudioClip:
    if clip.sample_rate == sample_rate:
        return clip
    logger.info(f"Resampling {clip.sample_rate} Hz audio to {sample_rate} Hz")
    samples = librosa.resample(clip.samples, orig_sr=clip.sample_rate, target_sr=sample_rate)
    return AudioClip(samples=samples.astype(np.float32), sample_rate=sample_rate)
