# services/infill/synthesis.py

import logging
from typing import Optional

import numpy as np
import torch

from config import SamplerConfig
from models.audio import MelSpectrogram
from services.audio.frontend import seconds_to_frames
from services.errors import InvalidInput
from services.flow.sampler import euler_solve
from services.infill.model import InfillCondition, InfillTransformer, InfillVelocityModel
from services.infill.sequence import build_extended_sequence
from services.infill.vocab import CharVocab

logger = logging.getLogger(__name__)


def synthesize(
    model: InfillTransformer,
    vocab: CharVocab,
    prompt_mel: MelSpectrogram,
    text: str,
    duration_s: float,
    sampler: Optional[SamplerConfig] = None,
) -> MelSpectrogram:
    """
    Generate `duration_s` seconds of speech for `text` continuing the prompt.

    The prompt is the acoustic context, the target region starts from seeded
    Gaussian noise, and only the generated target frames are returned.
    """
    sampler = sampler or SamplerConfig()
    if not duration_s > 0:
        raise InvalidInput(f"duration must be positive, got {duration_s}")
    if not text or not text.strip():
        raise InvalidInput("text to synthesize is empty")
    if prompt_mel.n_mels != model.n_mels:
        raise InvalidInput(
            "prompt mel width differs from the model",
            {"prompt": prompt_mel.n_mels, "model": model.n_mels},
        )

    mel_config = prompt_mel.config
    prompt_frames = prompt_mel.n_frames
    target_frames = max(1, seconds_to_frames(duration_s, mel_config))
    total_frames = prompt_frames + target_frames
    z = build_extended_sequence(text, total_frames, prompt_frames, vocab)

    context = torch.zeros((1, total_frames, prompt_mel.n_mels), dtype=torch.float32)
    context[0, :prompt_frames] = torch.from_numpy(np.asarray(prompt_mel.data, dtype=np.float32))
    cond = InfillCondition(context=context, text_ids=torch.from_numpy(z.ids).unsqueeze(0))

    noise = np.random.default_rng(sampler.seed).standard_normal(context.shape)
    x0 = torch.from_numpy(noise.astype(np.float32))

    model.eval()
    logger.info(
        f"Synthesizing {target_frames} frames ({duration_s:.3f}s) after a {prompt_frames}-frame prompt "
        f"(nfe={sampler.nfe}, cfg={sampler.cfg_strength}, sway={sampler.sway})"
    )
    generated = euler_solve(
        InfillVelocityModel(model),
        x0,
        sampler.nfe,
        cond,
        cfg_strength=sampler.cfg_strength,
        sway_coeff=sampler.sway,
    )
    target = generated[0, prompt_frames:].cpu().numpy().astype(np.float32)
    target = np.maximum(target, prompt_mel.floor)
    return MelSpectrogram(data=target, config=mel_config)
