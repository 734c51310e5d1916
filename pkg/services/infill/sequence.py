# services/infill/sequence.py

from typing import List, Sequence, Tuple

import numpy as np
import torch

from models.alignment import AlignedUtterance, BoundarySplit
from models.audio import MelSpectrogram
from models.infill import ExtendedCharSeq, MaskSpec, TTSTrainExample
from services.audio.frontend import seconds_to_frames
from services.errors import DegenerateSplit, InvalidBoundary, InvalidInput, TextOverflow
from services.infill.vocab import FILLER_ID, CharVocab


def build_extended_sequence(
    target_text: str, total_frames: int, prompt_frames: int, vocab: CharVocab
) -> ExtendedCharSeq:
    """
    Filler over the prompt, target characters front-aligned after it, filler to the end.

    Capacity is checked on encoded ids, so a character missing from the
    vocabulary costs one frame per UTF-8 byte.
    """
    if not target_text:
        raise InvalidInput("target text is empty")
    if not 0 <= prompt_frames < total_frames:
        raise InvalidInput(
            "prompt must leave at least one target frame",
            {"prompt_frames": prompt_frames, "total_frames": total_frames},
        )
    encoded = vocab.encode(target_text)
    capacity = total_frames - prompt_frames
    if len(encoded) > capacity:
        raise TextOverflow(
            f"{len(encoded)} text ids do not fit a {capacity}-frame target region",
            {"text_ids": len(encoded), "target_frames": capacity},
        )
    ids = np.full(total_frames, FILLER_ID, dtype=np.int64)
    ids[prompt_frames : prompt_frames + len(encoded)] = encoded
    return ExtendedCharSeq(ids=ids, filler_id=FILLER_ID)


def make_train_example(
    utt: AlignedUtterance, split: BoundarySplit, mel: MelSpectrogram, vocab: CharVocab
) -> TTSTrainExample:
    """
    Mask everything from the boundary frame to the end of the mel and
    condition on the target text only; the prompt's transcript is never read.
    """
    if split.utt_id != utt.utt_id:
        raise InvalidBoundary(
            "split belongs to another utterance", {"split": split.utt_id, "utt_id": utt.utt_id}
        )
    prompt_frames = seconds_to_frames(split.boundary_time, mel.config)
    if prompt_frames <= 0 or prompt_frames >= mel.n_frames:
        raise DegenerateSplit(
            f"boundary at {split.boundary_time:.3f}s leaves an empty prompt or target",
            {"utt_id": utt.utt_id, "prompt_frames": prompt_frames, "n_frames": mel.n_frames},
        )
    mask = np.zeros(mel.n_frames, dtype=bool)
    mask[prompt_frames:] = True
    z = build_extended_sequence(split.target_text, mel.n_frames, prompt_frames, vocab)
    return TTSTrainExample(mel=mel, z=z, mask=MaskSpec(mask), utt_id=utt.utt_id)


def acoustic_context(x1: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """(1 - m) * x1: the surrounding speech with the masked frames zeroed."""
    return x1.masked_fill(mask.to(torch.bool).unsqueeze(-1), 0.0)


def collate_examples(
    examples: Sequence[TTSTrainExample],
) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
    """
    Right-pad a batch. Returns x1 (B, T, n_mels), text ids (B, T), the loss
    mask (B, T) and the padding mask (B, T), True on padded frames.
    """
    lengths: List[int] = [ex.mel.n_frames for ex in examples]
    n_mels = examples[0].mel.n_mels
    batch, longest = len(examples), max(lengths)
    x1 = torch.zeros((batch, longest, n_mels), dtype=torch.float32)
    text_ids = torch.full((batch, longest), FILLER_ID, dtype=torch.long)
    mask = torch.zeros((batch, longest), dtype=torch.bool)
    padding_mask = torch.ones((batch, longest), dtype=torch.bool)
    for i, ex in enumerate(examples):
        n = lengths[i]
        x1[i, :n] = torch.from_numpy(np.asarray(ex.mel.data, dtype=np.float32))
        text_ids[i, :n] = torch.from_numpy(ex.z.ids)
        mask[i, :n] = torch.from_numpy(ex.mask.mask)
        padding_mask[i, :n] = False
    return x1, text_ids, mask, padding_mask
