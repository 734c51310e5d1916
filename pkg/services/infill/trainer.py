# services/infill/trainer.py

import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch
from tqdm import tqdm

from config import AlignmentConfig, MelConfig, TTSConfig
from models.alignment import AlignedUtterance
from models.audio import MelSpectrogram
from models.infill import TTSTrainExample
from services.alignment.boundary import partition, select_boundary
from services.audio.container import load_checkpoint, save_checkpoint
from services.errors import (
    ConfigError,
    DegenerateSplit,
    DivergedError,
    InvalidDataset,
    NoEligibleBoundary,
    TextOverflow,
)
from services.flow.cfm import LatentPair, cfm_loss, sample_flow_step
from services.infill.model import InfillCondition, InfillTransformer, InfillVelocityModel
from services.infill.sequence import acoustic_context, collate_examples, make_train_example
from services.infill.vocab import CharVocab
from utils.torch_state import module_state, restore_module_state
from utils.training import build_optimizer, seed_everything

logger = logging.getLogger(__name__)

CHECKPOINT_KIND = "infill_tts"


class InfillCorpus:
    """
    Utterances with their mels, re-partitioned at a fresh random word
    boundary every epoch.
    """

    def __init__(
        self,
        items: Sequence[Tuple[AlignedUtterance, MelSpectrogram]],
        vocab: Optional[CharVocab] = None,
        alignment: Optional[AlignmentConfig] = None,
    ):
        if not items:
            raise InvalidDataset("infill corpus is empty")
        self.items = list(items)
        self.vocab = vocab or CharVocab.build(
            token.text for utt, _ in self.items for token in utt.tokens
        )
        self.alignment = alignment or AlignmentConfig()

    def __len__(self) -> int:
        return len(self.items)

    def sample_epoch(self, rng: np.random.Generator) -> List[TTSTrainExample]:
        examples = []
        for utt, mel in self.items:
            try:
                index = select_boundary(
                    utt, rng, self.alignment.min_prompt, self.alignment.min_target
                )
                examples.append(make_train_example(utt, partition(utt, index), mel, self.vocab))
            except (NoEligibleBoundary, TextOverflow, DegenerateSplit) as e:
                logger.warning(f"Skipping {utt.utt_id} this epoch: {e}")
        if not examples:
            raise InvalidDataset("no utterance in the infill corpus yields a valid split")
        return examples


@dataclass
class TTSTrainingRun:
    model: InfillTransformer
    vocab: CharVocab
    losses: List[float]
    step: int
    optimizer: Optional[torch.optim.Optimizer] = field(default=None, repr=False)


def train_tts(
    corpus: Union[InfillCorpus, Sequence[TTSTrainExample]],
    config: TTSConfig,
    vocab: Optional[CharVocab] = None,
    epochs: Optional[int] = None,
    seed: int = 0,
    resume: Optional[TTSTrainingRun] = None,
) -> TTSTrainingRun:
    """
    Masked OT-CFM training of the infilling network.

    Each step draws noise, a uniform flow step per item and a text-drop coin
    per item from one seeded generator, so a rerun reproduces the loss curve.
    """
    epochs = config.epochs if epochs is None else epochs
    if isinstance(corpus, InfillCorpus):
        vocab = vocab or corpus.vocab
    elif not corpus:
        raise InvalidDataset("infill training corpus is empty")
    if vocab is None:
        raise InvalidDataset("a CharVocab is required to train on prebuilt examples")
    rng = seed_everything(seed)

    if resume is not None:
        model, start_step, losses = resume.model, resume.step, list(resume.losses)
    else:
        n_mels = corpus.items[0][1].n_mels if isinstance(corpus, InfillCorpus) else corpus[0].mel.n_mels
        model = InfillTransformer(n_mels, vocab.size, config)
        start_step, losses = 0, []
    velocity_model = InfillVelocityModel(model)

    steps_per_epoch = -(-len(corpus) // config.batch_size)
    optimizer, scheduler = build_optimizer(
        model,
        config.learning_rate,
        config.weight_decay,
        total_steps=start_step + epochs * steps_per_epoch,
        warmup_fraction=config.warmup_fraction,
        start_step=start_step,
    )
    if resume is not None and resume.optimizer is not None:
        optimizer.load_state_dict(
            {**optimizer.state_dict(), "state": resume.optimizer.state_dict()["state"]}
        )

    logger.info(
        f"Training infill model on {len(corpus)} utterances "
        f"({sum(p.numel() for p in model.parameters())} parameters, {epochs} epochs)"
    )
    step = start_step
    for epoch in range(epochs):
        model.train()
        examples = corpus.sample_epoch(rng) if isinstance(corpus, InfillCorpus) else list(corpus)
        order = rng.permutation(len(examples))
        total, count = 0.0, 0
        batches = range(0, len(order), config.batch_size)
        for start in tqdm(batches, desc=f"tts {epoch + 1}/{epochs}", disable=None, leave=False):
            batch = [examples[i] for i in order[start : start + config.batch_size]]
            x1, text_ids, mask, padding_mask = collate_examples(batch)
            x0 = torch.from_numpy(rng.standard_normal(x1.shape).astype(np.float32))
            t = torch.from_numpy(sample_flow_step(rng, len(batch)).astype(np.float32))
            drop = torch.from_numpy(rng.random(len(batch)) < config.text_drop_prob)

            cond = InfillCondition(acoustic_context(x1, mask), text_ids, padding_mask).drop_text(drop)
            loss = cfm_loss(velocity_model, LatentPair(x0, x1), t, cond, mask)
            if not torch.isfinite(loss):
                raise DivergedError(f"infill loss became {loss.item()}", step)
            optimizer.zero_grad()
            loss.backward()
            torch.nn.utils.clip_grad_norm_(model.parameters(), config.grad_clip)
            optimizer.step()
            scheduler.step()
            step += 1
            total += loss.item() * len(batch)
            count += len(batch)
        losses.append(total / count)
        logger.info(f"Epoch {epoch + 1}/{epochs}: masked CFM loss {losses[-1]:.6f}")

    model.eval()
    return TTSTrainingRun(model=model, vocab=vocab, losses=losses, step=step, optimizer=optimizer)


def save_tts(
    path: Union[str, Path], run: TTSTrainingRun, extra: Optional[Dict[str, Any]] = None
) -> None:
    config = {
        "n_mels": run.model.n_mels,
        "vocab": run.vocab.to_dict(),
        "tts": asdict(run.model.config),
    }
    save_checkpoint(
        path,
        CHECKPOINT_KIND,
        config,
        module_state(run.model, run.optimizer),
        {**(extra or {}), "step": run.step, "losses": run.losses},
    )


def load_tts(
    path: Union[str, Path],
    mel_config: Optional[MelConfig] = None,
    with_optimizer: bool = False,
) -> TTSTrainingRun:
    if not Path(path).exists():
        raise ConfigError(f"TTS checkpoint not found: {path}", {"path": str(path)})
    kind, config, state, extra = load_checkpoint(path)
    if kind != CHECKPOINT_KIND:
        raise ConfigError(f"{path} holds a {kind} checkpoint, not an infill model")
    mel_config = mel_config or MelConfig()
    if config["n_mels"] != mel_config.n_mels:
        raise ConfigError(
            "checkpoint was trained on a different mel width",
            {"checkpoint": config["n_mels"], "config": mel_config.n_mels},
        )
    vocab = CharVocab.from_dict(config["vocab"])
    tts_config = TTSConfig(**config["tts"])
    model = InfillTransformer(config["n_mels"], vocab.size, tts_config)
    optimizer = None
    if with_optimizer:
        optimizer = torch.optim.AdamW(
            model.parameters(), lr=tts_config.learning_rate, weight_decay=tts_config.weight_decay
        )
    restore_module_state(model, state, optimizer)
    model.eval()
    logger.info(f"Loaded infill model from {path} (step {extra.get('step', 0)})")
    return TTSTrainingRun(
        model=model,
        vocab=vocab,
        losses=list(extra.get("losses", [])),
        step=int(extra.get("step", 0)),
        optimizer=optimizer,
    )
