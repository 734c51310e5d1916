# services/rate/trainer.py

import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import torch
from tqdm import tqdm

from config import MelConfig, PredictorConfig
from models.alignment import Language
from models.audio import MelSpectrogram
from models.rate import Granularity, RateExample
from services.alignment.manifest import read_jsonl
from services.audio.container import load_checkpoint, load_mel, save_checkpoint
from services.audio.frontend import seconds_to_frames
from services.errors import ConfigError, ConfigMismatch, DivergedError, InvalidDataset
from services.rate.categories import rate_to_category
from services.rate.losses import gce_loss_from_logits
from services.rate.model import (
    RatePredictorModel,
    build_rate_predictor,
    collate_mels,
    predict_proba,
)
from utils.torch_state import module_state, restore_module_state
from utils.training import build_optimizer, seed_everything

logger = logging.getLogger(__name__)

CHECKPOINT_KIND = "rate_predictor"


@dataclass
class RateTrainingRun:
    model: RatePredictorModel
    losses: List[float]
    step: int
    optimizer: Optional[torch.optim.Optimizer] = field(default=None, repr=False)


def _check_dataset(dataset: Sequence[RateExample]) -> Granularity:
    if not dataset:
        raise InvalidDataset("rate dataset is empty")
    granularities = {Granularity(ex.granularity) for ex in dataset}
    if len(granularities) > 1:
        raise InvalidDataset(
            "rate dataset mixes granularities",
            {"granularities": sorted(g.value for g in granularities)},
        )
    return granularities.pop()


def random_crop(
    mel: MelSpectrogram, config: PredictorConfig, rng: np.random.Generator
) -> np.ndarray:
    """Random crop of crop_min_s..crop_max_s seconds; shorter mels are kept whole."""
    data = mel.data
    if config.crop_min_s is None or config.crop_max_s is None:
        return data
    min_frames = seconds_to_frames(config.crop_min_s, mel.config)
    max_frames = seconds_to_frames(config.crop_max_s, mel.config)
    if mel.n_frames <= min_frames:
        return data
    length = int(rng.integers(min_frames, min(max_frames, mel.n_frames) + 1))
    start = int(rng.integers(0, mel.n_frames - length + 1))
    return data[start : start + length]


def epoch_size(dataset: Sequence[RateExample], config: PredictorConfig) -> int:
    if not config.balance_languages:
        return len(dataset)
    counts: Dict[str, int] = {}
    for ex in dataset:
        counts[ex.language.value] = counts.get(ex.language.value, 0) + 1
    return max(counts.values()) * len(counts)


def epoch_order(
    dataset: Sequence[RateExample], config: PredictorConfig, rng: np.random.Generator
) -> np.ndarray:
    """
    Shuffled example indices for one epoch. With balance_languages every
    language contributes as many draws as the largest one (sampling with
    replacement for the smaller groups).
    """
    if not config.balance_languages:
        return rng.permutation(len(dataset))
    groups: Dict[str, List[int]] = {}
    for index, ex in enumerate(dataset):
        groups.setdefault(str(ex.language.value), []).append(index)
    target = max(len(indices) for indices in groups.values())
    order = []
    for language in sorted(groups):
        indices = np.asarray(groups[language])
        if len(indices) == target:
            order.append(rng.permutation(indices))
        else:
            order.append(rng.choice(indices, size=target, replace=True))
    return rng.permutation(np.concatenate(order))


def train_rate_predictor(
    dataset: Sequence[RateExample],
    config: PredictorConfig,
    epochs: Optional[int] = None,
    seed: int = 0,
    resume: Optional[RateTrainingRun] = None,
) -> RateTrainingRun:
    """
    Train (or continue training) a speaking-rate classifier with the GCE loss.

    Returns the model, the per-epoch mean loss and the global step count.
    """
    granularity = _check_dataset(dataset)
    epochs = config.epochs if epochs is None else epochs
    mel_config = dataset[0].mel.config
    rng = seed_everything(seed)

    if resume is not None:
        model = resume.model
        if model.granularity != granularity:
            raise InvalidDataset(
                "resumed predictor and dataset disagree on granularity",
                {"model": model.granularity.value, "dataset": granularity.value},
            )
        start_step, losses = resume.step, list(resume.losses)
    else:
        model = build_rate_predictor(granularity, config, mel_config)
        start_step, losses = 0, []
    categories = model.categories
    labels = [rate_to_category(ex.true_rate, categories) for ex in dataset]

    steps_per_epoch = -(-epoch_size(dataset, config) // config.batch_size)
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
        f"Training {granularity.value} rate predictor on {len(dataset)} examples "
        f"({categories.n_classes} classes, {epochs} epochs from step {start_step})"
    )
    step = start_step
    floor = float(mel_config.log_floor)
    for epoch in range(epochs):
        model.train()
        order = epoch_order(dataset, config, rng)
        total, count = 0.0, 0
        batches = range(0, len(order), config.batch_size)
        for start in tqdm(batches, desc=f"rate {epoch + 1}/{epochs}", disable=None, leave=False):
            indices = order[start : start + config.batch_size]
            crops = [random_crop(dataset[i].mel, config, rng) for i in indices]
            batch, padding_mask = collate_mels(crops, pad_value=floor)
            targets = torch.tensor([labels[i] for i in indices], dtype=torch.long)

            loss = gce_loss_from_logits(
                model.logits(batch, padding_mask),
                targets,
                config.sigma,
                config.normalize_soft_labels,
            )
            if not torch.isfinite(loss):
                raise DivergedError(f"rate predictor loss became {loss.item()}", step)
            optimizer.zero_grad()
            loss.backward()
            torch.nn.utils.clip_grad_norm_(model.parameters(), config.grad_clip)
            optimizer.step()
            scheduler.step()
            step += 1
            total += loss.item() * len(indices)
            count += len(indices)
        losses.append(total / count)
        logger.info(f"Epoch {epoch + 1}/{epochs}: mean GCE {losses[-1]:.6f}")

    model.eval()
    return RateTrainingRun(model=model, losses=losses, step=step, optimizer=optimizer)


def bin_accuracy(
    model: RatePredictorModel,
    examples: Sequence[RateExample],
    tolerance: int = 1,
    batch_size: int = 64,
) -> float:
    """Share of examples whose predicted class is within `tolerance` bins of the label."""
    if not examples:
        raise InvalidDataset("no examples to score")
    hits = 0
    for start in range(0, len(examples), batch_size):
        chunk = examples[start : start + batch_size]
        probs = predict_proba(model, [ex.mel for ex in chunk])
        predicted = np.argmax(probs, axis=1)
        for ex, c in zip(chunk, predicted):
            if abs(int(c) - rate_to_category(ex.true_rate, model.categories)) <= tolerance:
                hits += 1
    return hits / len(examples)


def save_rate_predictor(
    path: Union[str, Path],
    run: RateTrainingRun,
    extra: Optional[Dict[str, Any]] = None,
) -> None:
    model = run.model
    config = {
        "granularity": model.granularity.value,
        "n_mels": model.n_mels,
        "log_floor": float(model.mel_floor),
        "predictor": asdict(model.config),
    }
    save_checkpoint(
        path,
        CHECKPOINT_KIND,
        config,
        module_state(model, run.optimizer),
        {**(extra or {}), "step": run.step, "losses": run.losses},
    )


def load_rate_predictor(
    path: Union[str, Path],
    mel_config: Optional[MelConfig] = None,
    with_optimizer: bool = False,
) -> RateTrainingRun:
    """Rebuild a predictor (and optionally its optimizer moments) from a checkpoint."""
    if not Path(path).exists():
        raise ConfigError(f"Rate predictor checkpoint not found: {path}", {"path": str(path)})
    kind, config, state, extra = load_checkpoint(path)
    if kind != CHECKPOINT_KIND:
        raise ConfigError(f"{path} holds a {kind} checkpoint, not a rate predictor")
    mel_config = mel_config or MelConfig()
    if config["n_mels"] != mel_config.n_mels:
        raise ConfigError(
            "checkpoint was trained on a different mel width",
            {"checkpoint": config["n_mels"], "config": mel_config.n_mels},
        )
    stored_floor = config.get("log_floor", mel_config.log_floor)
    if not math.isclose(stored_floor, mel_config.log_floor, rel_tol=1e-6):
        raise ConfigMismatch(
            "checkpoint was trained with a different mel log floor",
            {"checkpoint": stored_floor, "config": mel_config.log_floor},
        )
    predictor_config = PredictorConfig(**config["predictor"])
    model = build_rate_predictor(Granularity(config["granularity"]), predictor_config, mel_config)
    optimizer = None
    if with_optimizer:
        optimizer = torch.optim.AdamW(
            model.parameters(),
            lr=predictor_config.learning_rate,
            weight_decay=predictor_config.weight_decay,
        )
    restore_module_state(model, state, optimizer)
    model.eval()
    logger.info(f"Loaded {model.granularity.value} rate predictor from {path} (step {extra.get('step', 0)})")
    return RateTrainingRun(
        model=model,
        losses=list(extra.get("losses", [])),
        step=int(extra.get("step", 0)),
        optimizer=optimizer,
    )


def load_rate_examples(
    path: Union[str, Path], mel_config: Optional[MelConfig] = None
) -> List[RateExample]:
    """Read a {"mel", "rate", "granularity"} JSON Lines manifest; mel paths are relative to it."""
    path = Path(path)
    examples = []
    for line_no, record in read_jsonl(path):
        try:
            mel_path = path.parent / record["mel"]
            examples.append(
                RateExample(
                    mel=load_mel(mel_path, mel_config),
                    true_rate=float(record["rate"]),
                    granularity=Granularity(record["granularity"]),
                    language=Language(record.get("lang", Language.OTHER.value)),
                    utt_id=record.get("utt_id", mel_path.stem),
                )
            )
        except (KeyError, ValueError, TypeError) as e:
            raise InvalidDataset(f"Bad rate manifest line {line_no} in {path}: {e}", {"line": line_no})
    logger.info(f"Loaded {len(examples)} rate examples from {path}")
    return examples
