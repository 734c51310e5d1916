# utils/training.py

import random
from typing import Callable

import numpy as np
import torch


def seed_everything(seed: int) -> np.random.Generator:
    """Seed python, numpy and torch; returns a numpy Generator for data sampling."""
    random.seed(seed)
    np.random.seed(seed % (2**32))
    torch.manual_seed(seed)
    return np.random.default_rng(seed)


def warmup_linear_decay(
    total_steps: int, warmup_fraction: float, start_step: int = 0
) -> Callable[[int], float]:
    """
    LR multiplier: linear warmup to 1 over `warmup_fraction` of the run,
    then linear decay to 0 at `total_steps`.

    `start_step` offsets the scheduler's own counter so a resumed run picks
    the schedule up where the checkpoint left it.
    """
    total_steps = max(total_steps, 1)
    warmup_steps = int(round(warmup_fraction * total_steps))

    def lr_lambda(step: int) -> float:
        step = step + start_step
        if warmup_steps > 0 and step < warmup_steps:
            return (step + 1) / warmup_steps
        remaining = total_steps - warmup_steps
        if remaining <= 0:
            return 1.0
        return max(0.0, (total_steps - step) / remaining)

    return lr_lambda


def build_optimizer(
    model: torch.nn.Module,
    learning_rate: float,
    weight_decay: float,
    total_steps: int,
    warmup_fraction: float,
    start_step: int = 0,
):
    optimizer = torch.optim.AdamW(
        model.parameters(), lr=learning_rate, weight_decay=weight_decay
    )
    scheduler = torch.optim.lr_scheduler.LambdaLR(
        optimizer, warmup_linear_decay(total_steps, warmup_fraction, start_step)
    )
    return optimizer, scheduler
