# services/flow/cfm.py

import logging
from dataclasses import dataclass
from typing import Any, Optional, Union

import numpy as np
import torch

from services.errors import InvalidInput, InvalidMask, ShapeError
from services.flow.base import TimeLike, VelocityModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LatentPair:
    """Noise sample x0 and data sample x1 of identical shape."""

    x0: torch.Tensor
    x1: torch.Tensor

    def __post_init__(self):
        if self.x0.shape != self.x1.shape:
            raise ShapeError(
                "x0 and x1 must share a shape",
                {"x0": tuple(self.x0.shape), "x1": tuple(self.x1.shape)},
            )
        if not (torch.isfinite(self.x0).all() and torch.isfinite(self.x1).all()):
            raise InvalidInput("latent pair entries must be finite")


def _broadcast_time(t: TimeLike, like: torch.Tensor) -> TimeLike:
    """Per-item times of shape (B,) broadcast over the trailing dims of `like`."""
    if not torch.is_tensor(t):
        if not 0.0 <= t <= 1.0:
            raise InvalidInput(f"flow step must lie in [0, 1], got {t}")
        return t
    if ((t < 0) | (t > 1)).any():
        raise InvalidInput("flow steps must lie in [0, 1]")
    if t.ndim == 0:
        return t.to(like.dtype)
    return t.to(like.dtype).reshape(t.shape + (1,) * (like.ndim - t.ndim))


def ot_interpolate(pair: LatentPair, t: TimeLike) -> torch.Tensor:
    """Straight-line path (1 - t) x0 + t x1."""
    t = _broadcast_time(t, pair.x0)
    return (1 - t) * pair.x0 + t * pair.x1


def velocity_target(pair: LatentPair) -> torch.Tensor:
    return pair.x1 - pair.x0


def _expand_mask(mask: torch.Tensor, like: torch.Tensor) -> torch.Tensor:
    mask = mask.to(torch.bool)
    if mask.shape == like.shape:
        return mask
    if mask.shape != like.shape[: mask.ndim]:
        raise ShapeError(
            "mask must cover the leading (frame) dims of the latent",
            {"mask": tuple(mask.shape), "latent": tuple(like.shape)},
        )
    return mask.reshape(mask.shape + (1,) * (like.ndim - mask.ndim)).expand_as(like)


def cfm_loss(
    model: VelocityModel,
    pair: LatentPair,
    t: TimeLike,
    cond: Any = None,
    mask: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """
    Mean squared error between v(psi_t, t, cond) and x1 - x0.

    With a frame mask the mean runs over masked entries only.
    """
    prediction = model.evaluate(ot_interpolate(pair, t), t, cond)
    if prediction.shape != pair.x1.shape:
        raise ShapeError(
            "velocity model output has the wrong shape",
            {"output": tuple(prediction.shape), "expected": tuple(pair.x1.shape)},
        )
    squared = (prediction - velocity_target(pair)) ** 2
    if mask is None:
        return squared.mean()
    selected = _expand_mask(mask, squared)
    if not selected.any():
        raise InvalidMask("loss mask selects no frames")
    return squared[selected].mean()


def sample_flow_step(
    rng: np.random.Generator, size: Optional[Union[int, tuple]] = None
) -> Union[float, np.ndarray]:
    """Uniform flow steps on [0, 1)."""
    if size is None:
        return float(rng.random())
    return rng.random(size)
