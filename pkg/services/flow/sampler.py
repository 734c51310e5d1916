# services/flow/sampler.py

import logging
from typing import Any

import numpy as np
import torch

from services.errors import DivergedError, InvalidCoefficient, InvalidInput, ShapeError
from services.flow.base import VelocityModel

logger = logging.getLogger(__name__)


def sway(t, s: float):
    """
    Warp flow time: t + s * (cos(pi t / 2) - 1 + t).

    The cosine is evaluated as sin(pi (1 - t) / 2) so that t = 0 and t = 1
    map to themselves exactly in floating point.
    """
    if abs(s) > 1.0:
        raise InvalidCoefficient(f"sway coefficient must satisfy |s| <= 1, got {s}", {"s": s})
    t = np.asarray(t, dtype=np.float64)
    warped = t + s * (np.sin(np.pi / 2 * (1.0 - t)) - 1.0 + t)
    return float(warped) if warped.ndim == 0 else warped


def time_grid(nfe: int, sway_coeff: float) -> np.ndarray:
    """nfe + 1 increasing solver times from 0 to 1."""
    if nfe < 1:
        raise InvalidInput(f"nfe must be >= 1, got {nfe}")
    return sway(np.linspace(0.0, 1.0, nfe + 1), sway_coeff)


def cfg_combine(v_cond: torch.Tensor, v_uncond: torch.Tensor, strength: float) -> torch.Tensor:
    if v_cond.shape != v_uncond.shape:
        raise ShapeError(
            "guidance branches must share a shape",
            {"cond": tuple(v_cond.shape), "uncond": tuple(v_uncond.shape)},
        )
    if strength == 1.0:
        return v_cond
    if strength == 0.0:
        return v_uncond
    return v_uncond + strength * (v_cond - v_uncond)


@torch.no_grad()
def euler_solve(
    model: VelocityModel,
    x0: torch.Tensor,
    nfe: int,
    cond: Any = None,
    cfg_strength: float = 1.0,
    sway_coeff: float = 0.0,
) -> torch.Tensor:
    """Explicit Euler integration of the guided field over the swayed time grid."""
    grid = time_grid(nfe, sway_coeff)
    guided = cfg_strength != 1.0
    null_cond = model.null_condition(cond) if guided else None

    x = x0
    for step in range(nfe):
        t = float(grid[step])
        dt = float(grid[step + 1] - grid[step])
        velocity = model.evaluate(x, t, cond)
        if guided:
            velocity = cfg_combine(velocity, model.evaluate(x, t, null_cond), cfg_strength)
        x = x + dt * velocity
        if not torch.isfinite(x).all():
            raise DivergedError(f"Euler solve produced non-finite values at step {step + 1}", step + 1)
    logger.debug(f"Euler solve finished: nfe={nfe}, cfg={cfg_strength}, sway={sway_coeff}")
    return x
