# services/flow/base.py

from abc import ABC, abstractmethod
from typing import Any, Callable, Optional, Union

import torch

TimeLike = Union[float, torch.Tensor]


class VelocityModel(ABC):
    """Time-dependent vector field v(x_t, t, cond) with the shape of x_t."""

    @abstractmethod
    def evaluate(self, x_t: torch.Tensor, t: TimeLike, cond: Any) -> torch.Tensor:
        pass

    def null_condition(self, cond: Any) -> Any:
        """Conditioning for the unconditional branch of guidance."""
        return None

    def __call__(self, x_t: torch.Tensor, t: TimeLike, cond: Any = None) -> torch.Tensor:
        return self.evaluate(x_t, t, cond)


class FunctionVelocityModel(VelocityModel):
    """Wraps a plain callable, e.g. an analytic field used as an oracle."""

    def __init__(
        self,
        fn: Callable[[torch.Tensor, TimeLike, Any], torch.Tensor],
        null_fn: Optional[Callable[[Any], Any]] = None,
    ):
        self.fn = fn
        self.null_fn = null_fn

    def evaluate(self, x_t: torch.Tensor, t: TimeLike, cond: Any) -> torch.Tensor:
        return self.fn(x_t, t, cond)

    def null_condition(self, cond: Any) -> Any:
        if self.null_fn is None:
            return None
        return self.null_fn(cond)
