# utils/torch_state.py

from typing import Dict, Optional

import numpy as np
import torch

MODEL_PREFIX = "model."
OPTIMIZER_PREFIX = "optimizer."


def module_state(
    model: torch.nn.Module, optimizer: Optional[torch.optim.Optimizer] = None
) -> Dict[str, np.ndarray]:
    """Flatten model parameters/buffers and optimizer moments into named arrays."""
    state = {
        f"{MODEL_PREFIX}{name}": value.detach().cpu().numpy()
        for name, value in model.state_dict().items()
    }
    if optimizer is not None:
        for index, slots in optimizer.state_dict()["state"].items():
            for key, value in slots.items():
                if torch.is_tensor(value):
                    state[f"{OPTIMIZER_PREFIX}{index}.{key}"] = value.detach().cpu().numpy()
    return state


def restore_module_state(
    model: torch.nn.Module,
    state: Dict[str, np.ndarray],
    optimizer: Optional[torch.optim.Optimizer] = None,
) -> None:
    model_state = {
        name[len(MODEL_PREFIX):]: torch.from_numpy(np.array(value))
        for name, value in state.items()
        if name.startswith(MODEL_PREFIX)
    }
    model.load_state_dict(model_state)

    if optimizer is None:
        return
    slots: Dict[int, Dict[str, torch.Tensor]] = {}
    for name, value in state.items():
        if not name.startswith(OPTIMIZER_PREFIX):
            continue
        index, key = name[len(OPTIMIZER_PREFIX):].split(".", 1)
        slots.setdefault(int(index), {})[key] = torch.from_numpy(np.array(value))
    if slots:
        # keep the freshly built param_groups (lr schedule is rebuilt on resume)
        current = optimizer.state_dict()
        current["state"] = slots
        optimizer.load_state_dict(current)
