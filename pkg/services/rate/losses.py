# services/rate/losses.py

import torch
import torch.nn.functional as F

from services.errors import InvalidInput

PROB_EPS = 1e-12


def soft_label_matrix(
    targets: torch.Tensor,
    n_classes: int,
    sigma: float,
    normalize: bool = False,
    dtype: torch.dtype = torch.float32,
) -> torch.Tensor:
    """Batch of Gaussian soft labels, one row per target class index."""
    classes = torch.arange(n_classes, dtype=dtype, device=targets.device)
    offsets = classes.unsqueeze(0) - targets.to(dtype).unsqueeze(1)
    labels = torch.exp(-(offsets**2) / (2.0 * sigma**2))
    if normalize:
        labels = labels / labels.sum(dim=1, keepdim=True)
    return labels


def _check_batch(values: torch.Tensor, targets: torch.Tensor) -> None:
    if values.ndim != 2 or values.shape[0] == 0:
        raise InvalidInput("GCE needs a non-empty batch of class vectors", {"shape": tuple(values.shape)})
    if targets.shape != (values.shape[0],):
        raise InvalidInput("targets must hold one class index per batch item")


def gce_loss(
    probs: torch.Tensor,
    targets: torch.Tensor,
    sigma: float,
    normalize: bool = False,
    eps: float = PROB_EPS,
) -> torch.Tensor:
    """
    Gaussian cross-entropy on probability vectors:
    -(1/B) sum_b sum_c y_soft[c] log(max(p[c], eps)).
    """
    _check_batch(probs, targets)
    labels = soft_label_matrix(targets, probs.shape[1], sigma, normalize, dtype=probs.dtype)
    log_probs = torch.log(probs.clamp(min=eps))
    return -(labels * log_probs).sum(dim=1).mean()


def gce_loss_from_logits(
    logits: torch.Tensor, targets: torch.Tensor, sigma: float, normalize: bool = False
) -> torch.Tensor:
    """Same objective evaluated through log-softmax; used for training."""
    _check_batch(logits, targets)
    labels = soft_label_matrix(targets, logits.shape[1], sigma, normalize, dtype=logits.dtype)
    return -(labels * F.log_softmax(logits, dim=1)).sum(dim=1).mean()


def gce_logit_gradient(
    logits: torch.Tensor, targets: torch.Tensor, sigma: float, normalize: bool = False
) -> torch.Tensor:
    """Closed-form d(loss)/d(logits) = (1/B) (sum_c y_c * softmax(z) - y)."""
    _check_batch(logits, targets)
    labels = soft_label_matrix(targets, logits.shape[1], sigma, normalize, dtype=logits.dtype)
    probs = torch.softmax(logits, dim=1)
    return (labels.sum(dim=1, keepdim=True) * probs - labels) / logits.shape[0]
