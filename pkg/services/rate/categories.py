# services/rate/categories.py

import math

import numpy as np

from models.rate import Granularity, RateCategorySet
from services.errors import InvalidInput, InvalidRate

RATE_DELTA = 0.25
MAX_RATES = {
    Granularity.PHONEME: 18.0,
    Granularity.SYLLABLE: 8.0,
    Granularity.WORD: 8.0,
}


def build_category_set(granularity: Granularity) -> RateCategorySet:
    """Uniform grid {0.25, 0.5, ..., max}: 72 classes for phonemes, 32 otherwise."""
    granularity = Granularity(granularity)
    max_rate = MAX_RATES[granularity]
    n_classes = int(round(max_rate / RATE_DELTA))
    centers = tuple(RATE_DELTA * (k + 1) for k in range(n_classes))
    return RateCategorySet(
        granularity=granularity,
        delta=RATE_DELTA,
        min_rate=RATE_DELTA,
        max_rate=max_rate,
        n_classes=n_classes,
        centers=centers,
    )


def rate_to_category(rate: float, categories: RateCategorySet) -> int:
    """Nearest center; ties go to the lower center and out-of-range rates clamp."""
    if not rate > 0 or not math.isfinite(rate):
        raise InvalidRate(f"speaking rate must be positive and finite, got {rate}", {"rate": rate})
    distances = np.abs(rate - np.asarray(categories.centers))
    return int(np.argmin(distances))


def category_to_rate(index: int, categories: RateCategorySet) -> float:
    if not 0 <= index < categories.n_classes:
        raise InvalidInput(f"class index {index} outside the grid", {"n_classes": categories.n_classes})
    return categories.centers[index]


def soft_labels(c_gt: int, n_classes: int, sigma: float, normalize: bool = False) -> np.ndarray:
    """Gaussian kernel exp(-(c - c_gt)^2 / (2 sigma^2)); peak is 1 unless normalized."""
    if not 0 <= c_gt < n_classes:
        raise InvalidInput(f"class index {c_gt} outside [0, {n_classes})")
    if sigma <= 0:
        raise InvalidInput("sigma must be positive", {"sigma": sigma})
    offsets = np.arange(n_classes, dtype=np.float64) - c_gt
    labels = np.exp(-(offsets**2) / (2.0 * sigma**2))
    if normalize:
        labels = labels / labels.sum()
    return labels
